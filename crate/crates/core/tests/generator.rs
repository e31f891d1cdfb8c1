//! Properties of the synthetic dataset and its ledger.

mod common;

use chrono_rdf::provenance::load_history;
use chrono_rdf::rdf::{parse_document, DocumentFormat};
use chrono_rdf::sparql::parse_update;
use common::*;

#[test]
fn snapshot_counts_follow_the_distribution() {
    let g = seed42();
    let s = g.spec.snapshots;
    let counts: Vec<f64> = g.ledger.entities.values().map(|e| e.times.len() as f64).collect();
    assert!(counts.iter().all(|&c| c >= s.min as f64 && c <= s.max as f64));
    let mean = counts.iter().sum::<f64>() / counts.len() as f64;
    let slack = 2.0 * s.stdev / (counts.len() as f64).sqrt();
    assert!((mean - s.mean).abs() <= slack, "sample mean {mean} outside {} ± {slack}", s.mean);
}

#[test]
fn every_history_loads_and_replays() {
    let g = small(3, 150);
    for (e, l) in &g.ledger.entities {
        let h = load_history(e, &g.provenance).unwrap();
        assert_eq!(h.len(), l.times.len());
        let mut state = l.versions[0].clone();
        for (k, s) in h.snapshots().iter().enumerate().skip(1) {
            let update = s.update.as_ref().expect("later snapshots carry an update");
            assert_eq!(&parse_update(update.source_text()).unwrap(), update);
            state = update.apply(&state);
            assert_eq!(state, l.versions[k], "{e} version {k}");
        }
        assert_eq!(state, chrono_rdf::materializer::current_graph(e, &g.data), "{e}");
    }
}

#[test]
fn written_files_are_deterministic_and_parse_back() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    small(4, 30).write_to(a.path()).unwrap();
    small(4, 30).write_to(b.path()).unwrap();
    for name in ["data.nq", "provenance.nq", "ledger/index.json"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        assert_eq!(x, std::fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let g = small(4, 30);
    let text = std::fs::read_to_string(a.path().join("data.nq")).unwrap();
    assert_eq!(parse_document(&text, DocumentFormat::NQuads, None).unwrap(), g.data);
    let index: serde_json::Value = serde_json::from_slice(&std::fs::read(a.path().join("ledger/index.json")).unwrap()).unwrap();
    let versions: usize = g.ledger.entities.values().map(|e| e.versions.len()).sum();
    assert_eq!(index.as_array().unwrap().len(), versions);
}

#[test]
fn deletions_are_planted() {
    let g = seed42();
    let deleted = g.ledger.entities.values().filter(|e| e.is_deleted()).count();
    assert!(deleted > 0);
    for (e, l) in g.ledger.entities.iter().filter(|(_, l)| l.is_deleted()) {
        assert!(chrono_rdf::materializer::current_graph(e, &g.data).is_empty());
        assert!(l.versions[..l.versions.len() - 1].iter().all(|v| !v.is_empty()));
    }
}
