//! Algebraic properties of deltas and round trips of the text formats.

use chrono_rdf::provenance::compose;
use chrono_rdf::rdf::{parse_document, serialize_nquads, DocumentFormat};
use chrono_rdf::sparql::parse_update;
use chrono_rdf::{Delta, GraphSet, Iri, Literal, Quad, Term, Triple};
use proptest::prelude::*;
use std::collections::BTreeSet;

fn term() -> impl Strategy<Value = Term> {
    prop_oneof![
        (0..6u8).prop_map(|i| Term::iri(format!("http://example.org/r/{i}")).unwrap()),
        "[a-z \"\\\\\n.é]{0,8}".prop_map(|s| Literal::string(s).into()),
        ("[a-z]{1,5}", prop_oneof![Just("en"), Just("it")]).prop_map(|(s, l)| Literal::lang(s, l).unwrap().into()),
        (0..100i32).prop_map(|n| Literal::typed(n.to_string(), Iri::new("http://www.w3.org/2001/XMLSchema#integer").unwrap()).into()),
    ]
}

fn quad() -> impl Strategy<Value = Quad> {
    (0..4u8, 0..3u8, term(), proptest::option::of(0..2u8)).prop_map(|(s, p, o, g)| {
        Quad::new(
            Triple::new(
                Term::iri(format!("http://example.org/s/{s}")).unwrap(),
                Iri::new(format!("http://example.org/p/{p}")).unwrap(),
                o,
            )
            .unwrap(),
            g.map(|g| Iri::new(format!("http://example.org/g/{g}")).unwrap()),
        )
    })
}

fn graph() -> impl Strategy<Value = GraphSet> {
    proptest::collection::vec(quad(), 0..12).prop_map(|v| v.into_iter().collect())
}

fn delta() -> impl Strategy<Value = Delta> {
    (proptest::collection::vec(quad(), 0..6), proptest::collection::vec(quad(), 0..6)).prop_map(|(d, i)| Delta::new(d, i))
}

fn as_sets(d: &Delta) -> (BTreeSet<Quad>, BTreeSet<Quad>) {
    (d.deletes().iter().cloned().collect(), d.inserts().iter().cloned().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn double_inversion_is_identity(d in delta()) {
        prop_assert_eq!(d.invert().invert(), d);
    }

    #[test]
    fn composition_equals_sequential_application(g in graph(), ds in proptest::collection::vec(delta(), 0..5)) {
        let sequential = ds.iter().fold(g.clone(), |acc, d| d.apply(&acc));
        prop_assert_eq!(compose(&ds).apply(&g), sequential);
    }

    /// Rewinding with the inverse restores the graph an exact delta was applied to.
    #[test]
    fn inverse_undoes_exact_deltas(g in graph(), extra in proptest::collection::vec(quad(), 0..6), drop in any::<proptest::sample::Index>()) {
        let inserts: Vec<Quad> = extra.into_iter().filter(|q| !g.contains(q)).collect();
        let deletes: Vec<Quad> = g.iter().skip(if g.is_empty() { 0 } else { drop.index(g.len()) }).cloned().collect();
        let d = Delta::new(deletes, inserts);
        prop_assert_eq!(d.invert().apply(&d.apply(&g)), g);
    }

    #[test]
    fn update_text_round_trips(d in delta()) {
        let parsed = parse_update(d.source_text()).unwrap();
        prop_assert_eq!(as_sets(&parsed), as_sets(&d));
    }

    #[test]
    fn nquads_round_trip(g in graph()) {
        let text = serialize_nquads(&g);
        prop_assert_eq!(parse_document(&text, DocumentFormat::NQuads, None).unwrap(), g);
    }
}
