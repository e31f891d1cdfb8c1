//! Oracles shared by the integration and acceptance tests. Each check returns
//! a short summary on success and the first disagreement on failure.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use chrono_rdf::benchgen::{generate, queries, GenSpec, Generated, OracleLedger};
use chrono_rdf::delta_query::{self, ChangeKind};
use chrono_rdf::rdf::graph_diff;
use chrono_rdf::sources::read_rdf_file;
use chrono_rdf::sparql::{evaluate, parse_select, PatternTerm, TriplePattern};
use chrono_rdf::version_query::{self, classify, QueryMode};
use chrono_rdf::{Cache, Context, GraphSet, Iri, TimeInterval, Timestamp};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<String, String>;

/// The seed-42 dataset at default scale, generated once per test binary.
pub fn seed42() -> &'static Generated {
    static G: OnceLock<Generated> = OnceLock::new();
    G.get_or_init(|| generate(&GenSpec::default()).expect("default spec is valid"))
}

pub fn small(seed: u64, n_entities: usize) -> Generated {
    generate(&GenSpec {
        seed,
        n_entities,
        ..GenSpec::default()
    })
    .unwrap()
}

pub fn ctx(g: &Generated) -> Context {
    Context::in_memory(&g.data, &g.provenance)
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

pub fn doi_fix_ctx() -> Context {
    let data = read_rdf_file(&fixture("doi_fix_data.nq")).unwrap();
    let prov = read_rdf_file(&fixture("doi_fix_prov.ttl")).unwrap();
    Context::in_memory(&data, &prov)
}

/// Windows used by the query corpora: unbounded plus a few slices of the
/// generated timeline.
pub fn intervals(ledger: &OracleLedger, seed: u64, count: usize) -> Vec<TimeInterval> {
    let times = ledger.all_times();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            if i % 3 == 0 {
                return TimeInterval::UNBOUNDED;
            }
            let a = rng.random_range(0..times.len());
            let b = (a + rng.random_range(1..times.len() / 4)).min(times.len() - 1);
            TimeInterval::new(Some(times[a]), Some(times[b])).unwrap()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Materialization

/// Random (entity, time) pairs compared with the ledger's versions.
pub fn materialization_oracle(g: &Generated, pairs: usize, seed: u64) -> Check {
    let ctx = ctx(g);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entities: Vec<&Iri> = g.ledger.entities.keys().collect();
    for _ in 0..pairs {
        let e = *entities.choose(&mut rng).unwrap();
        let l = &g.ledger.entities[e];
        let k = rng.random_range(0..l.times.len());
        // Either a snapshot time or an instant inside the version's validity.
        let t = match l.times.get(k + 1) {
            Some(next) if rng.random_bool(0.5) => Timestamp::from_unix(rng.random_range(l.times[k].unix()..next.unix())),
            _ => l.times[k],
        };
        let (v, _) = ctx.materialize_at(e, t).map_err(|err| format!("{e} at {t}: {err}"))?;
        if &v.graphs != l.version_at(t).unwrap() {
            return Err(format!("{e} at {t}: materialized graph differs from the ledger"));
        }
    }
    Ok(format!("{pairs} pairs equal"))
}

/// Materializing every version of an entity applies each of its n−1 updates once.
pub fn chain_application_count(g: &Generated, entities: usize) -> Check {
    for e in g.ledger.entities.keys().take(entities) {
        let ctx = ctx(g);
        let n = g.ledger.entities[e].times.len();
        let versions = ctx.materialize_all(e, TimeInterval::UNBOUNDED).map_err(|err| err.to_string())?;
        let applied = ctx.materializer().applications();
        if versions.len() != n || applied != (n - 1) as u64 {
            return Err(format!("{e}: {n} snapshots, {} versions, {applied} applications", versions.len()));
        }
        if !versions.iter().map(|v| &v.graphs).eq(&g.ledger.entities[e].versions) {
            return Err(format!("{e}: version chain differs from the ledger"));
        }
    }
    Ok(format!("{entities} chains with n-1 applications"))
}

// ---------------------------------------------------------------------------
// Classification

/// Joined patterns by exhaustive path search: a pattern is joined when a
/// chain of patterns sharing variables leads from it to one with an IRI
/// subject. Optional patterns take part like required ones.
pub fn brute_force_joined(patterns: &[TriplePattern]) -> Vec<bool> {
    let shares = |a: &TriplePattern, b: &TriplePattern| a.variables().any(|v| b.variables().any(|w| v == w));
    (0..patterns.len())
        .map(|start| {
            let mut seen = vec![false; patterns.len()];
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(i) = queue.pop_front() {
                if matches!(patterns[i].subject, PatternTerm::Term(ref t) if t.as_iri().is_some()) {
                    return true;
                }
                for j in 0..patterns.len() {
                    if !seen[j] && shares(&patterns[i], &patterns[j]) {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
            false
        })
        .collect()
}

/// Whether some set of isolated patterns, closed under variable sharing,
/// has no ground predicate or object to search for.
pub fn brute_force_unbounded(patterns: &[TriplePattern], joined: &[bool]) -> bool {
    let shares = |a: &TriplePattern, b: &TriplePattern| a.variables().any(|v| b.variables().any(|w| v == w));
    (0..patterns.len()).filter(|&i| !joined[i]).any(|start| {
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for j in 0..patterns.len() {
                if shares(&patterns[i], &patterns[j]) && seen.insert(j) {
                    queue.push_back(j);
                }
            }
        }
        seen.iter().all(|&i| patterns[i].known_terms().is_empty())
    })
}

pub fn classification_corpus() -> Vec<(String, String)> {
    let read = |n: &str| std::fs::read_to_string(fixture(n)).unwrap();
    let e = "<https://example.org/bench/br/1>";
    let p = |s: &str| format!("<http://example.org/p/{s}>");
    vec![
        ("cited identifiers".into(), read("cited_identifiers.rq")),
        ("trailing dot".into(), read("trailing_dot.rq")),
        ("known expression".into(), queries::known_subject(&Iri::new("https://example.org/bench/br/1").unwrap())),
        ("unknown subject".into(), queries::unknown_subject()),
        ("inverse link".into(), format!("SELECT * WHERE {{ ?x {} {e} . ?x {} ?y }}", p("a"), p("b"))),
        ("two components".into(), format!("SELECT * WHERE {{ {e} {} ?x . ?y {} \"v\" }}", p("a"), p("b"))),
        ("unbounded".into(), "SELECT * WHERE { ?s ?p ?o }".into()),
        ("unbounded beside joined".into(), format!("SELECT * WHERE {{ {e} {} ?x . ?s ?p ?o }}", p("a"))),
        ("variable predicate chain".into(), format!("SELECT * WHERE {{ {e} ?p ?x . ?x ?q ?y . ?y {} ?z }}", p("c"))),
        ("optional bridge".into(), format!("SELECT * WHERE {{ {e} {} ?x . OPTIONAL {{ ?x {} ?y }} ?z {} ?y }}", p("a"), p("b"), p("c"))),
        ("isolated pair".into(), format!("SELECT * WHERE {{ ?a {} ?b . ?b {} ?c }}", p("a"), p("b"))),
        ("ground-free member with ground partner".into(), format!("SELECT * WHERE {{ ?s ?p ?o . ?o {} ?x }}", p("a"))),
    ]
}

pub fn classification_oracle() -> Check {
    let corpus = classification_corpus();
    for (name, text) in &corpus {
        let q = parse_select(text).map_err(|e| format!("{name}: {e}"))?;
        let joined = brute_force_joined(&q.patterns);
        let unbounded = brute_force_unbounded(&q.patterns, &joined);
        match classify(&q) {
            Err(e) if e.code() == "UnboundedQuery" && unbounded => {}
            Err(e) => return Err(format!("{name}: unexpected {e}")),
            Ok(_) if unbounded => return Err(format!("{name}: unbounded query accepted")),
            Ok(plan) => {
                for (i, p) in q.patterns.iter().enumerate() {
                    if plan.is_joined(i) != joined[i] {
                        return Err(format!("{name}: pattern {p} classified differently"));
                    }
                }
            }
        }
    }
    Ok(format!("{} queries agree", corpus.len()))
}

// ---------------------------------------------------------------------------
// Cross-version queries

pub fn cv_corpus(g: &Generated) -> Vec<(String, TimeInterval)> {
    let qs = queries::corpus(&g.ledger, 5, 20);
    let ivs = intervals(&g.ledger, 5, 20);
    qs.into_iter().zip(ivs).collect()
}

/// Every timeline point equals evaluation on the ledger's dataset at that
/// time, restricted to the relevant entities. With `full` it must also equal
/// evaluation over every entity at a sample of points.
pub fn cv_oracle(g: &Generated, corpus: &[(String, TimeInterval)], full: bool) -> Check {
    let mut keys = 0;
    for (q, interval) in corpus {
        let parsed = parse_select(q).unwrap();
        let out = version_query::run(q, QueryMode::CrossVersion, *interval, &ctx(g)).map_err(|e| format!("{q}: {e}"))?;
        let expected_keys: BTreeSet<Timestamp> = out
            .relevant
            .iter()
            .filter_map(|e| g.ledger.entities.get(e))
            .flat_map(|l| l.times.iter().copied())
            .filter(|t| interval.contains(*t))
            .collect();
        if !out.results.keys().copied().eq(expected_keys.iter().copied()) {
            return Err(format!("{q}: timeline keys differ"));
        }
        for (t, got) in &out.results {
            let expected = evaluate(&parsed, &g.ledger.dataset_at_for(*t, &out.relevant)).unwrap();
            if &expected != got {
                return Err(format!("{q}: answer at {t} differs"));
            }
        }
        if full {
            for t in out.results.keys().step_by(out.results.len() / 5 + 1) {
                let expected = evaluate(&parsed, &g.ledger.dataset_at(*t)).unwrap();
                if expected != out.results[t] {
                    return Err(format!("{q}: answer at {t} misses entities"));
                }
            }
        }
        keys += out.results.len();
    }
    Ok(format!("{} queries, {keys} timeline points equal", corpus.len()))
}

// ---------------------------------------------------------------------------
// Delta queries

pub fn delta_corpus(g: &Generated) -> Vec<(String, BTreeSet<Iri>, TimeInterval)> {
    let qs = queries::corpus(&g.ledger, 9, 20);
    let ivs = intervals(&g.ledger, 9, 20);
    let props = queries::properties();
    qs.into_iter()
        .zip(ivs)
        .enumerate()
        .map(|(i, (q, iv))| {
            let filter: BTreeSet<Iri> = match i % 4 {
                0 | 1 => BTreeSet::new(),
                2 => [props[i % props.len()].clone()].into(),
                _ => props.iter().take(3).cloned().collect(),
            };
            (q, filter, iv)
        })
        .collect()
}

type OracleRecord = (Timestamp, Iri, Iri, GraphSet, GraphSet, ChangeKind);

/// Consecutive-version diffs of the ledger for the given entities.
pub fn diff_records(ledger: &OracleLedger, entities: &BTreeSet<Iri>, props: &BTreeSet<Iri>, interval: TimeInterval) -> Vec<OracleRecord> {
    let mut out = Vec::new();
    for e in entities {
        let Some(l) = ledger.entities.get(e) else { continue };
        for k in 1..l.versions.len() {
            if !interval.contains(l.times[k]) {
                continue;
            }
            let d = graph_diff(&l.versions[k], &l.versions[k - 1]);
            let touches = props.is_empty() || d.added.iter().chain(&d.removed).any(|q| props.contains(q.predicate()));
            if !touches {
                continue;
            }
            let kind = if l.versions[k].is_empty() { ChangeKind::Deleted } else { ChangeKind::Modified };
            out.push((l.times[k], e.clone(), l.snapshots[k].clone(), d.added, d.removed, kind));
        }
    }
    out.sort_by(|a, b| (a.0, &a.1, &a.2).cmp(&(b.0, &b.1, &b.2)));
    out
}

/// Entities a query must reach: subjects bound by the required patterns over
/// the union of every version that overlaps the interval.
pub fn must_reach(g: &Generated, query: &str, interval: TimeInterval) -> BTreeSet<Iri> {
    let mut parsed = parse_select(query).unwrap();
    parsed.patterns.retain(|p| !p.is_optional());
    parsed.filters.clear();
    parsed.projected = parsed.pattern_variables();
    let mut union = GraphSet::new();
    for l in g.ledger.entities.values() {
        for k in 0..l.versions.len() {
            let until = l.times.get(k + 1).copied();
            if interval.overlaps_validity(l.times[k], until) {
                union.extend_from(&l.versions[k]);
            }
        }
    }
    let solutions = evaluate(&parsed, &union).unwrap();
    let mut out: BTreeSet<Iri> = parsed.patterns.iter().filter_map(|p| p.subject.as_iri().cloned()).collect();
    for p in &parsed.patterns {
        if let PatternTerm::Var(v) = &p.subject {
            out.extend(solutions.column(v).filter_map(|t| t.as_iri().cloned()));
        }
    }
    out
}

pub fn delta_oracle(g: &Generated, corpus: &[(String, BTreeSet<Iri>, TimeInterval)]) -> Check {
    let mut records = 0;
    let mut deleted = 0;
    let mut absent = 0;
    for (q, props, interval) in corpus {
        let report = delta_query::run(q, props, *interval, &ctx(g)).map_err(|e| format!("{q}: {e}"))?;
        if let Some(e) = must_reach(g, q, *interval).iter().find(|e| !report.relevant.contains(*e)) {
            return Err(format!("{q}: {e} not found relevant"));
        }
        let expected = diff_records(&g.ledger, &report.relevant, props, *interval);
        let got: Vec<OracleRecord> = report
            .records
            .iter()
            .map(|r| (r.time, r.entity.clone(), r.snapshot.clone(), r.delta.added.clone(), r.delta.removed.clone(), r.kind))
            .collect();
        if got != expected {
            let first = got.iter().zip(&expected).position(|(a, b)| a != b).unwrap_or(got.len().min(expected.len()));
            return Err(format!("{q}: {} records vs {} expected, first difference at {first}", got.len(), expected.len()));
        }
        records += got.len();
        deleted += got.iter().filter(|r| r.5 == ChangeKind::Deleted).count();
        absent += got.iter().filter(|r| g.ledger.entities[&r.1].is_deleted()).count();
    }
    if deleted == 0 {
        return Err("no deletion was exercised".into());
    }
    Ok(format!("{} queries, {records} records ({deleted} deletions, {absent} on entities absent now)", corpus.len()))
}

// ---------------------------------------------------------------------------
// Cache and index transparency

/// Canonical rendering of a cross-version answer.
pub fn cache_oracle(g: &Generated, corpus: &[(String, TimeInterval)], dir: &Path) -> Check {
    let open = || Cache::open(dir).map_err(|e| e.to_string());
    let mut hits = 0;
    for (q, interval) in corpus {
        let plain = version_query::run(q, QueryMode::CrossVersion, *interval, &ctx(g)).map_err(|e| e.to_string())?;
        // Each run is dropped once compared; long timelines are large.
        let first = version_query::run(q, QueryMode::CrossVersion, *interval, &ctx(g).with_cache(open()?)).map_err(|e| e.to_string())?;
        if first.results != plain.results {
            return Err(format!("{q}: first cached answer differs"));
        }
        drop(first);
        let second_ctx = ctx(g).with_cache(open()?);
        let second = version_query::run(q, QueryMode::CrossVersion, *interval, &second_ctx).map_err(|e| e.to_string())?;
        if second.results != plain.results {
            return Err(format!("{q}: rerun from the cache differs"));
        }
        let rebuilds = second_ctx.stats().cache_rebuilds;
        if rebuilds != 0 {
            return Err(format!("{q}: second run rebuilt {rebuilds} versions"));
        }
        hits += second_ctx.stats().cache_hits;
    }
    Ok(format!("{} queries identical, 0 rebuilds on rerun, {hits} hits", corpus.len()))
}

pub fn index_oracle(g: &Generated, corpus: &[(String, TimeInterval)]) -> Check {
    // Lookups: every predicate and a sample of objects from the data.
    let mut terms: Vec<BTreeSet<chrono_rdf::Term>> = Vec::new();
    let mut seen = HashSet::new();
    for q in g.data.iter() {
        if seen.insert(q.predicate().clone()) {
            terms.push([chrono_rdf::Term::Iri(q.predicate().clone())].into());
        }
    }
    for q in g.data.iter().step_by(97) {
        terms.push([chrono_rdf::Term::Iri(q.predicate().clone()), q.object().clone()].into());
    }
    let (scan, index) = (ctx(g), ctx(g).with_text_index(true));
    for known in &terms {
        let a: Vec<_> = scan.search_deltas(known).map_err(|e| e.to_string())?.into_iter().map(|h| (h.entity, h.snapshot)).collect();
        let b: Vec<_> = index.search_deltas(known).map_err(|e| e.to_string())?.into_iter().map(|h| (h.entity, h.snapshot)).collect();
        if a != b {
            return Err(format!("lookup of {known:?}: {} scanned hits vs {} indexed", a.len(), b.len()));
        }
    }
    for (q, interval) in corpus {
        let a = version_query::run(q, QueryMode::CrossVersion, *interval, &scan).map_err(|e| e.to_string())?;
        let b = version_query::run(q, QueryMode::CrossVersion, *interval, &index).map_err(|e| e.to_string())?;
        if a.results != b.results || a.relevant != b.relevant {
            return Err(format!("{q}: answer changes with the index"));
        }
        let props = BTreeSet::new();
        let a = delta_query::run(q, &props, *interval, &scan).map_err(|e| e.to_string())?;
        let b = delta_query::run(q, &props, *interval, &index).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("{q}: change report changes with the index"));
        }
    }
    Ok(format!("{} lookups and {} queries unchanged", terms.len(), corpus.len()))
}
