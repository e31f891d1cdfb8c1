//! End-to-end checks over the bibliographic resource and identifier of the
//! running example: one DOI whose trailing period was corrected.

use std::collections::BTreeSet;
use std::path::Path;

use chrono_rdf::delta_query::{self, ChangeKind};
use chrono_rdf::sources::read_rdf_file;
use chrono_rdf::sparql::{evaluate, parse_select, Variable};
use chrono_rdf::version_query::{self, classify, explicate, QueryMode};
use chrono_rdf::{Context, Iri, Term, TimeInterval, Timestamp};

const BASE: &str = "https://github.com/opencitations/time-agnostic-library/";
const HAS_LITERAL_VALUE: &str = "http://www.essepuntato.it/2010/06/literalreification/hasLiteralValue";

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn query(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

fn ctx() -> Context {
    let data = read_rdf_file(&fixture("doi_fix_data.nq")).unwrap();
    let prov = read_rdf_file(&fixture("doi_fix_prov.ttl")).unwrap();
    Context::in_memory(&data, &prov)
}

fn iri(path: &str) -> Iri {
    Iri::new(format!("{BASE}{path}")).unwrap()
}

fn t(s: &str) -> Timestamp {
    Timestamp::parse(s).unwrap()
}

fn doi_at(ctx: &Context, time: &str) -> Vec<String> {
    let (v, _) = ctx.materialize_at(&iri("id/80178"), t(time)).unwrap();
    v.graphs
        .iter()
        .filter(|q| q.predicate().as_str() == HAS_LITERAL_VALUE)
        .map(|q| q.object().as_literal().unwrap().value().to_string())
        .collect()
}

#[test]
fn identifier_literal_before_and_after_correction() {
    let ctx = ctx();
    assert_eq!(doi_at(&ctx, "2021-10-15T00:00:00"), ["10.1111/j.1365-2648.2012.06023.x."]);
    assert_eq!(doi_at(&ctx, "2021-10-20T00:00:00"), ["10.1111/j.1365-2648.2012.06023.x"]);
}

#[test]
fn materialization_reports_metadata_and_other_snapshots() {
    let ctx = ctx();
    let (v, others) = ctx.materialize_at(&iri("id/80178"), t("2021-10-15T00:00:00")).unwrap();
    assert!(v.reconstructed);
    assert_eq!(v.snapshot.id, iri("id/80178/prov/se/1"));
    assert_eq!(
        v.snapshot.primary_source.as_ref().map(Iri::as_str),
        Some("https://api.crossref.org/works/10.1007/s11192-019-03265-y")
    );
    assert_eq!(v.graphs.len(), 3);
    assert_eq!(others.len(), 1);
    assert_eq!(others[0].id, iri("id/80178/prov/se/2"));
}

#[test]
fn before_creation_is_an_error() {
    let err = ctx().materialize_at(&iri("id/80178"), t("2020-01-01T00:00:00")).unwrap_err();
    assert_eq!(err.code(), "BeforeCreation");
}

#[test]
fn cited_identifiers_query_is_fully_joined_and_discovers_cited_resources() {
    let ctx = ctx();
    let plan = classify(&parse_select(&query("cited_identifiers.rq")).unwrap()).unwrap();
    assert_eq!(plan.joined.len(), 3);
    assert!(plan.isolated.is_empty());
    let ex = explicate(&plan, &ctx, TimeInterval::UNBOUNDED, true).unwrap();
    for n in 301102..=301106 {
        assert!(ex.entities.contains(&iri(&format!("br/{n}"))));
    }
    assert!(ex.entities.contains(&iri("br/86766")));
}

#[test]
fn trailing_dot_query_isolates_the_literal_pattern() {
    let plan = classify(&parse_select(&query("trailing_dot.rq")).unwrap()).unwrap();
    assert!(plan.joined.is_empty());
    assert_eq!(plan.isolated.len(), 1);
    let known: Vec<_> = plan.known_terms_per_isolated.values().next().unwrap().iter().cloned().collect();
    assert_eq!(known, [Term::iri(HAS_LITERAL_VALUE).unwrap()]);
}

#[test]
fn trailing_dot_query_finds_the_trailing_period_only_before_the_fix() {
    let ctx = ctx();
    let out = version_query::run(&query("trailing_dot.rq"), QueryMode::CrossVersion, TimeInterval::UNBOUNDED, &ctx).unwrap();
    let keys: Vec<String> = out.results.keys().map(|k| k.to_string()).collect();
    assert_eq!(keys, ["2021-10-10T23:44:45", "2021-10-19T19:55:55"]);
    let first = &out.results[&t("2021-10-10T23:44:45")];
    let literal = Variable::new("literal");
    let values: Vec<String> = first.column(&literal).map(|t| t.as_literal().unwrap().value().to_string()).collect();
    assert_eq!(values, ["10.1111/j.1365-2648.2012.06023.x."]);
    assert!(out.results[&t("2021-10-19T19:55:55")].is_empty());
}

#[test]
fn single_version_now_equals_plain_evaluation() {
    let ctx = ctx();
    let data = read_rdf_file(&fixture("doi_fix_data.nq")).unwrap();
    for name in ["cited_identifiers.rq", "trailing_dot.rq", "identifiers.rq"] {
        let text = query(name);
        let now = Timestamp::now();
        let out = version_query::run(&text, QueryMode::SingleVersion(now), TimeInterval::UNBOUNDED, &ctx).unwrap();
        assert_eq!(out.results.len(), 1);
        let expected = evaluate(&parse_select(&text).unwrap(), &data).unwrap();
        assert_eq!(out.results[&now], expected, "{name}");
    }
}

#[test]
fn identifier_strings_modified() {
    let ctx = ctx();
    let props: BTreeSet<Iri> = [Iri::new(HAS_LITERAL_VALUE).unwrap()].into();
    let report = delta_query::run(&query("identifiers.rq"), &props, TimeInterval::UNBOUNDED, &ctx).unwrap();
    assert_eq!(report.records.len(), 1);
    let r = &report.records[0];
    assert_eq!(r.entity, iri("id/80178"));
    assert_eq!(r.snapshot, iri("id/80178/prov/se/2"));
    assert_eq!(r.time.to_string(), "2021-10-19T19:55:55");
    assert_eq!(r.kind, ChangeKind::Modified);
    assert_eq!(r.delta.added.len(), 1);
    assert_eq!(r.delta.removed.len(), 1);
    let removed = r.delta.removed.iter().next().unwrap();
    assert!(removed.object().as_literal().unwrap().value().ends_with('.'));

    let nothing: BTreeSet<Iri> = [Iri::new("http://example.org/unused").unwrap()].into();
    let report = delta_query::run(&query("identifiers.rq"), &nothing, TimeInterval::UNBOUNDED, &ctx).unwrap();
    assert!(report.records.is_empty());
}

#[test]
fn creation_delta_adds_the_first_version() {
    let ctx = ctx();
    let entity = iri("id/80178");
    let history = ctx.require_history(&entity).unwrap();
    let current = ctx.current_graph(&entity).unwrap();
    let d = delta_query::get_delta(&entity, t("2021-10-10T23:44:45"), &current, &history).unwrap();
    assert!(d.removed.is_empty());
    assert_eq!(d.added.len(), 3);
    let err = delta_query::get_delta(&entity, t("2021-10-11T00:00:00"), &current, &history).unwrap_err();
    assert_eq!(err.code(), "NoSuchSnapshot");
}

#[test]
fn text_search_finds_the_correction() {
    let ctx = ctx().with_text_index(true);
    let known: BTreeSet<Term> = [Term::iri(HAS_LITERAL_VALUE).unwrap()].into();
    let hits = ctx.search_deltas(&known).unwrap();
    assert_eq!(hits.len(), 1);
    assert_eq!(hits[0].entity, iri("id/80178"));
    assert_eq!(hits[0].snapshot, iri("id/80178/prov/se/2"));
    let unknown: BTreeSet<Term> = [Term::iri("http://example.org/none").unwrap()].into();
    assert!(ctx.search_deltas(&unknown).unwrap().is_empty());
}
