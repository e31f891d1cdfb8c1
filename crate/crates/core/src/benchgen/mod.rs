//! Seeded generator of bibliographic datasets with OCDM provenance, together
//! with a ledger of every full version for use as a test oracle.

pub mod harness;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::provenance::{
    Delta, DeltaPair, DCTERMS_DESCRIPTION, OCO_HAS_UPDATE_QUERY, PROV_ENTITY, PROV_GENERATED_AT_TIME,
    PROV_HAD_PRIMARY_SOURCE, PROV_INVALIDATED_AT_TIME, PROV_SPECIALIZATION_OF, PROV_WAS_ATTRIBUTED_TO,
    PROV_WAS_DERIVED_FROM,
};
use crate::rdf::{serialize_nquads, GraphSet, Iri, Literal, Quad, Term, Triple, RDF_TYPE, XSD_DATE_TIME, XSD_STRING};
use crate::time::Timestamp;

pub const BASE: &str = "https://example.org/bench/";
pub const CITO_CITES: &str = "http://purl.org/spar/cito/cites";
pub const DATACITE_HAS_IDENTIFIER: &str = "http://purl.org/spar/datacite/hasIdentifier";
pub const DATACITE_IDENTIFIER: &str = "http://purl.org/spar/datacite/Identifier";
pub const DATACITE_USES_SCHEME: &str = "http://purl.org/spar/datacite/usesIdentifierScheme";
pub const DATACITE_DOI: &str = "http://purl.org/spar/datacite/doi";
pub const DATACITE_ORCID: &str = "http://purl.org/spar/datacite/orcid";
pub const DCTERMS_TITLE: &str = "http://purl.org/dc/terms/title";
pub const FABIO_EXPRESSION: &str = "http://purl.org/spar/fabio/Expression";
pub const HAS_LITERAL_VALUE: &str = "http://www.essepuntato.it/2010/06/literalreification/hasLiteralValue";
pub const RDFS_COMMENT: &str = "http://www.w3.org/2000/01/rdf-schema#comment";

/// 2021-01-01T00:00:00Z
const EPOCH: i64 = 1_609_459_200;
const DAY: i64 = 86_400;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid generator spec: {0}")]
pub struct SpecError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotDistribution {
    pub mean: f64,
    pub stdev: f64,
    pub min: usize,
    pub max: usize,
}

/// Relative frequency of each kind of change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangeMix {
    pub literal_edit: f64,
    pub triple_add: f64,
    pub triple_remove: f64,
    pub entity_delete: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub seed: u64,
    pub n_entities: usize,
    pub snapshots: SnapshotDistribution,
    pub change_mix: ChangeMix,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            seed: 42,
            n_entities: 1_000,
            snapshots: SnapshotDistribution {
                mean: 20.0,
                stdev: 8.0,
                min: 2,
                max: 35,
            },
            change_mix: ChangeMix {
                literal_edit: 0.5,
                triple_add: 0.25,
                triple_remove: 0.24,
                entity_delete: 0.01,
            },
        }
    }
}

impl GenSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        let s = &self.snapshots;
        if self.n_entities == 0 {
            return Err(SpecError("n_entities must be positive".into()));
        }
        if s.min < 1 || s.min > s.max {
            return Err(SpecError(format!("snapshot bounds [{}, {}] are invalid", s.min, s.max)));
        }
        if !(s.mean.is_finite() && s.stdev.is_finite() && s.stdev >= 0.0) {
            return Err(SpecError("snapshot mean and stdev must be finite, stdev non-negative".into()));
        }
        let m = &self.change_mix;
        let parts = [m.literal_edit, m.triple_add, m.triple_remove, m.entity_delete];
        if parts.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(SpecError("change proportions must be non-negative".into()));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(SpecError("change proportions must sum to 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityKind {
    Expression,
    Identifier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Change {
    LiteralEdit,
    TripleAdd,
    TripleRemove,
    EntityDelete,
}

/// Ground truth for one entity: every full version and the change that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityLedger {
    pub kind: EntityKind,
    pub snapshots: Vec<Iri>,
    pub times: Vec<Timestamp>,
    pub versions: Vec<GraphSet>,
    /// `deltas[0]` is the creation (everything added).
    pub deltas: Vec<DeltaPair>,
}

impl EntityLedger {
    /// Index of the version in force at `t`.
    pub fn index_at(&self, t: Timestamp) -> Option<usize> {
        self.times.partition_point(|x| *x <= t).checked_sub(1)
    }

    pub fn version_at(&self, t: Timestamp) -> Option<&GraphSet> {
        self.index_at(t).map(|k| &self.versions[k])
    }

    pub fn is_deleted(&self) -> bool {
        self.versions.last().is_some_and(GraphSet::is_empty)
    }
}

/// Every version of every generated entity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OracleLedger {
    pub entities: BTreeMap<Iri, EntityLedger>,
}

impl OracleLedger {
    /// The full dataset as it was at `t`.
    pub fn dataset_at(&self, t: Timestamp) -> GraphSet {
        let mut g = GraphSet::new();
        for e in self.entities.values() {
            if let Some(v) = e.version_at(t) {
                g.extend_from(v);
            }
        }
        g
    }

    /// The dataset at `t` restricted to the given entities.
    pub fn dataset_at_for<'a>(&self, t: Timestamp, entities: impl IntoIterator<Item = &'a Iri>) -> GraphSet {
        let mut g = GraphSet::new();
        for e in entities {
            if let Some(v) = self.entities.get(e).and_then(|l| l.version_at(t)) {
                g.extend_from(v);
            }
        }
        g
    }

    /// Every snapshot time of every entity, ascending.
    pub fn all_times(&self) -> Vec<Timestamp> {
        let set: BTreeSet<Timestamp> = self.entities.values().flat_map(|e| e.times.iter().copied()).collect();
        set.into_iter().collect()
    }

    pub fn snapshot_count(&self, entity: &Iri) -> Option<usize> {
        self.entities.get(entity).map(|e| e.snapshots.len())
    }

    /// Entities of one kind, in IRI order.
    pub fn of_kind(&self, kind: EntityKind) -> Vec<&Iri> {
        self.entities.iter().filter(|(_, e)| e.kind == kind).map(|(i, _)| i).collect()
    }
}

/// A generated dataset: current data, provenance and the oracle ledger.
#[derive(Debug, Clone)]
pub struct Generated {
    pub spec: GenSpec,
    pub data: GraphSet,
    pub provenance: GraphSet,
    pub ledger: OracleLedger,
}

impl Generated {
    /// Writes `data.nq`, `provenance.nq` and `ledger/` (one N-Quads file per
    /// version plus `index.json`) under `dir`.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir.join("ledger"))?;
        std::fs::write(dir.join("data.nq"), serialize_nquads(&self.data))?;
        std::fs::write(dir.join("provenance.nq"), serialize_nquads(&self.provenance))?;
        #[derive(Serialize)]
        struct Entry<'a> {
            entity: &'a str,
            snapshot: &'a str,
            time: String,
            file: String,
        }
        let mut index = Vec::new();
        for (n, (entity, e)) in self.ledger.entities.iter().enumerate() {
            for (k, g) in e.versions.iter().enumerate() {
                let file = format!("e{n:06}_v{:03}.nq", k + 1);
                std::fs::write(dir.join("ledger").join(&file), serialize_nquads(g))?;
                index.push(Entry {
                    entity: entity.as_str(),
                    snapshot: e.snapshots[k].as_str(),
                    time: e.times[k].to_string(),
                    file,
                });
            }
        }
        let json = serde_json::to_string_pretty(&index).map_err(std::io::Error::other)?;
        std::fs::write(dir.join("ledger").join("index.json"), json)
    }
}

fn iri(s: &str) -> Iri {
    Iri::new(s).expect("generator IRIs are absolute")
}

fn quad(s: &Iri, p: &str, o: Term, g: &Iri) -> Quad {
    Quad::new(
        Triple::new(Term::Iri(s.clone()), iri(p), o).expect("IRI subject"),
        Some(g.clone()),
    )
}

const WORDS: &[&str] = &[
    "open", "access", "citation", "nursing", "frontier", "data", "graph", "archive", "history", "provenance",
    "semantic", "journal", "review", "library", "metadata", "\"quoted\"", "café", "version", "delta", "time",
];

fn title(rng: &mut ChaCha8Rng) -> Term {
    let n = rng.random_range(2..7);
    let words: Vec<&str> = (0..n).map(|_| *WORDS.choose(rng).expect("non-empty")).collect();
    let text = words.join(" ");
    if rng.random_bool(0.3) {
        Literal::lang(text, "en").expect("valid tag").into()
    } else {
        Literal::string(text).into()
    }
}

fn identifier_value(rng: &mut ChaCha8Rng, scheme_orcid: bool) -> String {
    let mut v = if scheme_orcid {
        format!(
            "0000-000{}-{:04}-{:04}",
            rng.random_range(1..4),
            rng.random_range(0..10_000),
            rng.random_range(0..10_000)
        )
    } else {
        format!("10.{}/j.{}.{}.x", rng.random_range(1000..10_000), rng.random_range(1000..10_000), rng.random_range(0..100_000))
    };
    // Some values carry the trailing-period error found in real data.
    if rng.random_bool(0.15) {
        v.push('.');
    }
    v
}

fn sample_count(rng: &mut ChaCha8Rng, d: &SnapshotDistribution) -> usize {
    let x = if d.stdev > 0.0 {
        Normal::new(d.mean, d.stdev).expect("validated").sample(rng)
    } else {
        d.mean
    };
    (x.round().max(d.min as f64).min(d.max as f64)) as usize
}

fn pick_change(rng: &mut ChaCha8Rng, mix: &ChangeMix) -> Change {
    let x: f64 = rng.random();
    if x < mix.literal_edit {
        Change::LiteralEdit
    } else if x < mix.literal_edit + mix.triple_add {
        Change::TripleAdd
    } else if x < mix.literal_edit + mix.triple_add + mix.triple_remove {
        Change::TripleRemove
    } else {
        Change::EntityDelete
    }
}

struct Draft {
    iri: Iri,
    kind: EntityKind,
    graph: Iri,
    orcid: bool,
    times: Vec<Timestamp>,
    versions: Vec<GraphSet>,
    deltas: Vec<DeltaPair>,
}

/// Generates a dataset for `spec`. The same spec always yields the same output.
pub fn generate(spec: &GenSpec) -> Result<Generated, SpecError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_br = spec.n_entities.div_ceil(2);
    let n_id = spec.n_entities - n_br;
    let br_graph = iri(&format!("{BASE}br/"));
    let id_graph = iri(&format!("{BASE}id/"));
    let br: Vec<Iri> = (1..=n_br).map(|i| iri(&format!("{BASE}br/{i}"))).collect();
    let ids: Vec<Iri> = (1..=n_id).map(|i| iri(&format!("{BASE}id/{i}"))).collect();

    let mut drafts = Vec::with_capacity(spec.n_entities);
    for (i, e) in br.iter().enumerate() {
        let mut g = GraphSet::new();
        g.insert(quad(e, RDF_TYPE, Term::Iri(iri(FABIO_EXPRESSION)), &br_graph));
        g.insert(quad(e, DCTERMS_TITLE, title(&mut rng), &br_graph));
        if let Some(id) = ids.get(i) {
            g.insert(quad(e, DATACITE_HAS_IDENTIFIER, Term::Iri(id.clone()), &br_graph));
        }
        let cited = rng.random_range(1..5).min(n_br - 1);
        for target in br.choose_multiple(&mut rng, cited + 1).filter(|t| *t != e).take(cited) {
            g.insert(quad(e, CITO_CITES, Term::Iri(target.clone()), &br_graph));
        }
        drafts.push(Draft {
            iri: e.clone(),
            kind: EntityKind::Expression,
            graph: br_graph.clone(),
            orcid: false,
            times: Vec::new(),
            versions: vec![g],
            deltas: Vec::new(),
        });
    }
    for e in &ids {
        let orcid = rng.random_bool(0.2);
        let mut g = GraphSet::new();
        g.insert(quad(e, RDF_TYPE, Term::Iri(iri(DATACITE_IDENTIFIER)), &id_graph));
        let scheme = if orcid { DATACITE_ORCID } else { DATACITE_DOI };
        g.insert(quad(e, DATACITE_USES_SCHEME, Term::Iri(iri(scheme)), &id_graph));
        g.insert(quad(e, HAS_LITERAL_VALUE, Literal::string(identifier_value(&mut rng, orcid)).into(), &id_graph));
        drafts.push(Draft {
            iri: e.clone(),
            kind: EntityKind::Identifier,
            graph: id_graph.clone(),
            orcid,
            times: Vec::new(),
            versions: vec![g],
            deltas: Vec::new(),
        });
    }

    for d in &mut drafts {
        let n = sample_count(&mut rng, &spec.snapshots);
        let start = EPOCH + rng.random_range(0..60) * DAY;
        d.times = (0..n as i64)
            .map(|k| Timestamp::from_unix(start + k * DAY + rng.random_range(0..72_000)))
            .collect();
        let mut changes: Vec<Change> = (1..n).map(|_| pick_change(&mut rng, &spec.change_mix)).collect();
        // A deletion ends the chain, so it is moved to the last change.
        if changes.contains(&Change::EntityDelete) {
            for c in changes.iter_mut() {
                if *c == Change::EntityDelete {
                    *c = Change::LiteralEdit;
                }
            }
            *changes.last_mut().expect("non-empty") = Change::EntityDelete;
        }
        d.deltas.push(DeltaPair {
            added: d.versions[0].clone(),
            removed: GraphSet::new(),
        });
        for (k, change) in changes.into_iter().enumerate() {
            let prev = d.versions.last().expect("creation version").clone();
            let (added, removed) = apply_change(&mut rng, d, &br, &prev, change, k);
            let next = prev.difference(&removed).union(&added);
            d.deltas.push(DeltaPair { added, removed });
            d.versions.push(next);
        }
    }

    let mut data = GraphSet::new();
    let mut provenance = GraphSet::new();
    let mut ledger = OracleLedger::default();
    let agents: Vec<Iri> = (1..=5).map(|i| iri(&format!("https://orcid.org/0000-0000-0000-000{i}"))).collect();
    for d in drafts {
        // Replaying every change from the first version must give the last one.
        let replayed = d.deltas[1..]
            .iter()
            .fold(d.versions[0].clone(), |g, p| g.difference(&p.removed).union(&p.added));
        assert_eq!(&replayed, d.versions.last().expect("versions"), "ledger replay for {}", d.iri);

        data.extend_from(d.versions.last().expect("versions"));
        let prov_graph = iri(&format!("{}/prov/", d.iri.as_str()));
        let snapshots: Vec<Iri> = (1..=d.times.len()).map(|k| iri(&format!("{}/prov/se/{k}", d.iri.as_str()))).collect();
        for (k, se) in snapshots.iter().enumerate() {
            let time = |t: Timestamp| -> Term { Literal::typed(t.to_string(), iri(XSD_DATE_TIME)).into() };
            let text = |s: String| -> Term { Literal::typed(s, iri(XSD_STRING)).into() };
            provenance.insert(quad(se, RDF_TYPE, Term::Iri(iri(PROV_ENTITY)), &prov_graph));
            provenance.insert(quad(se, PROV_SPECIALIZATION_OF, Term::Iri(d.iri.clone()), &prov_graph));
            provenance.insert(quad(se, PROV_GENERATED_AT_TIME, time(d.times[k]), &prov_graph));
            provenance.insert(quad(se, PROV_WAS_ATTRIBUTED_TO, Term::Iri(agents.choose(&mut rng).expect("agents").clone()), &prov_graph));
            if let Some(next) = d.times.get(k + 1) {
                provenance.insert(quad(se, PROV_INVALIDATED_AT_TIME, time(*next), &prov_graph));
            }
            let verb = if k == 0 {
                provenance.insert(quad(se, PROV_HAD_PRIMARY_SOURCE, Term::Iri(iri("https://api.crossref.org/")), &prov_graph));
                "created"
            } else {
                provenance.insert(quad(se, PROV_WAS_DERIVED_FROM, Term::Iri(snapshots[k - 1].clone()), &prov_graph));
                let p = &d.deltas[k];
                let update = Delta::new(p.removed.iter().cloned().collect(), p.added.iter().cloned().collect());
                provenance.insert(quad(se, OCO_HAS_UPDATE_QUERY, text(update.source_text().to_string()), &prov_graph));
                if d.versions[k].is_empty() {
                    "deleted"
                } else {
                    "modified"
                }
            };
            provenance.insert(quad(
                se,
                DCTERMS_DESCRIPTION,
                text(format!("The entity '{}' has been {verb}.", d.iri.as_str())),
                &prov_graph,
            ));
        }
        ledger.entities.insert(
            d.iri.clone(),
            EntityLedger {
                kind: d.kind,
                snapshots,
                times: d.times,
                versions: d.versions,
                deltas: d.deltas,
            },
        );
    }
    Ok(Generated {
        spec: *spec,
        data,
        provenance,
        ledger,
    })
}

/// One change to `prev`, as (added, removed). Changes that cannot apply fall
/// back to a literal edit so every snapshot records an effective change.
fn apply_change(
    rng: &mut ChaCha8Rng,
    d: &Draft,
    br: &[Iri],
    prev: &GraphSet,
    change: Change,
    k: usize,
) -> (GraphSet, GraphSet) {
    let e = &d.iri;
    let with = |p: &str| -> Vec<Quad> { prev.iter().filter(|q| q.predicate().as_str() == p).cloned().collect() };
    match (change, d.kind) {
        (Change::EntityDelete, _) => (GraphSet::new(), prev.clone()),
        (Change::TripleAdd, EntityKind::Expression) => {
            let cited: BTreeSet<Term> = with(CITO_CITES).iter().map(|q| q.object().clone()).collect();
            let fresh: Vec<&Iri> = br.iter().filter(|b| *b != e && !cited.contains(&Term::Iri((*b).clone()))).collect();
            match fresh.choose(rng) {
                Some(b) => ([quad(e, CITO_CITES, Term::Iri((*b).clone()), &d.graph)].into_iter().collect(), GraphSet::new()),
                None => apply_change(rng, d, br, prev, Change::LiteralEdit, k),
            }
        }
        (Change::TripleAdd, EntityKind::Identifier) => {
            let note = quad(e, RDFS_COMMENT, Literal::string(format!("note {k}")).into(), &d.graph);
            ([note].into_iter().collect(), GraphSet::new())
        }
        (Change::TripleRemove, kind) => {
            let p = if kind == EntityKind::Expression { CITO_CITES } else { RDFS_COMMENT };
            let candidates = with(p);
            match candidates.choose(rng) {
                Some(q) => (GraphSet::new(), [q.clone()].into_iter().collect()),
                None => apply_change(rng, d, br, prev, Change::TripleAdd, k),
            }
        }
        (Change::LiteralEdit, kind) => {
            let p = if kind == EntityKind::Expression { DCTERMS_TITLE } else { HAS_LITERAL_VALUE };
            let old = with(p);
            let new_value: Term = match kind {
                EntityKind::Expression => title(rng),
                EntityKind::Identifier => {
                    // Mostly toggle the trailing period, as curators do.
                    let current = old.first().and_then(|q| q.object().as_literal()).map(|l| l.value().to_string());
                    match current {
                        Some(v) if rng.random_bool(0.6) => {
                            let v = v.strip_suffix('.').map(str::to_string).unwrap_or_else(|| format!("{v}."));
                            Literal::string(v).into()
                        }
                        _ => Literal::string(identifier_value(rng, d.orcid)).into(),
                    }
                }
            };
            let q = quad(e, p, new_value, &d.graph);
            if old.contains(&q) {
                // Same value drawn again: nudge it so the edit is effective.
                let mut text = q.object().as_literal().map(|l| l.value().to_string()).unwrap_or_default();
                text.push_str(" (rev)");
                let q = quad(e, p, Literal::string(text).into(), &d.graph);
                return ([q].into_iter().collect(), old.into_iter().collect());
            }
            ([q].into_iter().collect(), old.into_iter().collect())
        }
    }
}

/// Query texts in the shapes of the benchmark: chains from a known subject
/// and patterns over unknown subjects.
pub mod queries {
    use super::*;

    /// Cited resources of a known expression and their identifiers.
    pub fn known_subject(entity: &Iri) -> String {
        format!(
            "PREFIX literal: <http://www.essepuntato.it/2010/06/literalreification/>\n\
             PREFIX cito: <http://purl.org/spar/cito/>\n\
             PREFIX datacite: <http://purl.org/spar/datacite/>\n\
             SELECT DISTINCT ?br ?id ?value\nWHERE {{\n  {entity} cito:cites ?br.\n  ?br datacite:hasIdentifier ?id.\n  \
             OPTIONAL {{?id literal:hasLiteralValue ?value.}}\n}}\n"
        )
    }

    /// Identifiers using the ORCID scheme.
    pub fn unknown_subject() -> String {
        "PREFIX datacite: <http://purl.org/spar/datacite/>\nSELECT DISTINCT ?s\nWHERE {\n  ?s datacite:usesIdentifierScheme datacite:orcid.\n}\n"
            .to_string()
    }

    /// A varied corpus of `count` queries drawn with `seed` against `ledger`.
    pub fn corpus(ledger: &OracleLedger, seed: u64, count: usize) -> Vec<String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let br = ledger.of_kind(EntityKind::Expression);
        let ids = ledger.of_kind(EntityKind::Identifier);
        let mut out = Vec::with_capacity(count);
        for i in 0..count {
            let e = br.choose(&mut rng).expect("expressions exist");
            let q = match i % 10 {
                0 => known_subject(e),
                1 => format!("SELECT ?p ?o WHERE {{ {e} ?p ?o }}"),
                2 => format!(
                    "SELECT ?x ?t WHERE {{ {e} <{CITO_CITES}> ?x . ?x <{DCTERMS_TITLE}> ?t }}"
                ),
                3 => unknown_subject(),
                4 => format!(
                    "SELECT ?id ?v WHERE {{ ?id <{HAS_LITERAL_VALUE}> ?v . FILTER REGEX(?v, \"\\\\.$\") }}"
                ),
                5 => format!("SELECT ?s WHERE {{ ?s <{CITO_CITES}> {e} }}"),
                6 => format!(
                    "SELECT ?x ?id ?v WHERE {{ {e} <{CITO_CITES}> ?x . ?x <{DATACITE_HAS_IDENTIFIER}> ?id . ?id <{HAS_LITERAL_VALUE}> ?v }}"
                ),
                7 => {
                    let id = ids.choose(&mut rng).expect("identifiers exist");
                    format!("SELECT ?br ?t WHERE {{ ?br <{DATACITE_HAS_IDENTIFIER}> {id} . ?br <{DCTERMS_TITLE}> ?t }}")
                }
                8 => format!(
                    "SELECT DISTINCT ?s WHERE {{ ?s <{RDF_TYPE}> <{DATACITE_IDENTIFIER}> . ?s <{RDFS_COMMENT}> ?c }}"
                ),
                _ => format!(
                    "SELECT ?x ?v WHERE {{ {e} <{DATACITE_HAS_IDENTIFIER}> ?id . ?id <{HAS_LITERAL_VALUE}> ?v . ?x <{CITO_CITES}> {e} . FILTER CONTAINS(?v, \"10.\") }}"
                ),
            };
            out.push(q);
        }
        out
    }

    /// Properties worth filtering deltas on.
    pub fn properties() -> Vec<Iri> {
        [CITO_CITES, DCTERMS_TITLE, HAS_LITERAL_VALUE, RDFS_COMMENT, DATACITE_USES_SCHEME]
            .iter()
            .map(|p| iri(p))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> GenSpec {
        GenSpec {
            seed,
            n_entities: 40,
            ..GenSpec::default()
        }
    }

    #[test]
    fn same_seed_same_output() {
        let a = generate(&small(7)).unwrap();
        let b = generate(&small(7)).unwrap();
        assert_eq!(serialize_nquads(&a.data), serialize_nquads(&b.data));
        assert_eq!(serialize_nquads(&a.provenance), serialize_nquads(&b.provenance));
        let c = generate(&small(8)).unwrap();
        assert_ne!(serialize_nquads(&a.provenance), serialize_nquads(&c.provenance));
    }

    #[test]
    fn counts_respect_bounds() {
        let g = generate(&small(1)).unwrap();
        for e in g.ledger.entities.values() {
            assert!((2..=35).contains(&e.snapshots.len()));
            assert_eq!(e.versions.len(), e.snapshots.len());
            assert!(e.times.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = GenSpec::default();
        s.change_mix.literal_edit = 0.9;
        assert!(s.validate().is_err());
        let mut s = GenSpec::default();
        s.snapshots.min = 0;
        assert!(s.validate().is_err());
        assert!(generate(&GenSpec { n_entities: 0, ..GenSpec::default() }).is_err());
    }
}
