//! Snapshot chains recorded with the OpenCitations Data Model: one provenance
//! entity per state of a data entity, linked to its predecessor and carrying
//! the SPARQL update that produced it.

mod delta;

use std::collections::{BTreeMap, HashMap};

use sha2::{Digest, Sha256};

pub use delta::{compose, Delta};

use crate::rdf::{BlankNode, GraphSet, Iri, Quad, Term};
use crate::sparql::{parse_update, SparqlError};
use crate::time::Timestamp;

pub const PROV: &str = "http://www.w3.org/ns/prov#";
pub const PROV_SPECIALIZATION_OF: &str = "http://www.w3.org/ns/prov#specializationOf";
pub const PROV_GENERATED_AT_TIME: &str = "http://www.w3.org/ns/prov#generatedAtTime";
pub const PROV_INVALIDATED_AT_TIME: &str = "http://www.w3.org/ns/prov#invalidatedAtTime";
pub const PROV_WAS_ATTRIBUTED_TO: &str = "http://www.w3.org/ns/prov#wasAttributedTo";
pub const PROV_HAD_PRIMARY_SOURCE: &str = "http://www.w3.org/ns/prov#hadPrimarySource";
/// Spelling used in some OCDM documentation; accepted as a synonym.
pub const PROV_HAS_PRIMARY_SOURCE: &str = "http://www.w3.org/ns/prov#hasPrimarySource";
pub const PROV_WAS_DERIVED_FROM: &str = "http://www.w3.org/ns/prov#wasDerivedFrom";
pub const PROV_ENTITY: &str = "http://www.w3.org/ns/prov#Entity";
pub const DCTERMS_DESCRIPTION: &str = "http://purl.org/dc/terms/description";
pub const OCO_HAS_UPDATE_QUERY: &str = "https://w3id.org/oc/ontology/hasUpdateQuery";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProvenanceError {
    #[error("no provenance snapshots for {0}")]
    NoHistory(String),
    #[error("snapshot {snapshot}: {reason}")]
    InvalidSnapshot { snapshot: String, reason: String },
    #[error("broken snapshot chain for {entity}: {reason}")]
    BrokenChain { entity: String, reason: String },
    #[error("snapshot {snapshot} has an unreadable update: {source}")]
    BadDelta {
        snapshot: String,
        #[source]
        source: SparqlError,
    },
}

/// One recorded state of an entity.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub id: Iri,
    pub entity: Iri,
    pub generated_at: Timestamp,
    pub invalidated_at: Option<Timestamp>,
    pub attributed_to: Option<Iri>,
    pub primary_source: Option<Iri>,
    pub derived_from: Option<Iri>,
    pub description: Option<String>,
    /// Absent exactly for the creation snapshot.
    pub update: Option<Delta>,
}

impl Snapshot {
    pub fn is_creation(&self) -> bool {
        self.update.is_none()
    }
}

/// Added and removed statements between two consecutive versions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DeltaPair {
    pub added: GraphSet,
    pub removed: GraphSet,
}

/// An entity's snapshots, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityHistory {
    entity: Iri,
    snapshots: Vec<Snapshot>,
}

impl EntityHistory {
    pub fn entity(&self) -> &Iri {
        &self.entity
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Index of the snapshot in force at `time`: the latest one generated at or before it.
    pub fn index_at(&self, time: Timestamp) -> Option<usize> {
        let n = self.snapshots.partition_point(|s| s.generated_at <= time);
        n.checked_sub(1)
    }

    pub fn index_of_time(&self, time: Timestamp) -> Option<usize> {
        self.snapshots.iter().position(|s| s.generated_at == time)
    }

    /// `[generated_at(k), generated_at(k+1))`; the last version is open-ended.
    pub fn validity(&self, k: usize) -> (Timestamp, Option<Timestamp>) {
        (
            self.snapshots[k].generated_at,
            self.snapshots.get(k + 1).map(|s| s.generated_at),
        )
    }

    /// Content hash over the ordered snapshot IRIs and update texts.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for s in &self.snapshots {
            h.update(s.id.as_str().as_bytes());
            h.update([0]);
            if let Some(u) = &s.update {
                h.update(u.source_text().as_bytes());
            }
            h.update([0]);
        }
        hex::encode(h.finalize())
    }
}

/// Collects and validates the snapshots of `entity` found anywhere in `provenance`.
pub fn load_history(entity: &Iri, provenance: &GraphSet) -> Result<EntityHistory, ProvenanceError> {
    let target = Term::Iri(entity.clone());
    let ids: Vec<&Term> = provenance
        .iter()
        .filter(|q| q.predicate().as_str() == PROV_SPECIALIZATION_OF && q.object() == &target)
        .map(Quad::subject)
        .collect();
    let quads = provenance.iter().filter(|q| ids.contains(&q.subject()));
    history_from_quads(entity, quads)
}

/// Builds the history of `entity` from the statements describing its snapshots.
/// Statements about other subjects are ignored.
pub fn history_from_quads<'a>(
    entity: &Iri,
    quads: impl IntoIterator<Item = &'a Quad>,
) -> Result<EntityHistory, ProvenanceError> {
    let target = Term::Iri(entity.clone());
    let mut by_subject: BTreeMap<&Iri, Vec<&Quad>> = BTreeMap::new();
    for q in quads {
        if let Term::Iri(s) = q.subject() {
            by_subject.entry(s).or_default().push(q);
        }
    }
    let mut snapshots = Vec::new();
    for (id, props) in &by_subject {
        let is_snapshot = props
            .iter()
            .any(|q| q.predicate().as_str() == PROV_SPECIALIZATION_OF && q.object() == &target);
        if is_snapshot {
            snapshots.push(read_snapshot(entity, id, props)?);
        }
    }
    if snapshots.is_empty() {
        return Err(ProvenanceError::NoHistory(entity.as_str().to_string()));
    }
    let snapshots = order_chain(entity, snapshots)?;
    Ok(EntityHistory {
        entity: entity.clone(),
        snapshots,
    })
}

fn read_snapshot(entity: &Iri, id: &Iri, props: &[&Quad]) -> Result<Snapshot, ProvenanceError> {
    let invalid = |reason: String| ProvenanceError::InvalidSnapshot {
        snapshot: id.as_str().to_string(),
        reason,
    };
    let values = |predicate: &str| -> Vec<&Term> {
        let mut v: Vec<&Term> = props
            .iter()
            .filter(|q| q.predicate().as_str() == predicate)
            .map(|q| q.object())
            .collect();
        v.sort();
        v.dedup();
        v
    };
    let single = |predicate: &str| -> Result<Option<&Term>, ProvenanceError> {
        match values(predicate).as_slice() {
            [] => Ok(None),
            [one] => Ok(Some(*one)),
            _ => Err(invalid(format!("multiple values for <{predicate}>"))),
        }
    };
    let time = |predicate: &str| -> Result<Option<Timestamp>, ProvenanceError> {
        match single(predicate)? {
            None => Ok(None),
            Some(Term::Literal(l)) => Timestamp::parse(l.value())
                .map(Some)
                .map_err(|e| invalid(e.to_string())),
            Some(other) => Err(invalid(format!("<{predicate}> is not a literal: {other}"))),
        }
    };
    let iri = |predicate: &str| -> Result<Option<Iri>, ProvenanceError> {
        match single(predicate)? {
            None => Ok(None),
            Some(Term::Iri(i)) => Ok(Some(i.clone())),
            Some(other) => Err(invalid(format!("<{predicate}> is not an IRI: {other}"))),
        }
    };
    let text = |predicate: &str| -> Result<Option<String>, ProvenanceError> {
        match single(predicate)? {
            None => Ok(None),
            Some(Term::Literal(l)) => Ok(Some(l.value().to_string())),
            Some(other) => Err(invalid(format!("<{predicate}> is not a literal: {other}"))),
        }
    };

    let generated_at = time(PROV_GENERATED_AT_TIME)?.ok_or_else(|| invalid("missing prov:generatedAtTime".into()))?;
    let invalidated_at = time(PROV_INVALIDATED_AT_TIME)?;
    if invalidated_at.is_some_and(|t| t < generated_at) {
        return Err(invalid("invalidated before it was generated".into()));
    }
    let primary_source = match iri(PROV_HAD_PRIMARY_SOURCE)? {
        Some(s) => Some(s),
        None => iri(PROV_HAS_PRIMARY_SOURCE)?,
    };
    let update = match text(OCO_HAS_UPDATE_QUERY)? {
        None => None,
        Some(raw) => Some(parse_snapshot_update(&raw, id)?),
    };
    Ok(Snapshot {
        id: id.clone(),
        entity: entity.clone(),
        generated_at,
        invalidated_at,
        attributed_to: iri(PROV_WAS_ATTRIBUTED_TO)?,
        primary_source,
        derived_from: iri(PROV_WAS_DERIVED_FROM)?,
        description: text(DCTERMS_DESCRIPTION)?,
        update,
    })
}

/// Parses the update string recorded on `snapshot`.
pub fn parse_snapshot_update(text: &str, snapshot: &Iri) -> Result<Delta, ProvenanceError> {
    let parsed = parse_update(text).map_err(|source| ProvenanceError::BadDelta {
        snapshot: snapshot.as_str().to_string(),
        source,
    })?;
    Ok(scope_blank_nodes(&parsed, snapshot))
}

/// Blank labels in an update are local to it; prefix them with a hash of the
/// snapshot IRI so that different snapshots never share a label.
fn scope_blank_nodes(delta: &Delta, snapshot: &Iri) -> Delta {
    if !delta.quads().any(|q| q.subject().as_blank().is_some() || q.object().as_blank().is_some()) {
        return delta.clone();
    }
    let digest = Sha256::digest(snapshot.as_str().as_bytes());
    let tag = hex::encode(&digest[..4]);
    let rename = |t: &Term| -> Term {
        match t {
            Term::Blank(b) => Term::Blank(BlankNode::new(format!("{tag}_{}", b.label())).unwrap_or_else(|_| b.clone())),
            other => other.clone(),
        }
    };
    let map = |quads: &[Quad]| -> Vec<Quad> {
        quads
            .iter()
            .map(|q| {
                let triple = crate::rdf::Triple::new(rename(q.subject()), q.predicate().clone(), rename(q.object()))
                    .unwrap_or_else(|_| q.triple.clone());
                Quad::new(triple, q.graph.clone())
            })
            .collect()
    };
    Delta::new(map(delta.deletes()), map(delta.inserts()))
}

fn order_chain(entity: &Iri, mut snapshots: Vec<Snapshot>) -> Result<Vec<Snapshot>, ProvenanceError> {
    let broken = |reason: String| ProvenanceError::BrokenChain {
        entity: entity.as_str().to_string(),
        reason,
    };
    snapshots.sort_by(|a, b| a.generated_at.cmp(&b.generated_at).then_with(|| a.id.cmp(&b.id)));

    // Equal timestamps are ordered by following wasDerivedFrom links.
    let mut i = 0;
    while i < snapshots.len() {
        let mut j = i + 1;
        while j < snapshots.len() && snapshots[j].generated_at == snapshots[i].generated_at {
            j += 1;
        }
        if j - i > 1 {
            let prev = if i == 0 { None } else { Some(snapshots[i - 1].id.clone()) };
            let mut tied: Vec<Snapshot> = snapshots.drain(i..j).collect();
            let mut ordered = Vec::with_capacity(tied.len());
            let mut last = prev;
            while !tied.is_empty() {
                let pos = tied
                    .iter()
                    .position(|s| s.derived_from == last || (last.is_none() && s.derived_from.is_none()))
                    .ok_or_else(|| {
                        broken(format!(
                            "snapshots generated at {} cannot be ordered by derivation",
                            ordered.first().map_or_else(|| tied[0].generated_at, |s: &Snapshot| s.generated_at)
                        ))
                    })?;
                let s = tied.remove(pos);
                last = Some(s.id.clone());
                ordered.push(s);
            }
            for (k, s) in ordered.into_iter().enumerate() {
                snapshots.insert(i + k, s);
            }
        }
        i = j;
    }

    let mut seen: HashMap<&Iri, usize> = HashMap::new();
    for (k, s) in snapshots.iter().enumerate() {
        if seen.insert(&s.id, k).is_some() {
            return Err(broken(format!("duplicate snapshot {}", s.id)));
        }
    }
    for (k, s) in snapshots.iter().enumerate() {
        if k == 0 {
            if s.update.is_some() {
                return Err(broken(format!("first snapshot {} carries an update", s.id)));
            }
            if let Some(d) = &s.derived_from {
                return Err(broken(format!("first snapshot {} derives from {d}", s.id)));
            }
            continue;
        }
        let prev = &snapshots[k - 1];
        if s.update.is_none() {
            return Err(broken(format!("snapshot {} has no update", s.id)));
        }
        if let Some(d) = &s.derived_from {
            if d != &prev.id {
                return Err(broken(format!("{} derives from {d}, expected {}", s.id, prev.id)));
            }
        }
        if let Some(inv) = prev.invalidated_at {
            if inv != s.generated_at {
                return Err(broken(format!(
                    "{} invalidated at {inv} but successor {} generated at {}",
                    prev.id, s.id, s.generated_at
                )));
            }
        }
    }
    Ok(snapshots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::{parse_document, DocumentFormat};

    fn prov(body: &str) -> GraphSet {
        let text = format!(
            "@prefix prov: <http://www.w3.org/ns/prov#> .\n@prefix oco: <https://w3id.org/oc/ontology/> .\n\
             @prefix xsd: <http://www.w3.org/2001/XMLSchema#> .\n@base <http://e/> .\n{body}"
        );
        parse_document(&text, DocumentFormat::Turtle, None).unwrap()
    }

    fn entity() -> Iri {
        Iri::new("http://e/x").unwrap()
    }

    #[test]
    fn unknown_entity_has_no_history() {
        let err = load_history(&entity(), &GraphSet::new()).unwrap_err();
        assert!(matches!(err, ProvenanceError::NoHistory(_)));
    }

    #[test]
    fn ties_follow_derivation() {
        let g = prov(
            r#"<x/se/2> prov:specializationOf <x> ; prov:generatedAtTime "2020-01-01T00:00:00" ;
                 prov:wasDerivedFrom <x/se/1> ; oco:hasUpdateQuery "INSERT DATA { <http://e/x> <http://e/p> 1 . }" .
               <x/se/1> prov:specializationOf <x> ; prov:generatedAtTime "2020-01-01T00:00:00" ."#,
        );
        let h = load_history(&entity(), &g).unwrap();
        assert_eq!(h.snapshots()[0].id.as_str(), "http://e/x/se/1");
        assert!(h.snapshots()[1].update.is_some());
    }

    #[test]
    fn contradicting_links_break_the_chain() {
        let g = prov(
            r#"<x/se/1> prov:specializationOf <x> ; prov:generatedAtTime "2020-01-01T00:00:00" .
               <x/se/2> prov:specializationOf <x> ; prov:generatedAtTime "2020-01-02T00:00:00" ;
                 prov:wasDerivedFrom <x/se/9> ; oco:hasUpdateQuery "" ."#,
        );
        assert!(matches!(load_history(&entity(), &g), Err(ProvenanceError::BrokenChain { .. })));
    }

    #[test]
    fn bad_update_names_the_snapshot() {
        let g = prov(
            r#"<x/se/1> prov:specializationOf <x> ; prov:generatedAtTime "2020-01-01T00:00:00" .
               <x/se/2> prov:specializationOf <x> ; prov:generatedAtTime "2020-01-02T00:00:00" ;
                 oco:hasUpdateQuery "INSERT DATA { ?s <http://e/p> 1 . }" ."#,
        );
        match load_history(&entity(), &g) {
            Err(ProvenanceError::BadDelta { snapshot, source }) => {
                assert_eq!(snapshot, "http://e/x/se/2");
                assert!(matches!(source, SparqlError::VariableInDelta { .. }));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn blank_labels_are_scoped_per_snapshot() {
        let g = prov(
            r#"<x/se/1> prov:specializationOf <x> ; prov:generatedAtTime "2020-01-01T00:00:00" .
               <x/se/2> prov:specializationOf <x> ; prov:generatedAtTime "2020-01-02T00:00:00" ;
                 oco:hasUpdateQuery "INSERT DATA { <http://e/x> <http://e/p> _:b . }" ."#,
        );
        let h = load_history(&entity(), &g).unwrap();
        let q = &h.snapshots()[1].update.as_ref().unwrap().inserts()[0];
        let label = q.object().as_blank().unwrap().label();
        assert!(label.ends_with("_b") && label.len() == 10, "{label}");
    }
}
