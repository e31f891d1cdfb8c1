use std::collections::{BTreeSet, HashMap};

use super::{DataSource, ProvenanceSource, SourceError, UpdateRecord};
use crate::provenance::{OCO_HAS_UPDATE_QUERY, PROV_SPECIALIZATION_OF};
use crate::rdf::{GraphSet, Iri, Quad, Term};

/// Current data held in memory, indexed by subject and predicate.
#[derive(Debug, Default)]
pub struct LocalData {
    by_subject: HashMap<Term, GraphSet>,
    by_predicate: HashMap<Iri, Vec<(Term, Term)>>,
}

impl LocalData {
    pub fn new(data: &GraphSet) -> Self {
        let mut store = LocalData::default();
        for q in data {
            store.by_subject.entry(q.subject().clone()).or_default().insert(q.clone());
            store
                .by_predicate
                .entry(q.predicate().clone())
                .or_default()
                .push((q.subject().clone(), q.object().clone()));
        }
        store
    }
}

impl DataSource for LocalData {
    fn entity_quads(&self, entity: &Iri) -> Result<GraphSet, SourceError> {
        Ok(self
            .by_subject
            .get(&Term::Iri(entity.clone()))
            .cloned()
            .unwrap_or_default())
    }

    fn subjects_matching(&self, predicate: Option<&Iri>, object: Option<&Term>) -> Result<BTreeSet<Iri>, SourceError> {
        let object_ok = |o: &Term| object.is_none_or(|want| want == o);
        let out = match predicate {
            Some(p) => self
                .by_predicate
                .get(p)
                .into_iter()
                .flatten()
                .filter(|(_, o)| object_ok(o))
                .filter_map(|(s, _)| s.as_iri().cloned())
                .collect(),
            None => self
                .by_subject
                .iter()
                .filter(|(_, g)| g.iter().any(|q| object_ok(q.object())))
                .filter_map(|(s, _)| s.as_iri().cloned())
                .collect(),
        };
        Ok(out)
    }
}

/// Provenance held in memory, grouped by the entity each snapshot describes.
#[derive(Debug, Default)]
pub struct LocalProvenance {
    by_entity: HashMap<Iri, Vec<Quad>>,
    updates: Vec<UpdateRecord>,
}

impl LocalProvenance {
    pub fn new(provenance: &GraphSet) -> Self {
        let mut entity_of: HashMap<&Term, Vec<&Iri>> = HashMap::new();
        for q in provenance {
            if q.predicate().as_str() == PROV_SPECIALIZATION_OF {
                if let Term::Iri(e) = q.object() {
                    entity_of.entry(q.subject()).or_default().push(e);
                }
            }
        }
        let mut store = LocalProvenance::default();
        for q in provenance {
            let Some(entities) = entity_of.get(q.subject()) else {
                continue;
            };
            for e in entities {
                store.by_entity.entry((*e).clone()).or_default().push(q.clone());
                if q.predicate().as_str() == OCO_HAS_UPDATE_QUERY {
                    if let (Term::Iri(snapshot), Some(text)) = (q.subject(), q.object().as_literal()) {
                        store.updates.push(UpdateRecord {
                            entity: (*e).clone(),
                            snapshot: snapshot.clone(),
                            text: text.value().to_string(),
                        });
                    }
                }
            }
        }
        store
    }

    /// Entities that have at least one snapshot.
    pub fn entities(&self) -> impl Iterator<Item = &Iri> + '_ {
        self.by_entity.keys()
    }
}

impl ProvenanceSource for LocalProvenance {
    fn snapshot_quads(&self, entity: &Iri) -> Result<Vec<Quad>, SourceError> {
        Ok(self.by_entity.get(entity).cloned().unwrap_or_default())
    }

    fn updates_containing(&self, needles: &[String]) -> Result<Vec<UpdateRecord>, SourceError> {
        Ok(self
            .updates
            .iter()
            .filter(|r| needles.iter().all(|n| r.text.contains(n.as_str())))
            .cloned()
            .collect())
    }
}
