//! Reconstruction of past entity states by rewinding the current graph
//! through inverted snapshot updates.

use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::Error;
use crate::provenance::{Delta, EntityHistory, Snapshot};
use crate::rdf::{GraphSet, Iri, Quad, Term};
use crate::time::{TimeInterval, Timestamp};

/// One entity state, labelled with the snapshot that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct VersionedGraph {
    pub entity: Iri,
    pub snapshot: Snapshot,
    pub graphs: GraphSet,
    /// `false` only for the live (current) state.
    pub reconstructed: bool,
}

impl VersionedGraph {
    pub fn time(&self) -> Timestamp {
        self.snapshot.generated_at
    }
}

/// Statements of `data` whose subject is `entity`.
pub fn current_graph(entity: &Iri, data: &GraphSet) -> GraphSet {
    let subject = Term::Iri(entity.clone());
    data.iter().filter(|q| q.subject() == &subject).cloned().collect()
}

/// Materialization with an instrumented count of delta applications.
#[derive(Debug, Default)]
pub struct Materializer {
    applications: AtomicU64,
}

impl Materializer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of (inverted) snapshot updates applied so far.
    pub fn applications(&self) -> u64 {
        self.applications.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.applications.store(0, Ordering::Relaxed);
    }

    /// The state of the entity at `time`, plus the snapshots that were not materialized.
    pub fn materialize_at(
        &self,
        time: Timestamp,
        current: &GraphSet,
        history: &EntityHistory,
    ) -> Result<(VersionedGraph, Vec<Snapshot>), Error> {
        let k = select(history, time)?;
        let snaps = history.snapshots();
        // Newest first: each inverted update rewinds one step.
        let mut graphs = current.clone();
        for update in snaps[k + 1..].iter().rev().filter_map(|s| s.update.as_ref()) {
            apply_inverse_scoped(update, history.entity(), &mut graphs);
            self.applications.fetch_add(1, Ordering::Relaxed);
        }
        let others = snaps
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(_, s)| s.clone())
            .collect();
        Ok((
            VersionedGraph {
                entity: history.entity().clone(),
                snapshot: snaps[k].clone(),
                graphs,
                reconstructed: k + 1 < snaps.len(),
            },
            others,
        ))
    }

    /// All versions whose snapshot was generated inside `interval`, oldest first.
    pub fn materialize_all(
        &self,
        current: &GraphSet,
        history: &EntityHistory,
        interval: TimeInterval,
    ) -> Vec<VersionedGraph> {
        let wanted: Vec<usize> = (0..history.len())
            .filter(|&k| interval.contains(history.snapshots()[k].generated_at))
            .collect();
        self.chain(current, history, &wanted)
    }

    /// Versions whose validity period meets `interval`: the ones needed to know
    /// the entity's state at every instant of it. Oldest first.
    pub fn versions_overlapping(
        &self,
        current: &GraphSet,
        history: &EntityHistory,
        interval: TimeInterval,
    ) -> Vec<VersionedGraph> {
        self.chain(current, history, &overlapping_indices(history, interval))
    }

    /// Rewinds from the current state down to the oldest wanted index, one
    /// inverted update per step, keeping the wanted versions.
    pub(crate) fn chain(&self, current: &GraphSet, history: &EntityHistory, wanted: &[usize]) -> Vec<VersionedGraph> {
        let Some(&oldest) = wanted.first() else {
            return Vec::new();
        };
        let snaps = history.snapshots();
        let n = snaps.len();
        let mut out = Vec::with_capacity(wanted.len());
        let mut state = current.clone();
        let mut next_wanted = wanted.len();
        for k in (oldest..n).rev() {
            if k + 1 < n {
                if let Some(update) = &snaps[k + 1].update {
                    apply_inverse_scoped(update, history.entity(), &mut state);
                    self.applications.fetch_add(1, Ordering::Relaxed);
                }
            }
            if next_wanted > 0 && wanted[next_wanted - 1] == k {
                next_wanted -= 1;
                out.push(VersionedGraph {
                    entity: history.entity().clone(),
                    snapshot: snaps[k].clone(),
                    graphs: state.clone(),
                    reconstructed: k + 1 < n,
                });
            }
        }
        out.reverse();
        out
    }
}

pub(crate) fn overlapping_indices(history: &EntityHistory, interval: TimeInterval) -> Vec<usize> {
    (0..history.len())
        .filter(|&k| {
            let (from, until) = history.validity(k);
            interval.overlaps_validity(from, until)
        })
        .collect()
}

fn select(history: &EntityHistory, time: Timestamp) -> Result<usize, Error> {
    history.index_at(time).ok_or_else(|| Error::BeforeCreation {
        entity: history.entity().as_str().to_string(),
        time,
        created: history.snapshots()[0].generated_at,
    })
}

/// Blank nodes hanging off the entity in this update.
fn entity_blanks<'a>(delta: &'a Delta, subject: &Term) -> HashSet<&'a Term> {
    delta
        .quads()
        .filter(|q| q.subject() == subject && q.object().as_blank().is_some())
        .map(Quad::object)
        .collect()
}

/// The part of `delta` describing `entity`: statements about it and about the
/// blank nodes it introduces.
pub fn scoped(delta: &Delta, entity: &Iri) -> Delta {
    let subject = Term::Iri(entity.clone());
    let blanks = entity_blanks(delta, &subject);
    delta.restrict(|s| s == &subject || blanks.contains(s))
}

fn apply_inverse_scoped(delta: &Delta, entity: &Iri, graph: &mut GraphSet) {
    let subject = Term::Iri(entity.clone());
    let blanks = entity_blanks(delta, &subject);
    let keep = |q: &Quad| q.subject() == &subject || blanks.contains(q.subject());
    for q in delta.inserts().iter().filter(|q| keep(q)) {
        graph.remove(q);
    }
    for q in delta.deletes().iter().filter(|q| keep(q)) {
        graph.insert(q.clone());
    }
}

/// Convenience wrapper over [`Materializer::materialize_at`] reading the current
/// graph from `data`.
pub fn materialize_at(
    entity: &Iri,
    time: Timestamp,
    data: &GraphSet,
    history: &EntityHistory,
) -> Result<(VersionedGraph, Vec<Snapshot>), Error> {
    debug_assert_eq!(entity, history.entity());
    Materializer::new().materialize_at(time, &current_graph(entity, data), history)
}

/// Convenience wrapper over [`Materializer::materialize_all`].
pub fn materialize_all(
    entity: &Iri,
    data: &GraphSet,
    history: &EntityHistory,
    interval: TimeInterval,
) -> Vec<VersionedGraph> {
    debug_assert_eq!(entity, history.entity());
    Materializer::new().materialize_all(&current_graph(entity, data), history, interval)
}
