//! Change reports: which relevant entities changed inside an interval, when,
//! and how.

use std::collections::BTreeSet;

use crate::error::Error;
use crate::materializer::{scoped, Materializer};
use crate::provenance::{DeltaPair, EntityHistory};
use crate::rdf::{GraphSet, Iri};
use crate::sources::Context;
use crate::sparql::parse_select;
use crate::time::{TimeInterval, Timestamp};
use crate::version_query::{classify, explicate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ChangeKind {
    Created,
    Modified,
    Deleted,
}

impl ChangeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ChangeKind::Created => "created",
            ChangeKind::Modified => "modified",
            ChangeKind::Deleted => "deleted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeRecord {
    pub entity: Iri,
    pub snapshot: Iri,
    pub time: Timestamp,
    pub description: Option<String>,
    pub attributed_to: Option<Iri>,
    pub delta: DeltaPair,
    pub kind: ChangeKind,
}

/// Records ordered by (time, entity).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChangeReport {
    pub records: Vec<ChangeRecord>,
    /// Entities the query was found relevant to.
    pub relevant: BTreeSet<Iri>,
}

/// The change recorded by the snapshot generated at `snapshot_time`. For a
/// creation snapshot everything in the first version counts as added.
pub fn get_delta(
    entity: &Iri,
    snapshot_time: Timestamp,
    current: &GraphSet,
    history: &EntityHistory,
) -> Result<DeltaPair, Error> {
    let k = history.index_of_time(snapshot_time).ok_or_else(|| Error::NoSuchSnapshot {
        entity: entity.as_str().to_string(),
        time: snapshot_time,
    })?;
    match &history.snapshots()[k].update {
        Some(update) => Ok(pair(update, entity)),
        None => {
            let first = Materializer::new()
                .chain(current, history, &[k])
                .pop()
                .expect("one version per wanted index");
            Ok(DeltaPair {
                added: first.graphs,
                removed: GraphSet::new(),
            })
        }
    }
}

fn pair(update: &crate::provenance::Delta, entity: &Iri) -> DeltaPair {
    let d = scoped(update, entity);
    DeltaPair {
        added: d.inserts().iter().cloned().collect(),
        removed: d.deletes().iter().cloned().collect(),
    }
}

fn touches(delta: &DeltaPair, properties: &BTreeSet<Iri>) -> bool {
    properties.is_empty()
        || delta
            .added
            .iter()
            .chain(delta.removed.iter())
            .any(|q| properties.contains(q.predicate()))
}

/// Changes to the entities relevant to `query_text` made by snapshots
/// generated inside `interval` that touch one of `changed_properties` (any
/// change when the set is empty). Creation snapshots are not changes.
pub fn run(
    query_text: &str,
    changed_properties: &BTreeSet<Iri>,
    interval: TimeInterval,
    ctx: &Context,
) -> Result<ChangeReport, Error> {
    let query = parse_select(query_text)?;
    let plan = classify(&query)?;
    let ex = explicate(&plan, ctx, interval, false)?;

    let mut records = Vec::new();
    for entity in &ex.entities {
        let Some(history) = ctx.history(entity)? else {
            continue;
        };
        let mut deleted_checks = Vec::new();
        let mut found = Vec::new();
        for (k, s) in history.snapshots().iter().enumerate() {
            let Some(update) = &s.update else {
                continue;
            };
            if !interval.contains(s.generated_at) {
                continue;
            }
            let delta = pair(update, entity);
            if !touches(&delta, changed_properties) {
                continue;
            }
            // Only a change without insertions can leave the entity empty.
            if delta.added.is_empty() {
                deleted_checks.push(k);
            }
            found.push((k, delta));
        }
        if found.is_empty() {
            continue;
        }
        let emptied: BTreeSet<usize> = if deleted_checks.is_empty() {
            BTreeSet::new()
        } else {
            let materialized = ex.versions.get(entity);
            let mut versions = Vec::new();
            let missing: Vec<usize> = deleted_checks
                .iter()
                .copied()
                .filter(|&k| {
                    let have = materialized.and_then(|vs| vs.iter().find(|v| v.snapshot.id == history.snapshots()[k].id));
                    match have {
                        Some(v) => {
                            versions.push((k, v.graphs.is_empty()));
                            false
                        }
                        None => true,
                    }
                })
                .collect();
            for v in ctx.versions_by_index(&history, &missing)? {
                let k = history.index_of_time(v.time()).expect("versions come from the history");
                versions.push((k, v.graphs.is_empty()));
            }
            versions.into_iter().filter(|(_, empty)| *empty).map(|(k, _)| k).collect()
        };
        for (k, delta) in found {
            let s = &history.snapshots()[k];
            records.push(ChangeRecord {
                entity: entity.clone(),
                snapshot: s.id.clone(),
                time: s.generated_at,
                description: s.description.clone(),
                attributed_to: s.attributed_to.clone(),
                delta,
                kind: if emptied.contains(&k) {
                    ChangeKind::Deleted
                } else {
                    ChangeKind::Modified
                },
            });
        }
    }
    records.sort_by(|a, b| (a.time, &a.entity, &a.snapshot).cmp(&(b.time, &b.entity, &b.snapshot)));
    Ok(ChangeReport {
        records,
        relevant: ex.entities,
    })
}

/// Every change of one entity inside `interval`, creation included.
pub fn entity_changes(entity: &Iri, interval: TimeInterval, ctx: &Context) -> Result<Vec<ChangeRecord>, Error> {
    let history = ctx.require_history(entity)?;
    let current = ctx.current_graph(entity)?;
    let mut out = Vec::new();
    for s in history.snapshots().iter().filter(|s| interval.contains(s.generated_at)) {
        let delta = get_delta(entity, s.generated_at, &current, &history)?;
        let kind = if s.is_creation() {
            ChangeKind::Created
        } else if delta.added.is_empty() && ctx.materialize_at(entity, s.generated_at)?.0.graphs.is_empty() {
            ChangeKind::Deleted
        } else {
            ChangeKind::Modified
        };
        out.push(ChangeRecord {
            entity: entity.clone(),
            snapshot: s.id.clone(),
            time: s.generated_at,
            description: s.description.clone(),
            attributed_to: s.attributed_to.clone(),
            delta,
            kind,
        });
    }
    Ok(out)
}
