//! Shared fixtures for the benchmarks.

use chrono_rdf::benchgen::{generate, EntityKind, GenSpec, Generated};
use chrono_rdf::{Context, Iri};

/// A generated dataset of `n_entities` with the default change mix.
pub fn dataset(seed: u64, n_entities: usize) -> Generated {
    generate(&GenSpec {
        seed,
        n_entities,
        ..GenSpec::default()
    })
    .expect("default generator spec is valid")
}

pub fn context(g: &Generated) -> Context {
    Context::in_memory(&g.data, &g.provenance)
}

/// The live expression with the longest history.
pub fn busiest_expression(g: &Generated) -> Iri {
    g.ledger
        .of_kind(EntityKind::Expression)
        .into_iter()
        .filter(|e| !g.ledger.entities[*e].is_deleted())
        .max_by_key(|e| g.ledger.entities[*e].snapshots.len())
        .cloned()
        .expect("the dataset has live expressions")
}
