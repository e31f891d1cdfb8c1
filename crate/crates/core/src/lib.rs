//! Time-traversal queries over RDF datasets whose history is kept as
//! provenance snapshots carrying SPARQL update deltas.

pub mod benchgen;
pub mod cache;
pub mod delta_query;
pub mod error;
pub mod materializer;
pub mod provenance;
pub mod rdf;
pub mod sources;
pub mod sparql;
pub mod time;
pub mod version_query;

pub use cache::Cache;
pub use delta_query::{ChangeKind, ChangeRecord, ChangeReport};
pub use error::Error;
pub use materializer::{Materializer, VersionedGraph};
pub use provenance::{Delta, DeltaPair, EntityHistory, ProvenanceError, Snapshot};
pub use rdf::{GraphSet, Iri, Literal, Quad, Term, Triple};
pub use sources::{load_sources, Context, SourceConfig, SourceError};
pub use sparql::{ParsedQuery, SolutionSet, SparqlError};
pub use time::{TimeInterval, Timestamp};
pub use version_query::{QueryMode, QueryOutcome, QueryPlan};
