use crate::provenance::ProvenanceError;
use crate::sources::SourceError;
use crate::sparql::SparqlError;
use crate::time::Timestamp;

/// Errors raised by materialization and query pipelines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Sparql(#[from] SparqlError),
    #[error(transparent)]
    Provenance(#[from] ProvenanceError),
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error("{entity} did not exist at {time}: its first snapshot is from {created}")]
    BeforeCreation {
        entity: String,
        time: Timestamp,
        created: Timestamp,
    },
    #[error("{entity} has no snapshot generated at {time}")]
    NoSuchSnapshot { entity: String, time: Timestamp },
    #[error("isolated patterns carry no IRI or literal to search for: {0}")]
    UnboundedQuery(String),
    #[error("more than {0} relevant entities discovered")]
    ExplosionLimit(usize),
}

impl Error {
    /// Stable machine-readable name, used in error documents.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Sparql(SparqlError::Syntax { .. }) => "SyntaxError",
            Error::Sparql(SparqlError::UnsupportedFeature(_)) => "UnsupportedFeature",
            Error::Sparql(SparqlError::BadRegex { .. }) => "BadRegex",
            Error::Sparql(SparqlError::VariableInDelta { .. }) => "VariableInDelta",
            Error::Sparql(SparqlError::PrefixInDelta { .. }) => "PrefixInDelta",
            Error::Provenance(ProvenanceError::NoHistory(_)) => "NoHistory",
            Error::Provenance(ProvenanceError::InvalidSnapshot { .. }) => "InvalidSnapshot",
            Error::Provenance(ProvenanceError::BrokenChain { .. }) => "BrokenChain",
            Error::Provenance(ProvenanceError::BadDelta { .. }) => "BadDelta",
            Error::Source(e) => e.code(),
            Error::BeforeCreation { .. } => "BeforeCreation",
            Error::NoSuchSnapshot { .. } => "NoSuchSnapshot",
            Error::UnboundedQuery(_) => "UnboundedQuery",
            Error::ExplosionLimit(_) => "ExplosionLimit",
        }
    }

    /// Whether the error comes from the inputs' sources (files, endpoints,
    /// configuration) rather than from the request or the data's history.
    pub fn is_source_error(&self) -> bool {
        matches!(self, Error::Source(_))
    }
}
