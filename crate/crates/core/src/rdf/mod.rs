//! RDF terms, statements, quad sets and their textual forms.

mod graph;
pub(crate) mod lexer;
mod parse;
mod term;

pub use graph::{graph_diff, GraphDiff, GraphSet, Quad, Triple};
pub use parse::{parse_document, serialize_nquads, DocumentFormat, RdfError};
pub(crate) use parse::resolve_iri;
pub use term::{
    is_absolute_iri, BlankNode, Iri, Literal, Term, TermError, RDF_TYPE, XSD_BOOLEAN, XSD_DATE_TIME,
    XSD_DECIMAL, XSD_DOUBLE, XSD_INTEGER, XSD_STRING,
};
