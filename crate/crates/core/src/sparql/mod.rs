//! The SPARQL subset used for structured queries: `SELECT` over basic graph
//! patterns with flat `OPTIONAL` groups and `REGEX` / `CONTAINS` filters, plus
//! ground `DELETE DATA` / `INSERT DATA` update strings.

mod eval;
mod parser;
mod update;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::rdf::{Iri, Term};

pub use eval::{evaluate, evaluate_triples};
pub use parser::parse_select;
pub use update::parse_update;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SparqlError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported SPARQL feature: {0}")]
    UnsupportedFeature(String),
    #[error("bad regular expression {pattern:?}: {message}")]
    BadRegex { pattern: String, message: String },
    #[error("variable ?{name} in update data at {line}:{column}")]
    VariableInDelta {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("prefixed name {name} in update data at {line}:{column}")]
    PrefixInDelta {
        name: String,
        line: usize,
        column: usize,
    },
}

impl From<crate::rdf::lexer::LexError> for SparqlError {
    fn from(e: crate::rdf::lexer::LexError) -> Self {
        SparqlError::Syntax {
            line: e.line,
            column: e.column,
            message: e.message,
        }
    }
}

/// A query variable, named without its `?` sigil.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable(Arc<str>);

impl Variable {
    pub fn new(name: impl AsRef<str>) -> Self {
        Variable(Arc::from(name.as_ref()))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PatternTerm {
    Term(Term),
    Var(Variable),
}

impl PatternTerm {
    pub fn as_var(&self) -> Option<&Variable> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Term(_) => None,
        }
    }

    pub fn as_term(&self) -> Option<&Term> {
        match self {
            PatternTerm::Term(t) => Some(t),
            PatternTerm::Var(_) => None,
        }
    }

    pub fn as_iri(&self) -> Option<&Iri> {
        self.as_term().and_then(Term::as_iri)
    }
}

impl fmt::Display for PatternTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternTerm::Term(t) => t.fmt(f),
            PatternTerm::Var(v) => v.fmt(f),
        }
    }
}

impl From<Variable> for PatternTerm {
    fn from(v: Variable) -> Self {
        PatternTerm::Var(v)
    }
}

impl From<Term> for PatternTerm {
    fn from(t: Term) -> Self {
        PatternTerm::Term(t)
    }
}

impl From<Iri> for PatternTerm {
    fn from(i: Iri) -> Self {
        PatternTerm::Term(Term::Iri(i))
    }
}

/// `(s, p, o)` drawn from `(IRI ∪ Var) × (IRI ∪ Var) × (IRI ∪ Literal ∪ Var)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
    /// `None` for required patterns; otherwise the index of the OPTIONAL group.
    pub optional_group: Option<usize>,
}

impl TriplePattern {
    pub fn new(
        subject: impl Into<PatternTerm>,
        predicate: impl Into<PatternTerm>,
        object: impl Into<PatternTerm>,
    ) -> Self {
        TriplePattern {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
            optional_group: None,
        }
    }

    pub fn positions(&self) -> [&PatternTerm; 3] {
        [&self.subject, &self.predicate, &self.object]
    }

    pub fn variables(&self) -> impl Iterator<Item = &Variable> + '_ {
        self.positions().into_iter().filter_map(PatternTerm::as_var)
    }

    /// Ground predicate and object terms (the subject is reported separately).
    pub fn known_terms(&self) -> Vec<Term> {
        [&self.predicate, &self.object]
            .into_iter()
            .filter_map(|p| p.as_term().cloned())
            .collect()
    }

    pub fn is_optional(&self) -> bool {
        self.optional_group.is_some()
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Filter {
    Regex {
        var: Variable,
        pattern: String,
        flags: Option<String>,
    },
    Contains {
        var: Variable,
        needle: String,
    },
}

impl Filter {
    pub fn variable(&self) -> &Variable {
        match self {
            Filter::Regex { var, .. } | Filter::Contains { var, .. } => var,
        }
    }
}

fn write_sparql_string(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\r' => f.write_str("\\r")?,
            c => fmt::Write::write_char(f, c)?,
        }
    }
    f.write_str("\"")
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Filter::Regex { var, pattern, flags } => {
                write!(f, "FILTER REGEX({var}, ")?;
                write_sparql_string(f, pattern)?;
                if let Some(flags) = flags {
                    f.write_str(", ")?;
                    write_sparql_string(f, flags)?;
                }
                f.write_str(")")
            }
            Filter::Contains { var, needle } => {
                write!(f, "FILTER CONTAINS({var}, ")?;
                write_sparql_string(f, needle)?;
                f.write_str(")")
            }
        }
    }
}

/// A parsed `SELECT` query. All prefixed names are expanded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedQuery {
    pub projected: Vec<Variable>,
    pub distinct: bool,
    pub patterns: Vec<TriplePattern>,
    pub filters: Vec<Filter>,
    pub prefixes: BTreeMap<String, String>,
}

impl ParsedQuery {
    /// Variables in order of first appearance in the patterns.
    pub fn pattern_variables(&self) -> Vec<Variable> {
        let mut seen = Vec::new();
        for v in self.patterns.iter().flat_map(TriplePattern::variables) {
            if !seen.contains(v) {
                seen.push(v.clone());
            }
        }
        seen
    }

    pub fn optional_groups(&self) -> Vec<usize> {
        let mut groups: Vec<usize> = self.patterns.iter().filter_map(|p| p.optional_group).collect();
        groups.dedup();
        groups
    }
}

/// Query text with full IRIs; re-parses to an equal `ParsedQuery`.
impl fmt::Display for ParsedQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (prefix, iri) in &self.prefixes {
            writeln!(f, "PREFIX {prefix}: <{iri}>")?;
        }
        f.write_str("SELECT ")?;
        if self.distinct {
            f.write_str("DISTINCT ")?;
        }
        for v in &self.projected {
            write!(f, "{v} ")?;
        }
        f.write_str("WHERE {\n")?;
        let mut group = None;
        for p in &self.patterns {
            if p.optional_group != group {
                if group.is_some() {
                    f.write_str("  }\n")?;
                }
                if p.optional_group.is_some() {
                    f.write_str("  OPTIONAL {\n")?;
                }
                group = p.optional_group;
            }
            let indent = if group.is_some() { "    " } else { "  " };
            writeln!(f, "{indent}{p}")?;
        }
        if group.is_some() {
            f.write_str("  }\n")?;
        }
        for filter in &self.filters {
            writeln!(f, "  {filter}")?;
        }
        f.write_str("}\n")
    }
}

/// One solution mapping.
pub type Solution = BTreeMap<Variable, Term>;

/// A bag of solution mappings. Rows are kept sorted, so `==` is bag equality.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SolutionSet {
    pub variables: Vec<Variable>,
    pub rows: Vec<Solution>,
}

impl SolutionSet {
    pub fn new(variables: Vec<Variable>, mut rows: Vec<Solution>) -> Self {
        rows.sort();
        SolutionSet { variables, rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Values bound to `var` across all rows.
    pub fn column<'a>(&'a self, var: &'a Variable) -> impl Iterator<Item = &'a Term> + 'a {
        self.rows.iter().filter_map(move |r| r.get(var))
    }
}
