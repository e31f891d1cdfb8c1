use std::collections::BTreeSet;
use std::fmt;

use super::term::{Iri, Term, TermError};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    subject: Term,
    predicate: Iri,
    object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: Iri, object: Term) -> Result<Self, TermError> {
        if subject.is_literal() {
            return Err(TermError::LiteralSubject);
        }
        Ok(Triple {
            subject,
            predicate,
            object,
        })
    }

    pub fn subject(&self) -> &Term {
        &self.subject
    }

    pub fn predicate(&self) -> &Iri {
        &self.predicate
    }

    pub fn object(&self) -> &Term {
        &self.object
    }
}

impl fmt::Debug for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.subject, self.predicate, self.object)
    }
}

/// A triple placed in a named graph, or in the default graph when `graph` is `None`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Quad {
    pub triple: Triple,
    pub graph: Option<Iri>,
}

impl Quad {
    pub fn new(triple: Triple, graph: Option<Iri>) -> Self {
        Quad { triple, graph }
    }

    pub fn subject(&self) -> &Term {
        &self.triple.subject
    }

    pub fn predicate(&self) -> &Iri {
        &self.triple.predicate
    }

    pub fn object(&self) -> &Term {
        &self.triple.object
    }
}

/// One N-Quads statement, without the line terminator.
impl fmt::Display for Quad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {}",
            self.triple.subject, self.triple.predicate, self.triple.object
        )?;
        if let Some(g) = &self.graph {
            write!(f, " {g}")?;
        }
        f.write_str(" .")
    }
}

impl fmt::Debug for Quad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A finite set of quads.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct GraphSet {
    quads: BTreeSet<Quad>,
}

impl GraphSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.quads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quads.is_empty()
    }

    pub fn contains(&self, quad: &Quad) -> bool {
        self.quads.contains(quad)
    }

    /// Returns `true` if the quad was not already present.
    pub fn insert(&mut self, quad: Quad) -> bool {
        self.quads.insert(quad)
    }

    pub fn remove(&mut self, quad: &Quad) -> bool {
        self.quads.remove(quad)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Quad> + '_ {
        self.quads.iter()
    }

    pub fn union(&self, other: &GraphSet) -> GraphSet {
        self.quads.union(&other.quads).cloned().collect()
    }

    pub fn difference(&self, other: &GraphSet) -> GraphSet {
        self.quads.difference(&other.quads).cloned().collect()
    }

    pub fn intersection(&self, other: &GraphSet) -> GraphSet {
        self.quads.intersection(&other.quads).cloned().collect()
    }

    pub fn extend_from(&mut self, other: &GraphSet) {
        self.quads.extend(other.quads.iter().cloned());
    }

    pub fn is_subset(&self, other: &GraphSet) -> bool {
        self.quads.is_subset(&other.quads)
    }

    /// Quads whose subject equals `subject`.
    pub fn with_subject<'a>(&'a self, subject: &'a Term) -> impl Iterator<Item = &'a Quad> + 'a {
        self.quads.iter().filter(move |q| q.subject() == subject)
    }
}

impl fmt::Debug for GraphSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.quads.iter()).finish()
    }
}

impl FromIterator<Quad> for GraphSet {
    fn from_iter<T: IntoIterator<Item = Quad>>(iter: T) -> Self {
        GraphSet {
            quads: iter.into_iter().collect(),
        }
    }
}

impl Extend<Quad> for GraphSet {
    fn extend<T: IntoIterator<Item = Quad>>(&mut self, iter: T) {
        self.quads.extend(iter)
    }
}

impl IntoIterator for GraphSet {
    type Item = Quad;
    type IntoIter = std::collections::btree_set::IntoIter<Quad>;

    fn into_iter(self) -> Self::IntoIter {
        self.quads.into_iter()
    }
}

impl<'a> IntoIterator for &'a GraphSet {
    type Item = &'a Quad;
    type IntoIter = std::collections::btree_set::Iter<'a, Quad>;

    fn into_iter(self) -> Self::IntoIter {
        self.quads.iter()
    }
}

/// Difference between a newer state `newer` and an older state `older`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GraphDiff {
    pub added: GraphSet,
    pub removed: GraphSet,
}

/// `added = newer \ older`, `removed = older \ newer`.
pub fn graph_diff(newer: &GraphSet, older: &GraphSet) -> GraphDiff {
    GraphDiff {
        added: newer.difference(older),
        removed: older.difference(newer),
    }
}
