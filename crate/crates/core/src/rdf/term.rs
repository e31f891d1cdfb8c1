use std::fmt;
use std::sync::Arc;

pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
pub const XSD_DECIMAL: &str = "http://www.w3.org/2001/XMLSchema#decimal";
pub const XSD_DOUBLE: &str = "http://www.w3.org/2001/XMLSchema#double";
pub const XSD_BOOLEAN: &str = "http://www.w3.org/2001/XMLSchema#boolean";
pub const XSD_DATE_TIME: &str = "http://www.w3.org/2001/XMLSchema#dateTime";
pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

/// True when `value` starts with an IRI scheme (`ALPHA *( ALPHA / DIGIT / "+" / "-" / "." ) ":"`).
pub fn is_absolute_iri(value: &str) -> bool {
    let mut chars = value.char_indices();
    match chars.next() {
        Some((_, c)) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    for (_, c) in chars {
        match c {
            ':' => return true,
            c if c.is_ascii_alphanumeric() || c == '+' || c == '-' || c == '.' => {}
            _ => return false,
        }
    }
    false
}

/// An absolute IRI. Cloning is cheap.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Iri(Arc<str>);

impl Iri {
    /// Builds an IRI, rejecting relative references.
    pub fn new(value: impl AsRef<str>) -> Result<Self, TermError> {
        let value = value.as_ref();
        if !is_absolute_iri(value) {
            return Err(TermError::RelativeIri(value.to_string()));
        }
        Ok(Iri(Arc::from(value)))
    }

    /// Builds an IRI from a value known to be absolute (constants, generator output).
    pub fn new_unchecked(value: impl AsRef<str>) -> Self {
        debug_assert!(is_absolute_iri(value.as_ref()), "{}", value.as_ref());
        Iri(Arc::from(value.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<")?;
        for c in self.0.chars() {
            match c {
                '\u{0}'..='\u{20}' | '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\' => {
                    write!(f, "\\u{:04X}", c as u32)?
                }
                c => fmt::Write::write_char(f, c)?,
            }
        }
        f.write_str(">")
    }
}

/// A blank node label, stored without the `_:` prefix.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlankNode(Arc<str>);

impl BlankNode {
    pub fn new(label: impl AsRef<str>) -> Result<Self, TermError> {
        let label = label.as_ref();
        let valid = !label.is_empty()
            && label
                .chars()
                .all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'))
            && !label.ends_with('.');
        if !valid {
            return Err(TermError::BadBlankLabel(label.to_string()));
        }
        Ok(BlankNode(Arc::from(label)))
    }

    pub fn label(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for BlankNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "_:{}", self.0)
    }
}

impl fmt::Display for BlankNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "_:{}", self.0)
    }
}

/// A literal. Equality is lexical: value, datatype and language are compared as strings.
///
/// Plain literals and `xsd:string` literals are the same value; both are stored
/// with `datatype = None`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    value: Arc<str>,
    datatype: Option<Iri>,
    language: Option<Arc<str>>,
}

impl Literal {
    pub fn string(value: impl AsRef<str>) -> Self {
        Literal {
            value: Arc::from(value.as_ref()),
            datatype: None,
            language: None,
        }
    }

    pub fn typed(value: impl AsRef<str>, datatype: Iri) -> Self {
        let datatype = (datatype.as_str() != XSD_STRING).then_some(datatype);
        Literal {
            value: Arc::from(value.as_ref()),
            datatype,
            language: None,
        }
    }

    pub fn lang(value: impl AsRef<str>, language: impl AsRef<str>) -> Result<Self, TermError> {
        let tag = language.as_ref();
        let valid = !tag.is_empty()
            && tag.split('-').enumerate().all(|(i, part)| {
                !part.is_empty()
                    && part.len() <= 8
                    && part
                        .chars()
                        .all(|c| if i == 0 { c.is_ascii_alphabetic() } else { c.is_ascii_alphanumeric() })
            });
        if !valid {
            return Err(TermError::BadLanguageTag(tag.to_string()));
        }
        Ok(Literal {
            value: Arc::from(value.as_ref()),
            datatype: None,
            language: Some(Arc::from(tag)),
        })
    }

    pub fn value(&self) -> &str {
        &self.value
    }

    /// Explicit datatype; `None` means `xsd:string` (or `rdf:langString` when a language is set).
    pub fn datatype(&self) -> Option<&Iri> {
        self.datatype.as_ref()
    }

    pub fn language(&self) -> Option<&str> {
        self.language.as_deref()
    }

    /// Simple, `xsd:string` and language-tagged literals: the ones string functions accept.
    pub fn is_string_like(&self) -> bool {
        self.datatype.is_none()
    }
}

impl fmt::Debug for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("\"")?;
        for c in self.value.chars() {
            match c {
                '"' => f.write_str("\\\"")?,
                '\\' => f.write_str("\\\\")?,
                '\n' => f.write_str("\\n")?,
                '\r' => f.write_str("\\r")?,
                c => fmt::Write::write_char(f, c)?,
            }
        }
        f.write_str("\"")?;
        if let Some(lang) = &self.language {
            write!(f, "@{lang}")?;
        } else if let Some(dt) = &self.datatype {
            write!(f, "^^{dt}")?;
        }
        Ok(())
    }
}

/// An RDF term. `Display` yields the N-Triples lexical form.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(Iri),
    Blank(BlankNode),
    Literal(Literal),
}

impl Term {
    pub fn iri(value: impl AsRef<str>) -> Result<Self, TermError> {
        Iri::new(value).map(Term::Iri)
    }

    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(iri) => Some(iri),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(lit) => Some(lit),
            _ => None,
        }
    }

    pub fn as_blank(&self) -> Option<&BlankNode> {
        match self {
            Term::Blank(b) => Some(b),
            _ => None,
        }
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal(_))
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => iri.fmt(f),
            Term::Blank(b) => b.fmt(f),
            Term::Literal(l) => l.fmt(f),
        }
    }
}

impl From<Iri> for Term {
    fn from(iri: Iri) -> Self {
        Term::Iri(iri)
    }
}

impl From<BlankNode> for Term {
    fn from(b: BlankNode) -> Self {
        Term::Blank(b)
    }
}

impl From<Literal> for Term {
    fn from(l: Literal) -> Self {
        Term::Literal(l)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TermError {
    #[error("relative IRI <{0}> where an absolute IRI is required")]
    RelativeIri(String),
    #[error("invalid blank node label {0:?}")]
    BadBlankLabel(String),
    #[error("invalid language tag {0:?}")]
    BadLanguageTag(String),
    #[error("literal in subject position")]
    LiteralSubject,
    #[error("predicate must be an IRI")]
    NonIriPredicate,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn absolute_iri_detection() {
        assert!(is_absolute_iri("http://example.org/a"));
        assert!(is_absolute_iri("urn:x"));
        assert!(!is_absolute_iri("br/86766"));
        assert!(!is_absolute_iri(":x"));
        assert!(!is_absolute_iri("1abc:x"));
    }

    #[test]
    fn xsd_string_is_plain() {
        let typed = Literal::typed("x", Iri::new(XSD_STRING).unwrap());
        assert_eq!(typed, Literal::string("x"));
        assert_eq!(typed.to_string(), "\"x\"");
    }

    #[test]
    fn lexical_equality_only() {
        let int = Iri::new(XSD_INTEGER).unwrap();
        assert_ne!(Literal::typed("1", int.clone()), Literal::typed("01", int));
    }

    #[test]
    fn ntriples_forms() {
        let lit = Literal::string("a \"b\"\nc\\");
        assert_eq!(lit.to_string(), r#""a \"b\"\nc\\""#);
        let l = Literal::lang("chat", "fr-BE").unwrap();
        assert_eq!(l.to_string(), "\"chat\"@fr-BE");
        let t = Literal::typed("5", Iri::new(XSD_INTEGER).unwrap());
        assert_eq!(t.to_string(), format!("\"5\"^^<{XSD_INTEGER}>"));
        assert_eq!(Term::Blank(BlankNode::new("b0").unwrap()).to_string(), "_:b0");
    }

    #[test]
    fn rejects_bad_language_tags() {
        assert!(Literal::lang("x", "").is_err());
        assert!(Literal::lang("x", "e n").is_err());
        assert!(Literal::lang("x", "1en").is_err());
    }
}
