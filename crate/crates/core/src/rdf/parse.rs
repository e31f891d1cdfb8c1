use std::collections::HashMap;

use super::lexer::{tokenize, Cursor, LexError, Tok};
use super::term::{
    is_absolute_iri, BlankNode, Iri, Literal, Term, RDF_TYPE, XSD_BOOLEAN, XSD_DECIMAL, XSD_DOUBLE,
    XSD_INTEGER,
};
use super::{GraphSet, Quad, Triple};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocumentFormat {
    NQuads,
    /// `@base`, `@prefix`, `;` / `,` lists, typed and tagged literals, `a`.
    Turtle,
}

impl DocumentFormat {
    /// Guess from a file extension (`.nq`, `.nt`, `.ttl`).
    pub fn from_extension(ext: &str) -> Option<Self> {
        match ext.to_ascii_lowercase().as_str() {
            "nq" | "nquads" | "nt" => Some(DocumentFormat::NQuads),
            "ttl" | "turtle" => Some(DocumentFormat::Turtle),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RdfError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown prefix '{prefix}:' at {line}:{column}")]
    UnknownPrefix {
        prefix: String,
        line: usize,
        column: usize,
    },
}

impl From<LexError> for RdfError {
    fn from(e: LexError) -> Self {
        RdfError::Syntax {
            line: e.line,
            column: e.column,
            message: e.message,
        }
    }
}

/// Parses a whole document into a set of quads. Duplicate statements collapse
/// and blank node labels are kept verbatim.
pub fn parse_document(
    text: &str,
    format: DocumentFormat,
    base: Option<&Iri>,
) -> Result<GraphSet, RdfError> {
    let tokens = tokenize(text, false)?;
    let mut parser = DocParser {
        cur: Cursor::new(tokens, text),
        prefixes: HashMap::new(),
        base: base.map(|b| b.as_str().to_string()),
        out: GraphSet::new(),
    };
    match format {
        DocumentFormat::NQuads => parser.nquads()?,
        DocumentFormat::Turtle => parser.turtle()?,
    }
    Ok(parser.out)
}

/// Resolves `reference` against `base` (RFC 3986, without dot-segment removal).
pub(crate) fn resolve_iri(base: &str, reference: &str) -> String {
    if is_absolute_iri(reference) {
        return reference.to_string();
    }
    let scheme_end = base.find(':').map_or(0, |i| i + 1);
    if reference.is_empty() {
        return base.split('#').next().unwrap_or(base).to_string();
    }
    if let Some(rest) = reference.strip_prefix("//") {
        return format!("{}//{}", &base[..scheme_end], rest);
    }
    let authority_end = if base[scheme_end..].starts_with("//") {
        base[scheme_end + 2..]
            .find('/')
            .map_or(base.len(), |i| scheme_end + 2 + i)
    } else {
        scheme_end
    };
    if reference.starts_with('/') {
        return format!("{}{}", &base[..authority_end], reference);
    }
    let without_fragment = base.split('#').next().unwrap_or(base);
    if reference.starts_with('#') {
        return format!("{without_fragment}{reference}");
    }
    let without_query = without_fragment.split('?').next().unwrap_or(without_fragment);
    if reference.starts_with('?') {
        return format!("{without_query}{reference}");
    }
    let dir_end = without_query.rfind('/').map_or(authority_end, |i| i + 1).max(authority_end);
    let mut dir = without_query[..dir_end].to_string();
    if dir_end == authority_end && !dir.ends_with('/') && authority_end > scheme_end {
        dir.push('/');
    }
    format!("{dir}{reference}")
}

struct DocParser {
    cur: Cursor,
    prefixes: HashMap<String, String>,
    base: Option<String>,
    out: GraphSet,
}

impl DocParser {
    fn syntax(&self, message: impl Into<String>) -> RdfError {
        self.cur.error(message).into()
    }

    fn nquads(&mut self) -> Result<(), RdfError> {
        while !self.cur.at_end() {
            let subject = match self.cur.peek().cloned() {
                Some(Tok::Iri(i)) => Term::Iri(self.absolute(i, false)?),
                Some(Tok::Blank(b)) => Term::Blank(self.blank(b)?),
                _ => return Err(self.cur.unexpected("IRI or blank node as subject").into()),
            };
            self.cur.next();
            let predicate = match self.cur.peek().cloned() {
                Some(Tok::Iri(i)) => self.absolute(i, false)?,
                _ => return Err(self.cur.unexpected("IRI as predicate").into()),
            };
            self.cur.next();
            let object = match self.cur.peek() {
                Some(Tok::Iri(_)) | Some(Tok::Blank(_)) | Some(Tok::Str(_)) => self.nq_object()?,
                _ => return Err(self.cur.unexpected("object term").into()),
            };
            let graph = match self.cur.peek().cloned() {
                Some(Tok::Iri(i)) => {
                    self.cur.next();
                    Some(self.absolute(i, false)?)
                }
                _ => None,
            };
            self.cur.expect_punct('.')?;
            self.push(subject, predicate, object, graph)?;
        }
        Ok(())
    }

    fn nq_object(&mut self) -> Result<Term, RdfError> {
        match self.cur.next().map(|t| t.tok) {
            Some(Tok::Iri(i)) => Ok(Term::Iri(self.absolute(i, false)?)),
            Some(Tok::Blank(b)) => Ok(Term::Blank(self.blank(b)?)),
            Some(Tok::Str(value)) => match self.cur.peek().cloned() {
                Some(Tok::LangTag(lang)) => {
                    self.cur.next();
                    Literal::lang(value, lang)
                        .map(Term::Literal)
                        .map_err(|e| self.syntax(e.to_string()))
                }
                Some(Tok::DoubleCaret) => {
                    self.cur.next();
                    match self.cur.next().map(|t| t.tok) {
                        Some(Tok::Iri(dt)) => Ok(Literal::typed(value, self.absolute(dt, false)?).into()),
                        _ => Err(self.syntax("expected datatype IRI after '^^'")),
                    }
                }
                _ => Ok(Literal::string(value).into()),
            },
            _ => Err(self.syntax("expected object term")),
        }
    }

    fn turtle(&mut self) -> Result<(), RdfError> {
        while !self.cur.at_end() {
            match self.cur.peek().cloned() {
                Some(Tok::Directive(d)) => {
                    self.cur.next();
                    self.directive(&d)?;
                    self.cur.expect_punct('.')?;
                }
                Some(Tok::Word(w)) if w.eq_ignore_ascii_case("prefix") || w.eq_ignore_ascii_case("base") => {
                    self.cur.next();
                    self.directive(&w.to_ascii_lowercase())?;
                }
                _ => {
                    let subject = self.subject()?;
                    self.predicate_object_list(&subject)?;
                    self.cur.expect_punct('.')?;
                }
            }
        }
        Ok(())
    }

    fn directive(&mut self, kind: &str) -> Result<(), RdfError> {
        if kind == "prefix" {
            let prefix = match self.cur.next().map(|t| t.tok) {
                Some(Tok::PName { prefix, local }) if local.is_empty() => prefix,
                _ => return Err(self.syntax("expected prefix name like 'ex:'")),
            };
            let iri = match self.cur.next().map(|t| t.tok) {
                Some(Tok::Iri(i)) => self.absolute(i, true)?,
                _ => return Err(self.syntax("expected IRI in prefix declaration")),
            };
            self.prefixes.insert(prefix, iri.as_str().to_string());
        } else {
            let iri = match self.cur.next().map(|t| t.tok) {
                Some(Tok::Iri(i)) => self.absolute(i, true)?,
                _ => return Err(self.syntax("expected IRI in base declaration")),
            };
            self.base = Some(iri.as_str().to_string());
        }
        Ok(())
    }

    fn subject(&mut self) -> Result<Term, RdfError> {
        match self.cur.peek().cloned() {
            Some(Tok::Iri(_)) | Some(Tok::PName { .. }) => Ok(Term::Iri(self.iri_term()?)),
            Some(Tok::Blank(b)) => {
                self.cur.next();
                Ok(Term::Blank(self.blank(b)?))
            }
            Some(Tok::Punct('[')) | Some(Tok::Punct('(')) => {
                Err(self.syntax("anonymous blank nodes and collections are not supported"))
            }
            Some(Tok::Punct('<')) => Err(self.syntax("quoted triples are not supported")),
            _ => Err(self.cur.unexpected("subject").into()),
        }
    }

    fn predicate_object_list(&mut self, subject: &Term) -> Result<(), RdfError> {
        loop {
            let predicate = if self.cur.eat_keyword("a") {
                Iri::new_unchecked(RDF_TYPE)
            } else {
                self.iri_term()?
            };
            loop {
                let object = self.object()?;
                self.push(subject.clone(), predicate.clone(), object, None)?;
                if !self.cur.eat_punct(',') {
                    break;
                }
            }
            if !self.cur.eat_punct(';') {
                return Ok(());
            }
            // Trailing and repeated semicolons are allowed.
            while self.cur.eat_punct(';') {}
            if self.cur.is_punct('.') || self.cur.at_end() {
                return Ok(());
            }
        }
    }

    fn object(&mut self) -> Result<Term, RdfError> {
        match self.cur.peek().cloned() {
            Some(Tok::Iri(_)) | Some(Tok::PName { .. }) => Ok(Term::Iri(self.iri_term()?)),
            Some(Tok::Blank(b)) => {
                self.cur.next();
                Ok(Term::Blank(self.blank(b)?))
            }
            Some(Tok::Str(value)) => {
                self.cur.next();
                match self.cur.peek().cloned() {
                    Some(Tok::LangTag(lang)) => {
                        self.cur.next();
                        Literal::lang(value, lang)
                            .map(Term::Literal)
                            .map_err(|e| self.syntax(e.to_string()))
                    }
                    Some(Tok::DoubleCaret) => {
                        self.cur.next();
                        let dt = self.iri_term()?;
                        Ok(Literal::typed(value, dt).into())
                    }
                    _ => Ok(Literal::string(value).into()),
                }
            }
            Some(Tok::Integer(n)) => {
                self.cur.next();
                Ok(Literal::typed(n, Iri::new_unchecked(XSD_INTEGER)).into())
            }
            Some(Tok::Decimal(n)) => {
                self.cur.next();
                Ok(Literal::typed(n, Iri::new_unchecked(XSD_DECIMAL)).into())
            }
            Some(Tok::Double(n)) => {
                self.cur.next();
                Ok(Literal::typed(n, Iri::new_unchecked(XSD_DOUBLE)).into())
            }
            Some(Tok::Word(w)) if w == "true" || w == "false" => {
                self.cur.next();
                Ok(Literal::typed(w, Iri::new_unchecked(XSD_BOOLEAN)).into())
            }
            Some(Tok::Punct('[')) | Some(Tok::Punct('(')) => {
                Err(self.syntax("anonymous blank nodes and collections are not supported"))
            }
            Some(Tok::Punct('<')) => Err(self.syntax("quoted triples are not supported")),
            _ => Err(self.cur.unexpected("object").into()),
        }
    }

    fn iri_term(&mut self) -> Result<Iri, RdfError> {
        let (line, column) = self.cur.position();
        match self.cur.next().map(|t| t.tok) {
            Some(Tok::Iri(i)) => self.absolute(i, true),
            Some(Tok::PName { prefix, local }) => match self.prefixes.get(&prefix) {
                Some(ns) => Iri::new(format!("{ns}{local}")).map_err(|e| RdfError::Syntax {
                    line,
                    column,
                    message: e.to_string(),
                }),
                None => Err(RdfError::UnknownPrefix {
                    prefix,
                    line,
                    column,
                }),
            },
            _ => Err(RdfError::Syntax {
                line,
                column,
                message: "expected IRI".into(),
            }),
        }
    }

    fn absolute(&self, raw: String, allow_relative: bool) -> Result<Iri, RdfError> {
        if is_absolute_iri(&raw) {
            return Iri::new(raw).map_err(|e| self.syntax(e.to_string()));
        }
        match (&self.base, allow_relative) {
            (Some(base), true) => Iri::new(resolve_iri(base, &raw)).map_err(|e| self.syntax(e.to_string())),
            (None, true) => Err(self.syntax(format!("relative IRI <{raw}> without @base"))),
            (_, false) => Err(self.syntax(format!("relative IRI <{raw}> not allowed here"))),
        }
    }

    fn blank(&self, label: String) -> Result<BlankNode, RdfError> {
        BlankNode::new(label).map_err(|e| self.syntax(e.to_string()))
    }

    fn push(
        &mut self,
        subject: Term,
        predicate: Iri,
        object: Term,
        graph: Option<Iri>,
    ) -> Result<(), RdfError> {
        let triple = Triple::new(subject, predicate, object).map_err(|e| self.syntax(e.to_string()))?;
        self.out.insert(Quad::new(triple, graph));
        Ok(())
    }
}

/// Canonical N-Quads: one statement per line, lines sorted bytewise, `\n` endings.
pub fn serialize_nquads(graphs: &GraphSet) -> String {
    let mut lines: Vec<String> = graphs.iter().map(|q| q.to_string()).collect();
    lines.sort_unstable();
    let mut out = String::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for line in lines {
        out.push_str(&line);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document() {
        assert!(parse_document("", DocumentFormat::Turtle, None).unwrap().is_empty());
        assert!(parse_document("", DocumentFormat::NQuads, None).unwrap().is_empty());
        assert_eq!(serialize_nquads(&GraphSet::new()), "");
    }

    #[test]
    fn single_triple_line() {
        let g = parse_document("<http://s> <http://p> \"o\" .", DocumentFormat::NQuads, None).unwrap();
        assert_eq!(serialize_nquads(&g), "<http://s> <http://p> \"o\" .\n");
    }

    #[test]
    fn nquads_with_graph_and_types() {
        let text = r#"
<http://s> <http://p> "5"^^<http://www.w3.org/2001/XMLSchema#integer> <http://g> .
<http://s> <http://p> "chat"@fr .
_:b0 <http://p> <http://o> <http://g> .
"#;
        let g = parse_document(text, DocumentFormat::NQuads, None).unwrap();
        assert_eq!(g.len(), 3);
        assert!(g.iter().any(|q| q.graph.as_ref().map(|g| g.as_str()) == Some("http://g")
            && q.subject().as_blank().is_some()));
    }

    #[test]
    fn nquads_rejects_prefixed_names() {
        let err = parse_document("<http://s> ex:p <http://o> .", DocumentFormat::NQuads, None).unwrap_err();
        assert!(matches!(err, RdfError::Syntax { line: 1, column: 12, .. }), "{err:?}");
    }

    #[test]
    fn turtle_lists_and_a() {
        let text = r#"
@prefix ex: <http://example.org/> .
ex:s a ex:C ; ex:p ex:o1 , ex:o2 ; ex:q "x"^^ex:dt ; ex:n 42 .
"#;
        let g = parse_document(text, DocumentFormat::Turtle, None).unwrap();
        assert_eq!(g.len(), 5);
    }

    #[test]
    fn turtle_unknown_prefix() {
        let err = parse_document("ex:s ex:p ex:o .", DocumentFormat::Turtle, None).unwrap_err();
        assert!(matches!(err, RdfError::UnknownPrefix { ref prefix, line: 1, column: 1 } if prefix == "ex"));
    }

    #[test]
    fn turtle_relative_without_base() {
        let err = parse_document("<a> <http://p> <b> .", DocumentFormat::Turtle, None).unwrap_err();
        assert!(matches!(err, RdfError::Syntax { .. }));
        let base = Iri::new("http://x.org/dir/").unwrap();
        let g = parse_document("<a> <http://p> <b> .", DocumentFormat::Turtle, Some(&base)).unwrap();
        assert_eq!(serialize_nquads(&g), "<http://x.org/dir/a> <http://p> <http://x.org/dir/b> .\n");
    }

    #[test]
    fn turtle_rejects_collections() {
        for text in ["<http://s> <http://p> ( 1 2 ) .", "[] <http://p> 1 .", "<< <http://a> <http://b> <http://c> >> <http://p> 1 ."] {
            assert!(parse_document(text, DocumentFormat::Turtle, None).is_err(), "{text}");
        }
    }

    #[test]
    fn resolve_references() {
        let base = "https://github.com/opencitations/time-agnostic-library/";
        assert_eq!(
            resolve_iri(base, "id/80178"),
            "https://github.com/opencitations/time-agnostic-library/id/80178"
        );
        assert_eq!(resolve_iri(base, "/x"), "https://github.com/x");
        assert_eq!(resolve_iri("http://a/b/c", "d"), "http://a/b/d");
        assert_eq!(resolve_iri("http://a/b/c", "#f"), "http://a/b/c#f");
        assert_eq!(resolve_iri("http://a", "d"), "http://a/d");
    }
}
