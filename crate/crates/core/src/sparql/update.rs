use super::SparqlError;
use crate::provenance::{compose, Delta};
use crate::rdf::lexer::{tokenize, Cursor, Tok};
use crate::rdf::{
    is_absolute_iri, BlankNode, Iri, Literal, Quad, Term, Triple, RDF_TYPE, XSD_BOOLEAN, XSD_DECIMAL,
    XSD_DOUBLE, XSD_INTEGER,
};

/// Parses a sequence of `DELETE DATA` / `INSERT DATA` operations into their net
/// effect. The empty string is the empty delta.
pub fn parse_update(text: &str) -> Result<Delta, SparqlError> {
    let tokens = tokenize(text, false)?;
    let mut p = UpdateParser {
        cur: Cursor::new(tokens, text),
    };
    let mut steps = Vec::new();
    while !p.cur.at_end() {
        steps.push(p.operation()?);
        if !p.cur.eat_punct(';') && !p.cur.at_end() {
            return Err(p.cur.unexpected("';' or end of update").into());
        }
    }
    Ok(match steps.len() {
        1 => steps.pop().unwrap_or_default(),
        _ => compose(&steps),
    })
}

struct UpdateParser {
    cur: Cursor,
}

impl UpdateParser {
    fn syntax(&self, message: impl Into<String>) -> SparqlError {
        self.cur.error(message).into()
    }

    fn operation(&mut self) -> Result<Delta, SparqlError> {
        if self.cur.is_keyword("PREFIX") || self.cur.is_keyword("BASE") {
            let (line, column) = self.cur.position();
            return Err(SparqlError::PrefixInDelta {
                name: "PREFIX".into(),
                line,
                column,
            });
        }
        let insert = if self.cur.eat_keyword("INSERT") {
            true
        } else if self.cur.eat_keyword("DELETE") {
            false
        } else {
            match self.cur.peek() {
                Some(Tok::Word(w)) => return Err(SparqlError::UnsupportedFeature(w.to_ascii_uppercase())),
                _ => return Err(self.cur.unexpected("INSERT DATA or DELETE DATA").into()),
            }
        };
        if !self.cur.eat_keyword("DATA") {
            let name = if insert { "INSERT" } else { "DELETE" };
            return Err(SparqlError::UnsupportedFeature(format!("{name} without DATA")));
        }
        self.cur.expect_punct('{')?;
        let mut quads = Vec::new();
        loop {
            if self.cur.eat_punct('}') {
                break;
            }
            if self.cur.eat_keyword("GRAPH") {
                let graph = self.iri()?;
                self.cur.expect_punct('{')?;
                self.triples(Some(&graph), &mut quads, '}')?;
                self.cur.expect_punct('}')?;
            } else {
                self.triples(None, &mut quads, '}')?;
            }
        }
        Ok(if insert {
            Delta::new(Vec::new(), quads)
        } else {
            Delta::new(quads, Vec::new())
        })
    }

    /// Triples blocks until `close` (not consumed).
    fn triples(&mut self, graph: Option<&Iri>, out: &mut Vec<Quad>, close: char) -> Result<(), SparqlError> {
        while !self.cur.is_punct(close) && !self.cur.is_keyword("GRAPH") {
            if self.cur.at_end() {
                return Err(self.cur.unexpected(&format!("'{close}'")).into());
            }
            let subject = self.subject()?;
            loop {
                let predicate = if self.cur.eat_keyword("a") {
                    Iri::new_unchecked(RDF_TYPE)
                } else {
                    self.iri()?
                };
                loop {
                    let (line, column) = self.cur.position();
                    let object = self.object()?;
                    let triple = Triple::new(subject.clone(), predicate.clone(), object).map_err(|e| {
                        SparqlError::Syntax {
                            line,
                            column,
                            message: e.to_string(),
                        }
                    })?;
                    out.push(Quad::new(triple, graph.cloned()));
                    if !self.cur.eat_punct(',') {
                        break;
                    }
                }
                if !self.cur.eat_punct(';') {
                    break;
                }
                while self.cur.eat_punct(';') {}
                if self.cur.is_punct('.') || self.cur.is_punct(close) {
                    break;
                }
            }
            if !self.cur.eat_punct('.') && !self.cur.is_punct(close) {
                return Err(self.cur.unexpected("'.'").into());
            }
        }
        Ok(())
    }

    fn reject_non_ground(&self) -> Result<(), SparqlError> {
        let (line, column) = self.cur.position();
        match self.cur.peek() {
            Some(Tok::Var(name)) => Err(SparqlError::VariableInDelta {
                name: name.clone(),
                line,
                column,
            }),
            Some(Tok::PName { prefix, local }) => Err(SparqlError::PrefixInDelta {
                name: format!("{prefix}:{local}"),
                line,
                column,
            }),
            _ => Ok(()),
        }
    }

    fn subject(&mut self) -> Result<Term, SparqlError> {
        self.reject_non_ground()?;
        match self.cur.peek().cloned() {
            Some(Tok::Iri(_)) => Ok(Term::Iri(self.iri()?)),
            Some(Tok::Blank(label)) => {
                let b = BlankNode::new(label).map_err(|e| self.syntax(e.to_string()))?;
                self.cur.next();
                Ok(Term::Blank(b))
            }
            _ => Err(self.cur.unexpected("subject").into()),
        }
    }

    fn iri(&mut self) -> Result<Iri, SparqlError> {
        self.reject_non_ground()?;
        match self.cur.peek().cloned() {
            Some(Tok::Iri(raw)) if is_absolute_iri(&raw) => {
                let iri = Iri::new(raw).map_err(|e| self.syntax(e.to_string()))?;
                self.cur.next();
                Ok(iri)
            }
            Some(Tok::Iri(raw)) => Err(self.syntax(format!("relative IRI <{raw}> in update data"))),
            _ => Err(self.cur.unexpected("IRI").into()),
        }
    }

    fn object(&mut self) -> Result<Term, SparqlError> {
        self.reject_non_ground()?;
        let typed = |value: String, dt: &str| -> Term { Literal::typed(value, Iri::new_unchecked(dt)).into() };
        match self.cur.peek().cloned() {
            Some(Tok::Iri(_)) | Some(Tok::Blank(_)) => self.subject(),
            Some(Tok::Str(value)) => {
                self.cur.next();
                match self.cur.peek().cloned() {
                    Some(Tok::LangTag(lang)) => {
                        let lit = Literal::lang(value, lang).map_err(|e| self.syntax(e.to_string()))?;
                        self.cur.next();
                        Ok(lit.into())
                    }
                    Some(Tok::DoubleCaret) => {
                        self.cur.next();
                        let dt = self.iri()?;
                        Ok(Literal::typed(value, dt).into())
                    }
                    _ => Ok(Literal::string(value).into()),
                }
            }
            Some(Tok::Integer(n)) => {
                self.cur.next();
                Ok(typed(n, XSD_INTEGER))
            }
            Some(Tok::Decimal(n)) => {
                self.cur.next();
                Ok(typed(n, XSD_DECIMAL))
            }
            Some(Tok::Double(n)) => {
                self.cur.next();
                Ok(typed(n, XSD_DOUBLE))
            }
            Some(Tok::Word(w)) if w == "true" || w == "false" => {
                self.cur.next();
                Ok(typed(w, XSD_BOOLEAN))
            }
            _ => Err(self.cur.unexpected("object").into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_delete_and_insert_with_graphs() {
        let text = r#"DELETE DATA { GRAPH <http://e/g> { <http://e/a> <http://e/p> "x." . } } ;
INSERT DATA { GRAPH <http://e/g> { <http://e/a> <http://e/p> 'x' ; a <http://e/C> . } }"#;
        let d = parse_update(text).unwrap();
        assert_eq!(d.deletes().len(), 1);
        assert_eq!(d.inserts().len(), 2);
        assert_eq!(d.deletes()[0].object().as_literal().unwrap().value(), "x.");
        assert_eq!(d.inserts()[0].graph.as_ref().unwrap().as_str(), "http://e/g");
    }

    #[test]
    fn operations_compose_sequentially() {
        let text = "INSERT DATA { <http://e/a> <http://e/p> <http://e/b> . } ; \
                    DELETE DATA { <http://e/a> <http://e/p> <http://e/b> . }";
        let d = parse_update(text).unwrap();
        assert!(d.inserts().is_empty());
        assert_eq!(d.deletes().len(), 1);
    }

    #[test]
    fn empty_update_is_empty_delta() {
        assert!(parse_update("").unwrap().is_empty());
        assert!(parse_update("  INSERT DATA { }").unwrap().is_empty());
    }

    #[test]
    fn rejects_non_ground_data() {
        let err = parse_update("INSERT DATA { ?s <http://e/p> <http://e/o> . }").unwrap_err();
        assert!(matches!(err, SparqlError::VariableInDelta { ref name, line: 1, column: 15 } if name == "s"), "{err:?}");
        let err = parse_update("INSERT DATA { <http://e/s> ex:p <http://e/o> . }").unwrap_err();
        assert!(matches!(err, SparqlError::PrefixInDelta { .. }), "{err:?}");
        let err = parse_update("INSERT { <http://e/s> <http://e/p> ?o } WHERE { }").unwrap_err();
        assert!(matches!(err, SparqlError::UnsupportedFeature(_)), "{err:?}");
    }

    #[test]
    fn canonical_text_round_trips() {
        let text = "DELETE DATA { <http://e/a> <http://e/p> \"1\"^^<http://www.w3.org/2001/XMLSchema#integer> . } ; \
                    INSERT DATA { GRAPH <http://e/g> { _:b <http://e/p> \"hé\"@fr . } }";
        let d = parse_update(text).unwrap();
        assert_eq!(parse_update(d.source_text()).unwrap(), d);
    }
}
