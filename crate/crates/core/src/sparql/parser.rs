use std::collections::BTreeMap;

use super::{Filter, ParsedQuery, PatternTerm, SparqlError, TriplePattern, Variable};
use crate::rdf::lexer::{tokenize, Cursor, Tok};
use crate::rdf::{
    is_absolute_iri, resolve_iri, Iri, Literal, Term, RDF_TYPE, XSD_BOOLEAN, XSD_DECIMAL, XSD_DOUBLE,
    XSD_INTEGER,
};

const UNSUPPORTED_KEYWORDS: &[&str] = &[
    "UNION", "MINUS", "GRAPH", "SERVICE", "BIND", "VALUES", "FROM", "ORDER", "GROUP", "HAVING",
    "LIMIT", "OFFSET", "CONSTRUCT", "ASK", "DESCRIBE", "REDUCED", "EXISTS", "NOT",
];

/// Parses a `SELECT` query in the supported subset.
pub fn parse_select(text: &str) -> Result<ParsedQuery, SparqlError> {
    let tokens = tokenize(text, true)?;
    let mut p = QueryParser {
        cur: Cursor::new(tokens, text),
        prefixes: BTreeMap::new(),
        base: None,
        next_group: 0,
        filter_positions: Vec::new(),
    };
    p.query()
}

struct QueryParser {
    cur: Cursor,
    prefixes: BTreeMap<String, String>,
    base: Option<String>,
    next_group: usize,
    filter_positions: Vec<(usize, usize)>,
}

fn unsupported(name: impl Into<String>) -> SparqlError {
    SparqlError::UnsupportedFeature(name.into())
}

impl QueryParser {
    fn syntax(&self, message: impl Into<String>) -> SparqlError {
        self.cur.error(message).into()
    }

    fn check_unsupported_keyword(&self) -> Result<(), SparqlError> {
        if let Some(Tok::Word(w)) = self.cur.peek() {
            let upper = w.to_ascii_uppercase();
            if UNSUPPORTED_KEYWORDS.contains(&upper.as_str()) {
                return Err(unsupported(upper));
            }
        }
        Ok(())
    }

    fn query(&mut self) -> Result<ParsedQuery, SparqlError> {
        loop {
            if self.cur.eat_keyword("PREFIX") {
                let prefix = match self.cur.next().map(|t| t.tok) {
                    Some(Tok::PName { prefix, local }) if local.is_empty() => prefix,
                    _ => return Err(self.syntax("expected prefix name in PREFIX")),
                };
                let iri = self.iri_ref()?;
                self.prefixes.insert(prefix, iri.as_str().to_string());
            } else if self.cur.eat_keyword("BASE") {
                let iri = self.iri_ref()?;
                self.base = Some(iri.as_str().to_string());
            } else {
                break;
            }
        }
        self.check_unsupported_keyword()?;
        if !self.cur.eat_keyword("SELECT") {
            return Err(self.cur.unexpected("SELECT").into());
        }
        let distinct = self.cur.eat_keyword("DISTINCT");
        self.check_unsupported_keyword()?;
        let mut projected = Vec::new();
        let mut star = false;
        if self.cur.eat_punct('*') {
            star = true;
        } else {
            while let Some(Tok::Var(name)) = self.cur.peek().cloned() {
                self.cur.next();
                projected.push(Variable::new(name));
            }
            if self.cur.is_punct('(') {
                return Err(unsupported("projection expressions"));
            }
            if projected.is_empty() {
                return Err(self.cur.unexpected("variable or '*'").into());
            }
        }
        self.check_unsupported_keyword()?;
        self.cur.eat_keyword("WHERE");
        self.cur.expect_punct('{')?;
        let mut patterns = Vec::new();
        let mut filters = Vec::new();
        self.group_body(&mut patterns, &mut filters, None)?;
        if !self.cur.at_end() {
            self.check_unsupported_keyword()?;
            return Err(self.cur.unexpected("end of query").into());
        }
        for (filter, &(line, column)) in filters.iter().zip(&self.filter_positions) {
            let var = filter.variable();
            if !patterns.iter().any(|p| p.variables().any(|v| v == var)) {
                return Err(SparqlError::Syntax {
                    line,
                    column,
                    message: format!("filter variable {var} does not occur in any pattern"),
                });
            }
        }
        let mut query = ParsedQuery {
            projected,
            distinct,
            patterns,
            filters,
            prefixes: self.prefixes.clone(),
        };
        if star {
            query.projected = query.pattern_variables();
        }
        Ok(query)
    }

    /// Parses patterns until the closing '}' (consumed).
    fn group_body(
        &mut self,
        patterns: &mut Vec<TriplePattern>,
        filters: &mut Vec<Filter>,
        group: Option<usize>,
    ) -> Result<(), SparqlError> {
        loop {
            if self.cur.eat_punct('}') {
                return Ok(());
            }
            if self.cur.at_end() {
                return Err(self.cur.unexpected("'}'").into());
            }
            if self.cur.eat_punct('.') {
                continue;
            }
            self.check_unsupported_keyword()?;
            if self.cur.is_keyword("OPTIONAL") {
                if group.is_some() {
                    return Err(unsupported("nested OPTIONAL"));
                }
                self.cur.next();
                self.cur.expect_punct('{')?;
                let id = self.next_group;
                self.next_group += 1;
                let before = patterns.len();
                self.group_body(patterns, filters, Some(id))?;
                if patterns.len() == before {
                    return Err(self.syntax("empty OPTIONAL group"));
                }
                continue;
            }
            if self.cur.is_keyword("FILTER") {
                if group.is_some() {
                    return Err(unsupported("FILTER inside OPTIONAL"));
                }
                let (line, column) = self.cur.position();
                self.cur.next();
                let filter = self.filter()?;
                filters.push(filter);
                self.filter_positions.push((line, column));
                continue;
            }
            if self.cur.is_punct('{') {
                return Err(unsupported("nested group patterns"));
            }
            self.triples_same_subject(patterns, group)?;
        }
    }

    fn filter(&mut self) -> Result<Filter, SparqlError> {
        if self.cur.eat_punct('(') {
            let f = self.filter()?;
            if !self.cur.eat_punct(')') {
                if self.cur.is_punct('&') || self.cur.is_punct('|') {
                    return Err(unsupported("boolean filter connectives"));
                }
                return Err(self.cur.unexpected("')'").into());
            }
            return Ok(f);
        }
        let name = match self.cur.peek() {
            Some(Tok::Word(w)) => w.to_ascii_uppercase(),
            Some(Tok::Punct('!')) => return Err(unsupported("negated filters")),
            _ => return Err(unsupported("FILTER expression")),
        };
        match name.as_str() {
            "REGEX" | "CONTAINS" => {
                self.cur.next();
                self.cur.expect_punct('(')?;
                let var = match self.cur.next().map(|t| t.tok) {
                    Some(Tok::Var(v)) => Variable::new(v),
                    Some(Tok::Word(w)) => return Err(unsupported(format!("{} as {name} argument", w.to_ascii_uppercase()))),
                    _ => return Err(self.syntax(format!("expected variable as first {name} argument"))),
                };
                self.cur.expect_punct(',')?;
                let arg = self.string()?;
                let filter = if name == "REGEX" {
                    let flags = if self.cur.eat_punct(',') {
                        Some(self.string()?)
                    } else {
                        None
                    };
                    Filter::Regex {
                        var,
                        pattern: arg,
                        flags,
                    }
                } else {
                    Filter::Contains { var, needle: arg }
                };
                self.cur.expect_punct(')')?;
                Ok(filter)
            }
            other => Err(unsupported(format!("FILTER function {other}"))),
        }
    }

    fn string(&mut self) -> Result<String, SparqlError> {
        match self.cur.next().map(|t| t.tok) {
            Some(Tok::Str(s)) => Ok(s),
            _ => Err(self.syntax("expected string literal")),
        }
    }

    fn triples_same_subject(
        &mut self,
        patterns: &mut Vec<TriplePattern>,
        group: Option<usize>,
    ) -> Result<(), SparqlError> {
        let subject = self.pattern_term(Position::Subject)?;
        loop {
            let predicate = self.predicate()?;
            loop {
                let object = self.pattern_term(Position::Object)?;
                patterns.push(TriplePattern {
                    subject: subject.clone(),
                    predicate: predicate.clone(),
                    object,
                    optional_group: group,
                });
                if !self.cur.eat_punct(',') {
                    break;
                }
            }
            if !self.cur.eat_punct(';') {
                break;
            }
            while self.cur.eat_punct(';') {}
            if self.cur.is_punct('.') || self.cur.is_punct('}') {
                break;
            }
        }
        if !(self.cur.eat_punct('.') || self.cur.is_punct('}')) {
            self.check_unsupported_keyword()?;
            if self.cur.is_keyword("FILTER") || self.cur.is_keyword("OPTIONAL") {
                return Ok(());
            }
            return Err(self.cur.unexpected("'.' or '}'").into());
        }
        Ok(())
    }

    fn predicate(&mut self) -> Result<PatternTerm, SparqlError> {
        if matches!(self.cur.peek(), Some(Tok::Punct('^' | '!' | '('))) {
            return Err(unsupported("property paths"));
        }
        let p = if self.cur.eat_keyword("a") {
            PatternTerm::Term(Term::Iri(Iri::new_unchecked(RDF_TYPE)))
        } else {
            let p = self.pattern_term(Position::Predicate)?;
            if p.as_term().is_some_and(|t| t.as_iri().is_none()) {
                return Err(self.syntax("predicate must be an IRI or variable"));
            }
            p
        };
        if matches!(self.cur.peek(), Some(Tok::Punct('/' | '|' | '*' | '+' | '?'))) {
            return Err(unsupported("property paths"));
        }
        Ok(p)
    }

    fn pattern_term(&mut self, position: Position) -> Result<PatternTerm, SparqlError> {
        let tok = self.cur.peek().cloned();
        match tok {
            Some(Tok::Var(v)) => {
                self.cur.next();
                Ok(PatternTerm::Var(Variable::new(v)))
            }
            Some(Tok::Iri(_)) | Some(Tok::PName { .. }) => Ok(PatternTerm::Term(Term::Iri(self.iri()?))),
            Some(Tok::Blank(_)) | Some(Tok::Punct('[')) => Err(unsupported("blank nodes in query patterns")),
            Some(Tok::Punct('(')) => Err(unsupported("collections")),
            Some(Tok::Str(_) | Tok::Integer(_) | Tok::Decimal(_) | Tok::Double(_)) if position == Position::Object => {
                Ok(PatternTerm::Term(self.literal()?))
            }
            Some(Tok::Word(w)) if position == Position::Object && (w == "true" || w == "false") => {
                self.cur.next();
                Ok(PatternTerm::Term(Literal::typed(w, Iri::new_unchecked(XSD_BOOLEAN)).into()))
            }
            Some(Tok::Str(_)) if position == Position::Subject => {
                Err(self.syntax("literal in subject position"))
            }
            _ => {
                self.check_unsupported_keyword()?;
                Err(self.cur.unexpected("term or variable").into())
            }
        }
    }

    fn literal(&mut self) -> Result<Term, SparqlError> {
        let tok = self.cur.next().map(|t| t.tok);
        let lit = match tok {
            Some(Tok::Str(value)) => match self.cur.peek().cloned() {
                Some(Tok::LangTag(lang)) => {
                    self.cur.next();
                    Literal::lang(value, lang).map_err(|e| self.syntax(e.to_string()))?
                }
                Some(Tok::DoubleCaret) => {
                    self.cur.next();
                    Literal::typed(value, self.iri()?)
                }
                _ => Literal::string(value),
            },
            Some(Tok::Integer(n)) => Literal::typed(n, Iri::new_unchecked(XSD_INTEGER)),
            Some(Tok::Decimal(n)) => Literal::typed(n, Iri::new_unchecked(XSD_DECIMAL)),
            Some(Tok::Double(n)) => Literal::typed(n, Iri::new_unchecked(XSD_DOUBLE)),
            _ => return Err(self.syntax("expected literal")),
        };
        Ok(Term::Literal(lit))
    }

    fn iri_ref(&mut self) -> Result<Iri, SparqlError> {
        match self.cur.peek().cloned() {
            Some(Tok::Iri(_)) => self.iri(),
            _ => Err(self.cur.unexpected("IRI").into()),
        }
    }

    fn iri(&mut self) -> Result<Iri, SparqlError> {
        let (line, column) = self.cur.position();
        let err = |message: String| SparqlError::Syntax {
            line,
            column,
            message,
        };
        match self.cur.next().map(|t| t.tok) {
            Some(Tok::Iri(raw)) => {
                let resolved = if is_absolute_iri(&raw) {
                    raw
                } else if let Some(base) = &self.base {
                    resolve_iri(base, &raw)
                } else {
                    return Err(err(format!("relative IRI <{raw}> without BASE")));
                };
                Iri::new(resolved).map_err(|e| err(e.to_string()))
            }
            Some(Tok::PName { prefix, local }) => match self.prefixes.get(&prefix) {
                Some(ns) => Iri::new(format!("{ns}{local}")).map_err(|e| err(e.to_string())),
                None => Err(err(format!("undeclared prefix '{prefix}:'"))),
            },
            _ => Err(err("expected IRI".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Position {
    Subject,
    Predicate,
    Object,
}
