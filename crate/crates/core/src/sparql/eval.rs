use std::collections::{HashMap, HashSet};

use regex::{Regex, RegexBuilder};

use super::{Filter, ParsedQuery, PatternTerm, Solution, SolutionSet, SparqlError, TriplePattern, Variable};
use crate::rdf::{GraphSet, Iri, Term, Triple};

/// Evaluates `query` over the union of all graphs in `data`; graph names are ignored.
pub fn evaluate(query: &ParsedQuery, data: &GraphSet) -> Result<SolutionSet, SparqlError> {
    evaluate_triples(query, data.iter().map(|q| &q.triple))
}

/// Same as [`evaluate`], over any collection of borrowed triples (duplicates collapse).
pub fn evaluate_triples<'a>(
    query: &ParsedQuery,
    triples: impl IntoIterator<Item = &'a Triple>,
) -> Result<SolutionSet, SparqlError> {
    let slots = Slots::new(query);
    let filters = compile_filters(&query.filters, &slots)?;
    let index = TripleIndex::new(triples);

    let required: Vec<&TriplePattern> = query.patterns.iter().filter(|p| !p.is_optional()).collect();
    let mut rows: Vec<Row> = vec![vec![None; slots.len()]];
    for pattern in join_order(&required, &slots, &vec![false; slots.len()]) {
        rows = extend_all(&index, &slots, pattern, rows);
        if rows.is_empty() {
            break;
        }
    }

    for group in query.optional_groups() {
        let members: Vec<&TriplePattern> = query
            .patterns
            .iter()
            .filter(|p| p.optional_group == Some(group))
            .collect();
        let mut next = Vec::with_capacity(rows.len());
        for row in rows {
            let bound: Vec<bool> = row.iter().map(Option::is_some).collect();
            let mut ext = vec![row.clone()];
            for pattern in join_order(&members, &slots, &bound) {
                ext = extend_all(&index, &slots, pattern, ext);
                if ext.is_empty() {
                    break;
                }
            }
            if ext.is_empty() {
                next.push(row);
            } else {
                next.extend(ext);
            }
        }
        rows = next;
    }

    rows.retain(|row| {
        filters
            .iter()
            .all(|(slot, f)| slot.and_then(|s| row[s].as_ref()).is_some_and(|t| f.accepts(t)))
    });

    let projected: Vec<(Variable, Option<usize>)> = query
        .projected
        .iter()
        .map(|v| (v.clone(), slots.get(v)))
        .collect();
    let mut solutions: Vec<Solution> = rows
        .into_iter()
        .map(|row| {
            projected
                .iter()
                .filter_map(|(v, slot)| slot.and_then(|s| row[s].clone()).map(|t| (v.clone(), t)))
                .collect()
        })
        .collect();
    if query.distinct {
        let mut seen = HashSet::new();
        solutions.retain(|s| seen.insert(s.clone()));
    }
    Ok(SolutionSet::new(query.projected.clone(), solutions))
}

type Row = Vec<Option<Term>>;

struct Slots(HashMap<Variable, usize>);

impl Slots {
    fn new(query: &ParsedQuery) -> Self {
        let mut map = HashMap::new();
        for v in query.patterns.iter().flat_map(TriplePattern::variables) {
            let n = map.len();
            map.entry(v.clone()).or_insert(n);
        }
        Slots(map)
    }

    fn len(&self) -> usize {
        self.0.len()
    }

    fn get(&self, v: &Variable) -> Option<usize> {
        self.0.get(v).copied()
    }
}

/// Greedy order: next is the pattern with the most positions already fixed.
fn join_order<'p>(patterns: &[&'p TriplePattern], slots: &Slots, initially_bound: &[bool]) -> Vec<&'p TriplePattern> {
    let mut bound = initially_bound.to_vec();
    let mut remaining: Vec<&TriplePattern> = patterns.to_vec();
    let mut order = Vec::with_capacity(patterns.len());
    while !remaining.is_empty() {
        let score = |p: &TriplePattern| {
            p.positions()
                .iter()
                .filter(|pt| match pt {
                    PatternTerm::Term(_) => true,
                    PatternTerm::Var(v) => slots.get(v).is_some_and(|s| bound[s]),
                })
                .count()
        };
        let (best, _) = remaining
            .iter()
            .enumerate()
            .fold((0, 0), |(bi, bs), (i, p)| {
                let s = score(p);
                if i == 0 || s > bs {
                    (i, s)
                } else {
                    (bi, bs)
                }
            });
        let p = remaining.remove(best);
        for v in p.variables() {
            if let Some(s) = slots.get(v) {
                bound[s] = true;
            }
        }
        order.push(p);
    }
    order
}

fn extend_all(index: &TripleIndex<'_>, slots: &Slots, pattern: &TriplePattern, rows: Vec<Row>) -> Vec<Row> {
    let mut out = Vec::new();
    for row in rows {
        index.extend(slots, pattern, &row, &mut out);
    }
    out
}

pub(crate) struct TripleIndex<'a> {
    triples: Vec<&'a Triple>,
    by_subject: HashMap<&'a Term, Vec<u32>>,
    by_predicate: HashMap<&'a Iri, Vec<u32>>,
    by_object: HashMap<&'a Term, Vec<u32>>,
}

enum Fixed<'t> {
    Term(&'t Term),
    Free(usize),
}

fn fix<'t>(pt: &'t PatternTerm, row: &'t Row, slots: &Slots) -> Option<Fixed<'t>> {
    match pt {
        PatternTerm::Term(t) => Some(Fixed::Term(t)),
        PatternTerm::Var(v) => {
            let s = slots.get(v)?;
            Some(match &row[s] {
                Some(t) => Fixed::Term(t),
                None => Fixed::Free(s),
            })
        }
    }
}

impl<'a> TripleIndex<'a> {
    pub(crate) fn new(triples: impl IntoIterator<Item = &'a Triple>) -> Self {
        let mut seen = HashSet::new();
        let mut index = TripleIndex {
            triples: Vec::new(),
            by_subject: HashMap::new(),
            by_predicate: HashMap::new(),
            by_object: HashMap::new(),
        };
        for t in triples {
            if !seen.insert(t) {
                continue;
            }
            let i = index.triples.len() as u32;
            index.triples.push(t);
            index.by_subject.entry(t.subject()).or_default().push(i);
            index.by_predicate.entry(t.predicate()).or_default().push(i);
            index.by_object.entry(t.object()).or_default().push(i);
        }
        index
    }

    fn extend(&self, slots: &Slots, pattern: &TriplePattern, row: &Row, out: &mut Vec<Row>) {
        let (Some(s), Some(p), Some(o)) = (
            fix(&pattern.subject, row, slots),
            fix(&pattern.predicate, row, slots),
            fix(&pattern.object, row, slots),
        ) else {
            return;
        };

        let empty: &[u32] = &[];
        let mut lists: Vec<&[u32]> = Vec::with_capacity(3);
        if let Fixed::Term(t) = &s {
            lists.push(self.by_subject.get(*t).map_or(empty, Vec::as_slice));
        }
        if let Fixed::Term(t) = &p {
            let list = t.as_iri().and_then(|iri| self.by_predicate.get(iri));
            lists.push(list.map_or(empty, Vec::as_slice));
        }
        if let Fixed::Term(t) = &o {
            lists.push(self.by_object.get(*t).map_or(empty, Vec::as_slice));
        }
        let candidates = lists.into_iter().min_by_key(|l| l.len());

        let mut visit = |triple: &Triple| {
            let mut next = row.clone();
            let predicate = Term::Iri(triple.predicate().clone());
            for (fixed, value) in [(&s, triple.subject()), (&p, &predicate), (&o, triple.object())] {
                match fixed {
                    Fixed::Term(t) => {
                        if *t != value {
                            return;
                        }
                    }
                    Fixed::Free(slot) => match &next[*slot] {
                        Some(existing) if existing != value => return,
                        Some(_) => {}
                        None => next[*slot] = Some(value.clone()),
                    },
                }
            }
            out.push(next);
        };
        match candidates {
            Some(list) => list.iter().for_each(|&i| visit(self.triples[i as usize])),
            None => self.triples.iter().for_each(|t| visit(t)),
        }
    }
}

enum CompiledFilter {
    Regex(Regex),
    Contains(String),
}

impl CompiledFilter {
    /// Only simple, `xsd:string` and language-tagged literals pass; anything
    /// else is a type error, which rejects the row.
    fn accepts(&self, term: &Term) -> bool {
        let Some(lit) = term.as_literal().filter(|l| l.is_string_like()) else {
            return false;
        };
        match self {
            CompiledFilter::Regex(re) => re.is_match(lit.value()),
            CompiledFilter::Contains(needle) => lit.value().contains(needle.as_str()),
        }
    }
}

fn compile_filters(filters: &[Filter], slots: &Slots) -> Result<Vec<(Option<usize>, CompiledFilter)>, SparqlError> {
    filters
        .iter()
        .map(|f| {
            let compiled = match f {
                Filter::Regex { pattern, flags, .. } => CompiledFilter::Regex(compile_regex(pattern, flags.as_deref())?),
                Filter::Contains { needle, .. } => CompiledFilter::Contains(needle.clone()),
            };
            Ok((slots.get(f.variable()), compiled))
        })
        .collect()
}

fn compile_regex(pattern: &str, flags: Option<&str>) -> Result<Regex, SparqlError> {
    let bad = |message: String| SparqlError::BadRegex {
        pattern: pattern.to_string(),
        message,
    };
    let mut builder = RegexBuilder::new(pattern);
    for flag in flags.unwrap_or("").chars() {
        match flag {
            'i' => builder.case_insensitive(true),
            's' => builder.dot_matches_new_line(true),
            'm' => builder.multi_line(true),
            'x' => builder.ignore_whitespace(true),
            other => return Err(bad(format!("unknown flag '{other}'"))),
        };
    }
    builder.build().map_err(|e| bad(e.to_string()))
}
