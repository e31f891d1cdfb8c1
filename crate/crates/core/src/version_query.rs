//! Single-version and cross-version structured queries.
//!
//! A query is answered without reconstructing the whole dataset: its triple
//! patterns are classified as joined (reachable from a subject IRI through
//! shared variables) or isolated, the entities that can contribute to an
//! answer are discovered by a fixpoint over reconstructed versions and
//! textual searches of the recorded updates, and only their versions are
//! merged into one dataset per point of the timeline.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::Arc;

use crate::error::Error;
use crate::materializer::VersionedGraph;
use crate::rdf::{GraphSet, Iri, Quad, Term};
use crate::sources::Context;
use crate::sparql::{evaluate, parse_select, ParsedQuery, PatternTerm, SolutionSet, TriplePattern, Variable};
use crate::time::{TimeInterval, Timestamp};

/// The joined/isolated partition of a query's patterns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryPlan {
    pub patterns: Vec<TriplePattern>,
    pub joined: Vec<TriplePattern>,
    pub isolated: Vec<TriplePattern>,
    /// Subject IRIs written in the query.
    pub seed_iris: BTreeSet<Iri>,
    /// Ground predicate and object terms of each isolated pattern.
    pub known_terms_per_isolated: BTreeMap<TriplePattern, BTreeSet<Term>>,
    joined_flags: Vec<bool>,
}

impl QueryPlan {
    pub fn is_joined(&self, pattern_index: usize) -> bool {
        self.joined_flags[pattern_index]
    }
}

/// Partitions the patterns of `query`. Two patterns are connected when they
/// share a variable in any position; a pattern is joined when its subject is
/// an IRI or its component holds a pattern with an IRI subject.
pub fn classify(query: &ParsedQuery) -> Result<QueryPlan, Error> {
    let patterns = &query.patterns;
    let n = patterns.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if patterns[i].variables().any(|v| patterns[j].variables().any(|w| v == w)) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    let anchored: HashSet<usize> = (0..n)
        .filter(|&i| patterns[i].subject.as_iri().is_some())
        .map(|i| roots[i])
        .collect();
    let joined_flags: Vec<bool> = (0..n).map(|i| anchored.contains(&roots[i])).collect();

    // Every isolated component needs something to search for.
    let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in (0..n).filter(|&i| !joined_flags[i]) {
        components.entry(roots[i]).or_default().push(i);
    }
    for members in components.values() {
        if members.iter().all(|&i| patterns[i].known_terms().is_empty()) {
            let text: Vec<String> = members.iter().map(|&i| patterns[i].to_string()).collect();
            return Err(Error::UnboundedQuery(text.join(" ")));
        }
    }

    let mut plan = QueryPlan {
        patterns: patterns.clone(),
        joined: Vec::new(),
        isolated: Vec::new(),
        seed_iris: patterns.iter().filter_map(|p| p.subject.as_iri().cloned()).collect(),
        known_terms_per_isolated: BTreeMap::new(),
        joined_flags,
    };
    for (i, p) in patterns.iter().enumerate() {
        if plan.joined_flags[i] {
            plan.joined.push(p.clone());
        } else {
            plan.isolated.push(p.clone());
            plan.known_terms_per_isolated
                .insert(p.clone(), p.known_terms().into_iter().collect());
        }
    }
    Ok(plan)
}

/// Entities relevant to a query and the versions reconstructed for them.
#[derive(Debug, Clone, Default)]
pub struct Explication {
    /// Every discovered entity.
    pub entities: BTreeSet<Iri>,
    /// In-interval versions of discovered entities that have a history.
    pub versions: BTreeMap<Iri, Vec<VersionedGraph>>,
    /// Current graphs of discovered entities without any snapshot.
    pub static_graphs: BTreeMap<Iri, Arc<GraphSet>>,
    /// Entities found only through searches for isolated patterns and, as
    /// requested, left unreconstructed.
    pub unmaterialized: BTreeSet<Iri>,
    pub delta_searches: usize,
}

impl Explication {
    /// Number of versions reconstructed or read from the cache.
    pub fn versions_involved(&self) -> usize {
        self.versions.values().map(Vec::len).sum()
    }
}

/// Variable-subject pattern whose subject cannot be reached from a subject
/// IRI, so its subjects are looked up in the recorded updates.
#[derive(Debug)]
struct SearchSpec {
    pattern: usize,
    ground: BTreeSet<Term>,
    /// Predicate/object variables whose values narrow the search.
    key_vars: Vec<Variable>,
    /// Found subjects may stay unreconstructed when only changes are wanted.
    isolated: bool,
}

fn subject_var(p: &TriplePattern) -> Option<&Variable> {
    p.subject.as_var()
}

fn object_vars(p: &TriplePattern) -> impl Iterator<Item = &Variable> + '_ {
    [&p.predicate, &p.object].into_iter().filter_map(PatternTerm::as_var)
}

/// Variables bound by forward matching from subject IRIs.
fn reachable_vars(patterns: &[TriplePattern], required: &[usize]) -> HashSet<Variable> {
    forward_closure(patterns, required, HashSet::new())
}

/// Extends `reach` with the variables forward matching binds from it.
fn forward_closure(patterns: &[TriplePattern], required: &[usize], mut reach: HashSet<Variable>) -> HashSet<Variable> {
    loop {
        let before = reach.len();
        for &i in required {
            let p = &patterns[i];
            let bound = match subject_var(p) {
                None => true,
                Some(v) => reach.contains(v),
            };
            if bound {
                reach.extend(object_vars(p).cloned());
            }
        }
        if reach.len() == before {
            return reach;
        }
    }
}

fn search_specs(plan: &QueryPlan, required: &[usize]) -> Vec<SearchSpec> {
    let patterns = &plan.patterns;
    let reach = reachable_vars(patterns, required);
    // Most selective first: a pattern whose subject is already produced by an
    // earlier search is matched forward from those subjects instead.
    let mut candidates: Vec<usize> = required
        .iter()
        .copied()
        .filter(|&i| subject_var(&patterns[i]).is_some_and(|v| !reach.contains(v)))
        .collect();
    candidates.sort_by_key(|&i| {
        let p = &patterns[i];
        (p.object.as_term().is_none(), p.known_terms().is_empty())
    });
    let mut searched: Vec<usize> = Vec::new();
    let mut produced = reach.clone();
    for i in candidates {
        let v = subject_var(&patterns[i]).expect("candidates have variable subjects");
        if produced.contains(v) {
            continue;
        }
        searched.push(i);
        produced.insert(v.clone());
        produced.extend(object_vars(&patterns[i]).cloned());
        produced = forward_closure(patterns, required, produced);
    }
    searched
        .iter()
        .filter_map(|&i| {
            // Variables that get values without this pattern's help.
            let mut valued = reach.clone();
            loop {
                let before = valued.len();
                for &j in required.iter().filter(|&&j| j != i) {
                    let q = &patterns[j];
                    let subject_valued = match subject_var(q) {
                        None => true,
                        Some(v) => valued.contains(v),
                    };
                    if subject_valued {
                        valued.extend(object_vars(q).cloned());
                    } else if searched.contains(&j)
                        && (!q.known_terms().is_empty() || object_vars(q).any(|v| valued.contains(v)))
                    {
                        valued.extend(subject_var(q).cloned());
                    }
                }
                if valued.len() == before {
                    break;
                }
            }
            let p = &patterns[i];
            let ground: BTreeSet<Term> = p.known_terms().into_iter().collect();
            let mut key_vars: Vec<Variable> = object_vars(p).filter(|v| valued.contains(*v)).cloned().collect();
            key_vars.dedup();
            let sv = subject_var(p);
            let feeds_forward = required
                .iter()
                .any(|&j| !searched.contains(&j) && subject_var(&patterns[j]) == sv);
            (!ground.is_empty() || !key_vars.is_empty()).then(|| SearchSpec {
                pattern: i,
                ground,
                key_vars,
                isolated: !plan.is_joined(i) && !feeds_forward,
            })
        })
        .collect()
}

/// Bindings produced by matching `p` against `q`, or `None` on mismatch.
fn match_quad<'a>(p: &'a TriplePattern, q: &Quad) -> Option<Vec<(&'a Variable, Term)>> {
    let predicate = Term::Iri(q.predicate().clone());
    let mut out: Vec<(&Variable, Term)> = Vec::with_capacity(3);
    for (pt, t) in [(&p.subject, q.subject()), (&p.predicate, &predicate), (&p.object, q.object())] {
        match pt {
            PatternTerm::Term(g) => {
                if g != t {
                    return None;
                }
            }
            PatternTerm::Var(v) => match out.iter().find(|(w, _)| *w == v) {
                Some((_, bound)) if bound != t => return None,
                Some(_) => {}
                None => out.push((v, t.clone())),
            },
        }
    }
    Some(out)
}

/// `p` with variables replaced by the assigned terms; `None` when an
/// assignment cannot occur in its position.
fn substitute(p: &TriplePattern, assignment: &[(Variable, Term)]) -> Option<TriplePattern> {
    let fix = |pt: &PatternTerm| -> PatternTerm {
        match pt.as_var().and_then(|v| assignment.iter().find(|(w, _)| w == v)) {
            Some((_, t)) => PatternTerm::Term(t.clone()),
            None => pt.clone(),
        }
    };
    let out = TriplePattern {
        subject: p.subject.clone(),
        predicate: fix(&p.predicate),
        object: fix(&p.object),
        optional_group: p.optional_group,
    };
    match &out.predicate {
        PatternTerm::Term(t) if t.as_iri().is_none() => None,
        _ => Some(out),
    }
}

/// Discovers the entities relevant to `plan` within `interval` and
/// reconstructs their versions overlapping it. With `materialize_isolated`
/// unset, entities reached only through isolated-pattern searches are
/// recorded but not reconstructed.
pub fn explicate(
    plan: &QueryPlan,
    ctx: &Context,
    interval: TimeInterval,
    materialize_isolated: bool,
) -> Result<Explication, Error> {
    let patterns = &plan.patterns;
    let limit = ctx.explosion_limit();
    let required: Vec<usize> = (0..patterns.len()).filter(|&i| !patterns[i].is_optional()).collect();
    let subject_vars: HashSet<&Variable> = patterns.iter().filter_map(subject_var).collect();
    let specs = search_specs(plan, &required);

    let mut out = Explication::default();
    let mut values: BTreeMap<Variable, BTreeSet<Term>> = BTreeMap::new();
    let mut pending: Vec<Iri> = Vec::new();
    let mut matched: HashSet<(usize, Iri)> = HashSet::new();
    let mut searched: HashSet<(usize, BTreeSet<Term>)> = HashSet::new();

    let discover = |out: &mut Explication, pending: &mut Vec<Iri>, e: &Iri, materialize: bool| -> Result<bool, Error> {
        if out.entities.contains(e) {
            if materialize && out.unmaterialized.remove(e) {
                pending.push(e.clone());
                return Ok(true);
            }
            return Ok(false);
        }
        out.entities.insert(e.clone());
        if out.entities.len() > limit {
            return Err(Error::ExplosionLimit(limit));
        }
        if materialize {
            pending.push(e.clone());
        } else {
            out.unmaterialized.insert(e.clone());
        }
        Ok(true)
    };

    for e in &plan.seed_iris {
        discover(&mut out, &mut pending, e, true)?;
    }

    loop {
        let mut changed = false;

        for e in pending.drain(..) {
            match ctx.history(&e)? {
                Some(history) => {
                    let versions = ctx.versions_overlapping(&history, interval)?;
                    out.versions.insert(e, versions);
                }
                None => {
                    out.static_graphs.insert(e.clone(), ctx.current_graph(&e)?);
                }
            }
        }

        // Forward matching over reconstructed versions.
        for &i in &required {
            let p = &patterns[i];
            let candidates: Vec<Iri> = match &p.subject {
                PatternTerm::Term(Term::Iri(s)) => vec![s.clone()],
                PatternTerm::Term(_) => Vec::new(),
                PatternTerm::Var(v) => values
                    .get(v)
                    .into_iter()
                    .flatten()
                    .filter_map(|t| t.as_iri().cloned())
                    .collect(),
            };
            for e in candidates {
                let graphs: Vec<&GraphSet> = match (out.versions.get(&e), out.static_graphs.get(&e)) {
                    (Some(vs), _) => vs.iter().map(|v| &v.graphs).collect(),
                    (None, Some(g)) => vec![g.as_ref()],
                    (None, None) => continue,
                };
                if !matched.insert((i, e.clone())) {
                    continue;
                }
                let subject = Term::Iri(e.clone());
                for g in graphs {
                    for q in g.with_subject(&subject) {
                        if let Some(bindings) = match_quad(p, q) {
                            for (v, t) in bindings {
                                changed |= values.entry(v.clone()).or_default().insert(t);
                            }
                        }
                    }
                }
            }
        }
        let promoted: Vec<Iri> = values
            .iter()
            .filter(|(v, _)| subject_vars.contains(v))
            .flat_map(|(_, ts)| ts.iter().filter_map(|t| t.as_iri().cloned()))
            .collect();
        for e in &promoted {
            changed |= discover(&mut out, &mut pending, e, true)?;
        }

        // Textual search for patterns whose subject forward matching cannot reach.
        for spec in &specs {
            let p = &patterns[spec.pattern];
            let mut assignments: Vec<Vec<(Variable, Term)>> = vec![Vec::new()];
            for v in &spec.key_vars {
                let vals = values.get(v).cloned().unwrap_or_default();
                if assignments.len().saturating_mul(vals.len()) > limit {
                    return Err(Error::ExplosionLimit(limit));
                }
                assignments = assignments
                    .iter()
                    .flat_map(|a| {
                        vals.iter().map(move |t| {
                            let mut a = a.clone();
                            a.push((v.clone(), t.clone()));
                            a
                        })
                    })
                    .collect();
            }
            let sv = subject_var(p).expect("searched patterns have variable subjects");
            for assignment in assignments {
                let Some(narrowed) = substitute(p, &assignment) else {
                    continue;
                };
                let key: BTreeSet<Term> = spec
                    .ground
                    .iter()
                    .cloned()
                    .chain(assignment.iter().map(|(_, t)| t.clone()))
                    .collect();
                if key.is_empty() || !searched.insert((spec.pattern, key.clone())) {
                    continue;
                }
                let mut found: BTreeSet<Iri> = BTreeSet::new();
                out.delta_searches += 1;
                for hit in ctx.search_deltas(&key)? {
                    for q in hit.delta.quads() {
                        if match_quad(&narrowed, q).is_some() {
                            found.extend(q.subject().as_iri().cloned());
                        }
                    }
                }
                let pred = narrowed.predicate.as_iri();
                let obj = narrowed.object.as_term();
                if pred.is_some() || obj.is_some() {
                    found.extend(ctx.subjects_matching(pred, obj)?);
                }
                for e in found {
                    changed |= values.entry(sv.clone()).or_default().insert(Term::Iri(e.clone()));
                    changed |= discover(&mut out, &mut pending, &e, materialize_isolated || !spec.isolated)?;
                }
            }
        }

        if !changed && pending.is_empty() {
            break;
        }
    }
    Ok(out)
}

/// Relevant entities' versions merged per point in time.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AlignedTimeline {
    pub times: Vec<Timestamp>,
    pub datasets: BTreeMap<Timestamp, GraphSet>,
}

/// Aligns per-entity versions (each list sorted oldest first) on the union of
/// their times within `interval`, copying each entity's latest state forward.
pub fn align_and_merge(histories: &[(Iri, Vec<VersionedGraph>)], interval: TimeInterval) -> AlignedTimeline {
    let times: BTreeSet<Timestamp> = histories
        .iter()
        .flat_map(|(_, vs)| vs.iter().map(VersionedGraph::time))
        .filter(|t| interval.contains(*t))
        .collect();
    let times: Vec<Timestamp> = times.into_iter().collect();
    let datasets = times.iter().map(|&t| (t, state_at(histories, t))).collect();
    AlignedTimeline { times, datasets }
}

fn state_at(histories: &[(Iri, Vec<VersionedGraph>)], t: Timestamp) -> GraphSet {
    let mut g = GraphSet::new();
    for (_, versions) in histories {
        let k = versions.partition_point(|v| v.time() <= t);
        if let Some(v) = k.checked_sub(1).map(|k| &versions[k]) {
            g.extend_from(&v.graphs);
        }
    }
    g
}

/// Visits the same states as [`align_and_merge`], oldest first, updating one
/// working dataset in place instead of building every state. `base` is
/// present in every state. The flag tells whether the state differs from the
/// previously visited one.
pub fn for_each_aligned<E>(
    histories: &[(Iri, Vec<VersionedGraph>)],
    interval: TimeInterval,
    base: GraphSet,
    mut visit: impl FnMut(Timestamp, &GraphSet, bool) -> Result<(), E>,
) -> Result<(), E> {
    // (time, history, version) for every version inside the interval.
    let mut events: Vec<(Timestamp, usize, usize)> = histories
        .iter()
        .enumerate()
        .flat_map(|(h, (_, vs))| vs.iter().enumerate().map(move |(k, v)| (v.time(), h, k)))
        .filter(|(t, _, _)| interval.contains(*t))
        .collect();
    events.sort_unstable();
    let Some(&(first, _, _)) = events.first() else {
        return Ok(());
    };
    let mut data = state_at(histories, first);
    data.extend_from(&base);
    let mut i = 0;
    while i < events.len() {
        let t = events[i].0;
        let mut changed = t == first;
        while i < events.len() && events[i].0 == t {
            let (_, h, k) = events[i];
            let versions = &histories[h].1;
            if t != first {
                let prev = k.checked_sub(1).map(|p| &versions[p].graphs);
                let next = &versions[k].graphs;
                // Entities never share quads, but the base may.
                for q in prev.into_iter().flatten().filter(|q| !next.contains(q) && !base.contains(q)) {
                    changed |= data.remove(q);
                }
                for q in next {
                    changed |= data.insert(q.clone());
                }
            }
            i += 1;
        }
        visit(t, &data, changed)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryMode {
    /// One answer per point of the timeline.
    CrossVersion,
    /// One answer for the state at the given time.
    SingleVersion(Timestamp),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct QueryStats {
    pub entities: usize,
    pub versions_involved: usize,
    pub delta_searches: usize,
}

#[derive(Debug, Clone)]
pub struct QueryOutcome {
    /// Keyed by timeline time (cross-version) or by the requested time.
    pub results: BTreeMap<Timestamp, SolutionSet>,
    pub relevant: BTreeSet<Iri>,
    pub plan: QueryPlan,
    pub stats: QueryStats,
}

/// Parses, plans and answers `query_text` within `interval`.
pub fn run(query_text: &str, mode: QueryMode, interval: TimeInterval, ctx: &Context) -> Result<QueryOutcome, Error> {
    let query = parse_select(query_text)?;
    run_parsed(&query, mode, interval, ctx)
}

pub fn run_parsed(query: &ParsedQuery, mode: QueryMode, interval: TimeInterval, ctx: &Context) -> Result<QueryOutcome, Error> {
    let plan = classify(query)?;
    let scope = match mode {
        QueryMode::CrossVersion => interval,
        QueryMode::SingleVersion(t) => TimeInterval::instant(t),
    };
    let ex = explicate(&plan, ctx, scope, true)?;
    // Only quads that match some pattern can take part in a solution.
    let usable = |g: &GraphSet| -> GraphSet {
        g.iter()
            .filter(|q| query.patterns.iter().any(|p| match_quad(p, q).is_some()))
            .cloned()
            .collect()
    };
    let histories: Vec<(Iri, Vec<VersionedGraph>)> = ex
        .versions
        .iter()
        .map(|(e, vs)| {
            let vs = vs
                .iter()
                .map(|v| VersionedGraph {
                    graphs: usable(&v.graphs),
                    ..v.clone()
                })
                .collect();
            (e.clone(), vs)
        })
        .collect();
    let mut statics = GraphSet::new();
    for g in ex.static_graphs.values() {
        statics.extend_from(&usable(g));
    }

    let mut results = BTreeMap::new();
    match mode {
        QueryMode::CrossVersion => {
            let mut last: Option<SolutionSet> = None;
            for_each_aligned(&histories, interval, statics, |t, data, changed| {
                let answer = match last.take() {
                    Some(previous) if !changed => previous,
                    _ => evaluate(query, data)?,
                };
                results.insert(t, answer.clone());
                last = Some(answer);
                Ok::<_, Error>(())
            })?;
        }
        QueryMode::SingleVersion(t) => {
            let mut data = state_at(&histories, t);
            data.extend_from(&statics);
            results.insert(t, evaluate(query, &data)?);
        }
    }
    Ok(QueryOutcome {
        results,
        stats: QueryStats {
            entities: ex.entities.len(),
            versions_involved: ex.versions_involved(),
            delta_searches: ex.delta_searches,
        },
        relevant: ex.entities,
        plan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparql::parse_select;

    fn plan(q: &str) -> Result<QueryPlan, Error> {
        classify(&parse_select(q).unwrap())
    }

    #[test]
    fn chain_from_iri_is_joined() {
        let p = plan("SELECT * WHERE { <http://e/a> <http://e/p> ?x . ?x <http://e/q> ?y . ?y <http://e/r> ?z }").unwrap();
        assert_eq!(p.joined.len(), 3);
        assert!(p.isolated.is_empty());
    }

    #[test]
    fn backwards_link_is_joined() {
        let p = plan("SELECT * WHERE { <http://e/a> <http://e/p> ?x . ?y <http://e/q> ?x }").unwrap();
        assert_eq!(p.joined.len(), 2);
    }

    #[test]
    fn disconnected_pattern_is_isolated() {
        let p = plan("SELECT * WHERE { <http://e/a> <http://e/p> ?x . ?y <http://e/q> \"v\" }").unwrap();
        assert_eq!(p.isolated.len(), 1);
        let known = &p.known_terms_per_isolated[&p.isolated[0]];
        assert_eq!(known.len(), 2);
    }

    #[test]
    fn ground_free_isolated_component_is_unbounded() {
        let err = plan("SELECT * WHERE { ?s ?p ?o }").unwrap_err();
        assert_eq!(err.code(), "UnboundedQuery");
        assert!(plan("SELECT * WHERE { ?s ?p ?o . ?s <http://e/p> ?x }").is_ok());
    }

    #[test]
    fn partition_ignores_pattern_order() {
        let a = plan("SELECT * WHERE { ?y <http://e/q> ?x . <http://e/a> <http://e/p> ?x . ?z <http://e/r> 1 }").unwrap();
        let b = plan("SELECT * WHERE { ?z <http://e/r> 1 . <http://e/a> <http://e/p> ?x . ?y <http://e/q> ?x }").unwrap();
        let set = |v: &[TriplePattern]| v.iter().cloned().collect::<BTreeSet<_>>();
        assert_eq!(set(&a.joined), set(&b.joined));
        assert_eq!(set(&a.isolated), set(&b.isolated));
    }
}
