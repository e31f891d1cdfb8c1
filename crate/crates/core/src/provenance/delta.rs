use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::rdf::{GraphSet, Iri, Quad, Term};

/// A ground change set: quads removed and quads added.
///
/// Deletes and inserts never overlap. Applying a delta removes its deletes and
/// then adds its inserts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Delta {
    deletes: Vec<Quad>,
    inserts: Vec<Quad>,
    source_text: String,
}

impl Delta {
    pub fn new(deletes: Vec<Quad>, inserts: Vec<Quad>) -> Self {
        let inserts = dedup(inserts);
        let added: HashSet<&Quad> = inserts.iter().collect();
        let deletes: Vec<Quad> = dedup(deletes).into_iter().filter(|q| !added.contains(q)).collect();
        let source_text = render(&deletes, &inserts);
        Delta {
            deletes,
            inserts,
            source_text,
        }
    }

    pub fn empty() -> Self {
        Delta::default()
    }

    pub fn deletes(&self) -> &[Quad] {
        &self.deletes
    }

    pub fn inserts(&self) -> &[Quad] {
        &self.inserts
    }

    /// Canonical update text: `DELETE DATA { ... } ; INSERT DATA { ... }`.
    pub fn source_text(&self) -> &str {
        &self.source_text
    }

    pub fn is_empty(&self) -> bool {
        self.deletes.is_empty() && self.inserts.is_empty()
    }

    pub fn invert(&self) -> Delta {
        Delta::new(self.inserts.clone(), self.deletes.clone())
    }

    /// The net effect of applying `self` and then `later`: for every quad the
    /// last action wins.
    pub fn then(&self, later: &Delta) -> Delta {
        compose([self, later])
    }

    pub fn apply(&self, graph: &GraphSet) -> GraphSet {
        let mut out = graph.clone();
        self.apply_in_place(&mut out);
        out
    }

    pub fn apply_in_place(&self, graph: &mut GraphSet) {
        for q in &self.deletes {
            graph.remove(q);
        }
        for q in &self.inserts {
            graph.insert(q.clone());
        }
    }

    pub fn quads(&self) -> impl Iterator<Item = &Quad> + '_ {
        self.deletes.iter().chain(&self.inserts)
    }

    pub fn predicates(&self) -> impl Iterator<Item = &Iri> + '_ {
        self.quads().map(Quad::predicate)
    }

    /// Keeps only the quads whose subject satisfies `keep`.
    pub fn restrict(&self, mut keep: impl FnMut(&Term) -> bool) -> Delta {
        Delta::new(
            self.deletes.iter().filter(|q| keep(q.subject())).cloned().collect(),
            self.inserts.iter().filter(|q| keep(q.subject())).cloned().collect(),
        )
    }
}

/// Sequential composition of `deltas`, first to last.
pub fn compose<'a>(deltas: impl IntoIterator<Item = &'a Delta>) -> Delta {
    // quad -> (is_insert, order of last action)
    let mut last: HashMap<&Quad, (bool, usize)> = HashMap::new();
    let mut step = 0;
    for d in deltas {
        for q in &d.deletes {
            last.insert(q, (false, step));
            step += 1;
        }
        for q in &d.inserts {
            last.insert(q, (true, step));
            step += 1;
        }
    }
    let mut actions: Vec<(usize, bool, &Quad)> = last.into_iter().map(|(q, (ins, at))| (at, ins, q)).collect();
    actions.sort_unstable_by_key(|a| a.0);
    let (mut deletes, mut inserts) = (Vec::new(), Vec::new());
    for (_, is_insert, q) in actions {
        if is_insert {
            inserts.push(q.clone());
        } else {
            deletes.push(q.clone());
        }
    }
    Delta::new(deletes, inserts)
}

fn dedup(quads: Vec<Quad>) -> Vec<Quad> {
    let mut seen = HashSet::new();
    quads.into_iter().filter(|q| seen.insert(q.clone())).collect()
}

fn render(deletes: &[Quad], inserts: &[Quad]) -> String {
    let mut out = String::new();
    for (keyword, quads) in [("DELETE", deletes), ("INSERT", inserts)] {
        if quads.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push_str(" ; ");
        }
        let _ = write!(out, "{keyword} DATA {{ ");
        let mut graphs: Vec<Option<&Iri>> = Vec::new();
        for q in quads {
            if !graphs.contains(&q.graph.as_ref()) {
                graphs.push(q.graph.as_ref());
            }
        }
        for g in graphs {
            if let Some(g) = g {
                let _ = write!(out, "GRAPH {g} {{ ");
            }
            for q in quads.iter().filter(|q| q.graph.as_ref() == g) {
                let _ = write!(out, "{} {} {} . ", q.subject(), q.predicate(), q.object());
            }
            if g.is_some() {
                out.push_str("} ");
            }
        }
        out.push('}');
    }
    out
}
