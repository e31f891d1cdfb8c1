use std::collections::{BTreeSet, HashMap};

use aho_corasick::AhoCorasick;

use super::DeltaHit;

/// Inverted index from term N-Triples forms to the updates whose canonical
/// text contains them.
#[derive(Debug, Default)]
pub struct TextIndex {
    entries: Vec<DeltaHit>,
    postings: HashMap<String, BTreeSet<usize>>,
}

impl TextIndex {
    pub fn build(entries: Vec<DeltaHit>) -> Self {
        let mut vocabulary = BTreeSet::new();
        for e in &entries {
            for q in e.delta.quads() {
                vocabulary.insert(q.subject().to_string());
                vocabulary.insert(format!("{}", q.predicate()));
                vocabulary.insert(q.object().to_string());
            }
        }
        let vocabulary: Vec<String> = vocabulary.into_iter().collect();
        let mut postings: HashMap<String, BTreeSet<usize>> = HashMap::new();
        if !vocabulary.is_empty() {
            let matcher = AhoCorasick::new(&vocabulary).expect("vocabulary patterns are plain strings");
            for (i, e) in entries.iter().enumerate() {
                for m in matcher.find_overlapping_iter(e.delta.source_text()) {
                    postings
                        .entry(vocabulary[m.pattern().as_usize()].clone())
                        .or_default()
                        .insert(i);
                }
            }
        }
        TextIndex { entries, postings }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn terms(&self) -> usize {
        self.postings.len()
    }

    /// Entries whose text contains every form. Forms outside the indexed
    /// vocabulary fall back to a scan.
    pub fn lookup(&self, forms: &[String]) -> Vec<DeltaHit> {
        let mut candidates: Option<BTreeSet<usize>> = None;
        let mut unindexed = Vec::new();
        for f in forms {
            match self.postings.get(f) {
                Some(p) => {
                    candidates = Some(match candidates {
                        None => p.clone(),
                        Some(c) => c.intersection(p).copied().collect(),
                    })
                }
                None => unindexed.push(f),
            }
        }
        let ids: Vec<usize> = match candidates {
            Some(c) => c.into_iter().collect(),
            None => (0..self.entries.len()).collect(),
        };
        ids.into_iter()
            .map(|i| &self.entries[i])
            .filter(|e| unindexed.iter().all(|f| e.delta.source_text().contains(f.as_str())))
            .cloned()
            .collect()
    }
}
