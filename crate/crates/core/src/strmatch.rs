//! Levenshtein-based candidate generation over every KOS name and synonym.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::kos::{KnowledgeBase, LabelIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateSource {
    StringMatch,
    Xmr,
    ExactLookup,
}

impl fmt::Display for CandidateSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CandidateSource::StringMatch => "string-match",
            CandidateSource::Xmr => "xmr",
            CandidateSource::ExactLookup => "exact-lookup",
        })
    }
}

/// A candidate concept for one mention, with a score in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub concept_index: LabelIndex,
    pub score: f64,
    pub source: CandidateSource,
    pub matched_surface: String,
}

/// Levenshtein distance over Unicode scalar values with unit costs.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    edit_distance_chars(&a, &b)
}

fn edit_distance_chars(a: &[char], b: &[char]) -> usize {
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - d / max(|a|, |b|)`; two empty strings are identical.
pub fn similarity(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    similarity_chars(&a, &b)
}

fn similarity_chars(a: &[char], b: &[char]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    ratio(longest - edit_distance_chars(a, b), longest)
}

fn ratio(same: usize, longest: usize) -> f64 {
    same as f64 / longest as f64
}

/// Upper bound of [`similarity`] for strings of the given lengths.
fn length_bound(q: usize, l: usize) -> f64 {
    let longest = q.max(l);
    if longest == 0 {
        return 1.0;
    }
    ratio(longest - q.abs_diff(l), longest)
}

#[derive(Debug, Clone)]
struct Entry {
    surface: String,
    chars: Vec<char>,
    concept: LabelIndex,
}

/// Searchable set of lowercased surface forms.
#[derive(Debug, Clone, Default)]
pub struct NameIndex {
    entries: Vec<Entry>,
    exact: HashMap<String, Vec<LabelIndex>>,
    length_buckets: BTreeMap<usize, Vec<usize>>,
}

impl NameIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, LabelIndex)> {
        self.entries.iter().map(|e| (e.surface.as_str(), e.concept))
    }

    /// Concepts owning exactly this (lowercased) surface form, ascending.
    pub fn exact(&self, surface: &str) -> &[LabelIndex] {
        self.exact
            .get(&surface.to_lowercase())
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    fn push(&mut self, surface: String, concept: LabelIndex) {
        let owners = self.exact.entry(surface.clone()).or_default();
        if owners.contains(&concept) {
            return;
        }
        owners.push(concept);
        owners.sort_unstable();
        let chars: Vec<char> = surface.chars().collect();
        self.length_buckets
            .entry(chars.len())
            .or_default()
            .push(self.entries.len());
        self.entries.push(Entry {
            surface,
            chars,
            concept,
        });
    }
}

pub fn build_name_index(kb: &KnowledgeBase) -> NameIndex {
    let mut index = NameIndex::default();
    for (i, c) in kb.concepts().iter().enumerate() {
        for s in c.surface_forms() {
            let s = s.trim().to_lowercase();
            if !s.is_empty() {
                index.push(s, i as LabelIndex);
            }
        }
    }
    index
}

/// Best score per concept seen so far. Same-score surfaces resolve to the
/// lexicographically smallest one so results do not depend on scan order.
#[derive(Default)]
struct BestPerConcept {
    best: HashMap<LabelIndex, (f64, usize)>,
}

impl BestPerConcept {
    fn offer(&mut self, entries: &[Entry], entry: usize, score: f64) {
        let concept = entries[entry].concept;
        match self.best.get_mut(&concept) {
            None => {
                self.best.insert(concept, (score, entry));
            }
            Some(slot) => {
                if score > slot.0
                    || (score == slot.0 && entries[entry].surface < entries[slot.1].surface)
                {
                    *slot = (score, entry);
                }
            }
        }
    }

    fn nth_best(&self, n: usize) -> Option<f64> {
        if self.best.len() < n {
            return None;
        }
        let mut scores: Vec<f64> = self.best.values().map(|v| v.0).collect();
        scores.sort_unstable_by(|a, b| b.total_cmp(a));
        Some(scores[n - 1])
    }

    fn finish(self, entries: &[Entry], top_n: usize) -> Vec<ScoredCandidate> {
        let mut out: Vec<ScoredCandidate> = self
            .best
            .into_iter()
            .map(|(concept, (score, entry))| ScoredCandidate {
                concept_index: concept,
                score,
                source: CandidateSource::StringMatch,
                matched_surface: entries[entry].surface.clone(),
            })
            .collect();
        sort_candidates(&mut out);
        out.truncate(top_n);
        out
    }
}

/// Descending score, ties by ascending concept index.
pub fn sort_candidates(cands: &mut [ScoredCandidate]) {
    cands.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.concept_index.cmp(&b.concept_index))
    });
}

/// The `top_n` most similar concepts to `mention_text`, with length-bucket pruning.
pub fn match_mention(mention_text: &str, index: &NameIndex, top_n: usize) -> Vec<ScoredCandidate> {
    let top_n = top_n.max(1);
    let query: Vec<char> = mention_text.trim().to_lowercase().chars().collect();
    let q = query.len();

    let mut buckets: Vec<(f64, usize)> = index
        .length_buckets
        .keys()
        .map(|&l| (length_bound(q, l), l))
        .collect();
    buckets.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut best = BestPerConcept::default();
    for (bound, len) in buckets {
        if best.nth_best(top_n).is_some_and(|nth| bound < nth) {
            break;
        }
        for &e in &index.length_buckets[&len] {
            let score = similarity_chars(&query, &index.entries[e].chars);
            best.offer(&index.entries, e, score);
        }
    }
    best.finish(&index.entries, top_n)
}

/// Unpruned scan over the whole index; reference for [`match_mention`].
pub fn match_exhaustive(mention_text: &str, index: &NameIndex, top_n: usize) -> Vec<ScoredCandidate> {
    let query: Vec<char> = mention_text.trim().to_lowercase().chars().collect();
    let mut best = BestPerConcept::default();
    for (e, entry) in index.entries.iter().enumerate() {
        best.offer(&index.entries, e, similarity_chars(&query, &entry.chars));
    }
    best.finish(&index.entries, top_n.max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kos::Concept;

    fn kb() -> KnowledgeBase {
        KnowledgeBase::from_concepts(vec![
            Concept::new("D009358", "Congenital Abnormalities"),
            Concept::new("D014657", "Vasculitis").with_synonyms(["angiitis"]),
            Concept::new("D1", "Cold").with_synonyms(["chill"]),
            Concept::new("D2", "Common cold").with_synonyms(["cold"]),
        ])
        .unwrap()
    }

    #[test]
    fn edit_distance_examples() {
        assert_eq!(edit_distance("kitten", "sitting"), 3);
        assert_eq!(edit_distance("", "abc"), 3);
        assert_eq!(edit_distance("abc", ""), 3);
        assert_eq!(edit_distance("flu", "flu"), 0);
        assert_eq!(edit_distance("ünï", "uni"), 2);
    }

    #[test]
    fn similarity_examples() {
        assert_eq!(similarity("vasculitic", "vasculitis"), 0.9);
        assert_eq!(similarity("x", "x"), 1.0);
        assert_eq!(similarity("", ""), 1.0);
        assert_eq!(similarity("", "abc"), 0.0);
    }

    #[test]
    fn index_contents() {
        let idx = build_name_index(&kb());
        assert_eq!(idx.len(), 7);
        assert_eq!(idx.exact("COLD"), &[2, 3]);
        assert!(build_name_index(&KnowledgeBase::from_concepts(vec![]).unwrap()).is_empty());
    }

    #[test]
    fn vasculitis_queries() {
        let idx = build_name_index(&kb());
        let exact = match_mention("Vasculitis", &idx, 1);
        assert_eq!(exact[0].concept_index, 1);
        assert_eq!(exact[0].score, 1.0);
        let close = match_mention("vasculitic", &idx, 1);
        assert_eq!(close[0].concept_index, 1);
        assert_eq!(close[0].score, 0.9);
        assert_eq!(close[0].matched_surface, "vasculitis");
    }

    #[test]
    fn shared_synonym_tie_is_ordered_by_index() {
        let idx = build_name_index(&kb());
        let res = match_mention("cold", &idx, 3);
        assert_eq!(res[0].concept_index, 2);
        assert_eq!(res[1].concept_index, 3);
        assert_eq!((res[0].score, res[1].score), (1.0, 1.0));
    }

    #[test]
    fn empty_index_yields_nothing() {
        assert!(match_mention("x", &NameIndex::default(), 5).is_empty());
    }
}
