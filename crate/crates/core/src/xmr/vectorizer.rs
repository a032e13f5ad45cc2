//! TF-IDF over word 1-2-grams and character 3-5-grams.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::sparse::SparseVec;

const WORD_NGRAMS: std::ops::RangeInclusive<usize> = 1..=2;
const CHAR_NGRAMS: std::ops::RangeInclusive<usize> = 3..=5;

#[derive(Debug, Clone, PartialEq)]
pub struct Vectorizer {
    features: Vec<String>,
    vocabulary: HashMap<String, u32>,
    idf: Vec<f64>,
}

/// Lowercases and collapses every whitespace run into one space.
pub fn normalize_text(text: &str) -> String {
    text.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Raw feature strings of a text, with multiplicity.
pub fn extract_features(text: &str) -> Vec<String> {
    let norm = normalize_text(text);
    let mut out = Vec::new();
    if norm.is_empty() {
        return out;
    }

    let words: Vec<&str> = norm
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .collect();
    for n in WORD_NGRAMS {
        for win in words.windows(n) {
            out.push(format!("w:{}", win.join(" ")));
        }
    }

    let padded: Vec<char> = format!(" {norm} ").chars().collect();
    for n in CHAR_NGRAMS {
        for win in padded.windows(n) {
            out.push(format!("c:{}", win.iter().collect::<String>()));
        }
    }
    out
}

impl Vectorizer {
    /// Fits vocabulary and `idf = ln((N + 1) / (df + 1)) + 1` on a corpus.
    pub fn fit<S: AsRef<str>>(texts: &[S]) -> Result<Self> {
        if texts.is_empty() {
            return Err(Error::InvalidArgument("cannot fit a vectorizer on an empty corpus".into()));
        }
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for t in texts {
            let unique: HashSet<String> = extract_features(t.as_ref()).into_iter().collect();
            for f in unique {
                *df.entry(f).or_insert(0) += 1;
            }
        }
        let n = texts.len() as f64;
        let mut features = Vec::with_capacity(df.len());
        let mut idf = Vec::with_capacity(df.len());
        for (f, d) in df {
            idf.push(((n + 1.0) / (d as f64 + 1.0)).ln() + 1.0);
            features.push(f);
        }
        Ok(Self::from_parts(features, idf))
    }

    pub(crate) fn from_parts(features: Vec<String>, idf: Vec<f64>) -> Self {
        let vocabulary = features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i as u32))
            .collect();
        Vectorizer {
            features,
            vocabulary,
            idf,
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn feature_index(&self, feature: &str) -> Option<u32> {
        self.vocabulary.get(feature).copied()
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    /// Unit-norm TF-IDF vector of `text`; zero vector when nothing is in vocabulary.
    pub fn transform(&self, text: &str) -> SparseVec {
        let pairs = extract_features(text)
            .iter()
            .filter_map(|f| self.vocabulary.get(f))
            .map(|&i| (i, self.idf[i as usize]))
            .collect();
        SparseVec::from_pairs(pairs).normalized()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn document_frequency_of_shared_unigram() {
        let v = Vectorizer::fit(&["flu", "flu shot"]).unwrap();
        let flu = v.feature_index("w:flu").unwrap() as usize;
        let shot = v.feature_index("w:shot").unwrap() as usize;
        // df = 2 gives ln(3/3) + 1, df = 1 gives ln(3/2) + 1
        assert_eq!(v.idf()[flu], 1.0);
        assert!((v.idf()[shot] - (1.5f64.ln() + 1.0)).abs() < 1e-15);
        assert!(v.feature_index("w:flu shot").is_some());
        assert!(v.feature_index("c: fl").is_some());
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(Vectorizer::fit::<&str>(&[]).is_err());
    }

    #[test]
    fn transform_norms() {
        let v = Vectorizer::fit(&["flu", "flu shot", "acute kidney injury"]).unwrap();
        assert!(v.transform("").is_empty());
        assert!(v.transform("qqqqqq").is_empty());
        for s in ["flu", "kidney flu", "ACUTE   injury"] {
            assert!((v.transform(s).norm() - 1.0).abs() < 1e-12);
        }
        assert_eq!(v.transform("Flu  Shot"), v.transform("flu shot"));
    }
}
