//! Top-k accuracy against gold annotations.
//!
//! A mention counts as correct when any of its gold ids (composite mentions
//! carry several) appears among the first k predicted ids.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;

use crate::corpus::EvalDataset;
use crate::error::{Error, Result};
use crate::pipeline::{Branch, MentionKey};

pub const DEFAULT_KS: [usize; 2] = [1, 5];

pub fn top_k_accuracy<P, G>(predictions: &[P], gold: &[G], k: usize) -> Result<f64>
where
    P: AsRef<[String]>,
    G: AsRef<[String]>,
{
    if predictions.len() != gold.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions for {} gold mentions",
            predictions.len(),
            gold.len()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if gold.is_empty() {
        return Ok(0.0);
    }
    let hits = predictions
        .iter()
        .zip(gold)
        .filter(|(p, g)| {
            let g = g.as_ref();
            p.as_ref().iter().take(k).any(|id| g.contains(id))
        })
        .count();
    Ok(hits as f64 / gold.len() as f64)
}

/// Accuracy of one slice of mentions.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRow {
    pub n: usize,
    /// `(k, accuracy)` in ascending k.
    pub accuracy: Vec<(usize, f64)>,
}

impl AccuracyRow {
    pub fn at(&self, k: usize) -> Option<f64> {
        self.accuracy.iter().find(|(kk, _)| *kk == k).map(|(_, a)| *a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub dataset: String,
    pub overall: AccuracyRow,
    pub removed_nil: usize,
    pub removed_obsolete: usize,
    /// Gold mentions with no matching prediction line; scored as wrong.
    pub unmatched: usize,
    pub by_branch: BTreeMap<Branch, AccuracyRow>,
}

impl EvalReport {
    pub fn n(&self) -> usize {
        self.overall.n
    }

    pub fn top_k(&self, k: usize) -> Option<f64> {
        self.overall.at(k)
    }
}

fn row(preds: &[Vec<String>], gold: &[Vec<String>], ks: &[usize]) -> Result<AccuracyRow> {
    let accuracy = ks
        .iter()
        .map(|&k| Ok((k, top_k_accuracy(preds, gold, k)?)))
        .collect::<Result<_>>()?;
    Ok(AccuracyRow { n: gold.len(), accuracy })
}

/// Scores predictions keyed by `(doc, start, end)` against a filtered gold set.
pub fn evaluate(
    dataset: &EvalDataset,
    predictions: &HashMap<MentionKey, Vec<String>>,
    branches: Option<&HashMap<MentionKey, Branch>>,
    ks: &[usize],
) -> Result<EvalReport> {
    let mut ks: Vec<usize> = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() {
        return Err(Error::InvalidArgument("at least one k is required".into()));
    }

    let mut preds = Vec::new();
    let mut gold = Vec::new();
    let mut mention_branch = Vec::new();
    let mut unmatched = 0;
    let mut seen = HashSet::new();
    for doc in &dataset.documents {
        for m in &doc.mentions {
            let (s, e) = m.span.unwrap_or((0, 0));
            let key = (m.doc_id.clone(), s, e);
            if !seen.insert(key.clone()) {
                // duplicate annotation of the same span, scored once
                continue;
            }
            match predictions.get(&key) {
                Some(p) => preds.push(p.clone()),
                None => {
                    unmatched += 1;
                    preds.push(Vec::new());
                }
            }
            mention_branch.push(branches.and_then(|b| b.get(&key).copied()));
            gold.push(m.gold_ids.clone());
        }
    }

    let overall = row(&preds, &gold, &ks)?;
    let mut by_branch = BTreeMap::new();
    if branches.is_some() {
        type Slice = (Vec<Vec<String>>, Vec<Vec<String>>);
        let mut groups: BTreeMap<Branch, Slice> = BTreeMap::new();
        for ((p, g), b) in preds.into_iter().zip(gold).zip(mention_branch) {
            if let Some(b) = b {
                let entry = groups.entry(b).or_default();
                entry.0.push(p);
                entry.1.push(g);
            }
        }
        for (b, (p, g)) in groups {
            by_branch.insert(b, row(&p, &g, &ks)?);
        }
    }

    Ok(EvalReport {
        dataset: dataset.name.clone(),
        overall,
        removed_nil: dataset.removed_nil,
        removed_obsolete: dataset.removed_obsolete,
        unmatched,
        by_branch,
    })
}

/// Rows are the overall score and each branch at each k, columns are datasets.
pub fn write_table<W: Write>(reports: &[EvalReport], mut out: W) -> Result<()> {
    write!(out, "method")?;
    for r in reports {
        write!(out, "\t{}", r.dataset)?;
    }
    writeln!(out)?;

    let mut ks: Vec<usize> = reports
        .iter()
        .flat_map(|r| r.overall.accuracy.iter().map(|(k, _)| *k))
        .collect();
    ks.sort_unstable();
    ks.dedup();
    let mut branches: Vec<Branch> = reports.iter().flat_map(|r| r.by_branch.keys().copied()).collect();
    branches.sort_unstable();
    branches.dedup();

    let cell = |row: Option<&AccuracyRow>, k: usize| match row.and_then(|r| r.at(k)) {
        Some(a) => format!("{a:.4}"),
        None => "-".to_string(),
    };
    for &k in &ks {
        write!(out, "top-{k}")?;
        for r in reports {
            write!(out, "\t{}", cell(Some(&r.overall), k))?;
        }
        writeln!(out)?;
    }
    for b in &branches {
        for &k in &ks {
            write!(out, "{b} top-{k}")?;
            for r in reports {
                write!(out, "\t{}", cell(r.by_branch.get(b), k))?;
            }
            writeln!(out)?;
        }
    }
    type Count = fn(&EvalReport) -> usize;
    let counts: [(&str, Count); 4] = [
        ("mentions", |r| r.overall.n),
        ("removed nil", |r| r.removed_nil),
        ("removed obsolete", |r| r.removed_obsolete),
        ("unmatched", |r| r.unmatched),
    ];
    for (name, f) in counts {
        write!(out, "{name}")?;
        for r in reports {
            write!(out, "\t{}", f(r))?;
        }
        writeln!(out)?;
    }
    for b in &branches {
        write!(out, "{b} mentions")?;
        for r in reports {
            write!(out, "\t{}", r.by_branch.get(b).map_or(0, |row| row.n))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Parses a comma-separated list of k values such as `1,5`.
pub fn parse_ks(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| match t.trim().parse::<usize>() {
            Ok(k) if k >= 1 => Ok(k),
            _ => Err(Error::InvalidArgument(format!("bad k value `{t}`"))),
        })
        .collect()
}
