//! On-disk model directory.
//!
//! ```text
//! manifest.json        format version, seed, hyper-parameters, label ids
//! vocab.tsv            one feature string per line, in index order
//! idf.csr              1 x V matrix of idf weights
//! tree.tsv             node<TAB>parent<TAB>children<TAB>labels
//! centroids.csr        one row per tree node
//! cluster_matrix.csr   labels x leaves assignment matrix
//! matcher.csr          one row per tree node, V + 1 columns (last = bias)
//! ranker.csr           one row per label, V + 1 columns (last = bias)
//! exact_map.tsv        text<TAB>label[,label...], sorted by text
//! label_priors.tsv     label<TAB>instance count
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cluster::{ClusterTree, NodeId, TreeNode};
use super::{Vectorizer, XmrConfig, XmrModel};
use crate::error::{Error, Result};
use crate::kos::LabelIndex;
use crate::sparse::{CsrMatrix, SparseVec};

pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    seed: u64,
    max_leaf_size: usize,
    branching: usize,
    regularization: f64,
    grad_tol: f64,
    max_solver_iters: usize,
    word_ngrams: [usize; 2],
    char_ngrams: [usize; 2],
    n_features: usize,
    n_nodes: usize,
    n_leaves: usize,
    label_ids: Vec<String>,
}

fn write_csr(dir: &Path, name: &str, m: &CsrMatrix) -> Result<()> {
    let mut out = BufWriter::new(File::create(dir.join(name))?);
    m.write_to(&mut out)?;
    out.flush()?;
    Ok(())
}

fn read_csr(dir: &Path, name: &str) -> Result<CsrMatrix> {
    let f = File::open(dir.join(name))?;
    CsrMatrix::read_from(BufReader::new(f), name)
}

fn join_ids<T: ToString>(ids: &[T]) -> String {
    ids.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn parse_ids<T: std::str::FromStr>(field: &str, file: &str) -> Result<Vec<T>> {
    if field.is_empty() {
        return Ok(Vec::new());
    }
    field
        .split(',')
        .map(|s| s.parse().map_err(|_| Error::format(file, format!("bad id `{s}`"))))
        .collect()
}

impl XmrModel {
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let manifest = Manifest {
            format_version: MODEL_FORMAT_VERSION,
            seed: self.config.seed,
            max_leaf_size: self.config.max_leaf_size,
            branching: 2,
            regularization: self.config.regularization,
            grad_tol: self.config.grad_tol,
            max_solver_iters: self.config.max_solver_iters,
            word_ngrams: [1, 2],
            char_ngrams: [3, 5],
            n_features: self.vectorizer.len(),
            n_nodes: self.tree.nodes().len(),
            n_leaves: self.tree.leaf_count(),
            label_ids: self.label_ids.clone(),
        };
        let mut out = BufWriter::new(File::create(dir.join(MANIFEST_FILE))?);
        serde_json::to_writer_pretty(&mut out, &manifest)?;
        writeln!(out)?;
        out.flush()?;

        let mut vocab = BufWriter::new(File::create(dir.join("vocab.tsv"))?);
        for f in self.vectorizer.features() {
            writeln!(vocab, "{f}")?;
        }
        vocab.flush()?;
        let idf = SparseVec {
            indices: (0..self.vectorizer.len() as u32).collect(),
            values: self.vectorizer.idf().to_vec(),
        };
        write_csr(dir, "idf.csr", &CsrMatrix::from_rows(&[idf], self.vectorizer.len()))?;

        let mut tree = BufWriter::new(File::create(dir.join("tree.tsv"))?);
        for (id, node) in self.tree.nodes().iter().enumerate() {
            let parent = node.parent.map_or("-".to_string(), |p| p.to_string());
            writeln!(
                tree,
                "{id}\t{parent}\t{}\t{}",
                join_ids(&node.children),
                join_ids(&node.labels)
            )?;
        }
        tree.flush()?;
        let centroids: Vec<SparseVec> = self.tree.nodes().iter().map(|n| n.centroid.clone()).collect();
        write_csr(dir, "centroids.csr", &CsrMatrix::from_rows(&centroids, self.vectorizer.len()))?;
        write_csr(dir, "cluster_matrix.csr", &self.tree.cluster_matrix(self.label_ids.len()))?;
        write_csr(dir, "matcher.csr", &self.matcher)?;
        write_csr(dir, "ranker.csr", &self.ranker)?;

        let mut exact = BufWriter::new(File::create(dir.join("exact_map.tsv"))?);
        for (text, labels) in &self.exact_map {
            writeln!(exact, "{text}\t{}", join_ids(labels))?;
        }
        exact.flush()?;

        let mut priors = BufWriter::new(File::create(dir.join("label_priors.tsv"))?);
        for (label, count) in self.label_priors.iter().enumerate() {
            if *count > 0 {
                writeln!(priors, "{label}\t{count}")?;
            }
        }
        priors.flush()?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: Manifest = serde_json::from_reader(BufReader::new(File::open(dir.join(MANIFEST_FILE))?))?;
        if manifest.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::format(
                MANIFEST_FILE,
                format!("unsupported format version {}", manifest.format_version),
            ));
        }
        let n_labels = manifest.label_ids.len();
        let n_features = manifest.n_features;

        let features: Vec<String> = BufReader::new(File::open(dir.join("vocab.tsv"))?)
            .lines()
            .collect::<std::io::Result<_>>()?;
        let idf = read_csr(dir, "idf.csr")?;
        if features.len() != n_features || idf.rows != 1 || idf.nnz() != n_features {
            return Err(Error::format("vocab.tsv", "vocabulary and idf sizes disagree with manifest"));
        }
        let vectorizer = Vectorizer::from_parts(features, idf.values);

        let centroids = read_csr(dir, "centroids.csr")?;
        let mut nodes = Vec::new();
        for (n, line) in BufReader::new(File::open(dir.join("tree.tsv"))?).lines().enumerate() {
            let line = line?;
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 || cols[0].parse::<usize>().ok() != Some(n) {
                return Err(Error::format("tree.tsv", format!("bad node line {}", n + 1)));
            }
            let parent = match cols[1] {
                "-" => None,
                p => Some(p.parse::<NodeId>().map_err(|_| Error::format("tree.tsv", "bad parent"))?),
            };
            if n >= centroids.rows {
                return Err(Error::format("centroids.csr", "fewer rows than tree nodes"));
            }
            nodes.push(TreeNode {
                parent,
                children: parse_ids(cols[2], "tree.tsv")?,
                labels: parse_ids(cols[3], "tree.tsv")?,
                centroid: centroids.row_vec(n),
            });
        }
        if nodes.len() != manifest.n_nodes {
            return Err(Error::format("tree.tsv", "node count disagrees with manifest"));
        }
        let tree = ClusterTree::from_nodes(nodes);
        if tree.cluster_matrix(n_labels) != read_csr(dir, "cluster_matrix.csr")? {
            return Err(Error::format("cluster_matrix.csr", "does not match tree.tsv"));
        }

        let matcher = read_csr(dir, "matcher.csr")?;
        let ranker = read_csr(dir, "ranker.csr")?;
        if matcher.rows != tree.nodes().len() || ranker.rows != n_labels {
            return Err(Error::format("matcher.csr", "weight matrix shapes disagree with manifest"));
        }

        let mut exact_map = BTreeMap::new();
        for line in BufReader::new(File::open(dir.join("exact_map.tsv"))?).lines() {
            let line = line?;
            let (text, labels) = line
                .rsplit_once('\t')
                .ok_or_else(|| Error::format("exact_map.tsv", "expected text<TAB>labels"))?;
            let labels: Vec<LabelIndex> = parse_ids(labels, "exact_map.tsv")?;
            exact_map.insert(text.to_string(), labels);
        }

        let mut label_priors = vec![0u32; n_labels];
        for line in BufReader::new(File::open(dir.join("label_priors.tsv"))?).lines() {
            let line = line?;
            let parsed = line
                .split_once('\t')
                .and_then(|(l, c)| Some((l.parse::<usize>().ok()?, c.parse::<u32>().ok()?)));
            match parsed {
                Some((l, c)) if l < n_labels => label_priors[l] = c,
                _ => return Err(Error::format("label_priors.tsv", format!("bad line `{line}`"))),
            }
        }

        Ok(XmrModel {
            config: XmrConfig {
                seed: manifest.seed,
                max_leaf_size: manifest.max_leaf_size,
                regularization: manifest.regularization,
                grad_tol: manifest.grad_tol,
                max_solver_iters: manifest.max_solver_iters,
            },
            label_ids: manifest.label_ids,
            vectorizer,
            tree,
            matcher,
            ranker,
            exact_map,
            label_priors,
        })
    }
}
