//! Extreme multi-label ranking over KOS labels.
//!
//! Three stages: label indexing (a balanced binary tree over PIFA label
//! embeddings), matching (per-node one-vs-rest logistic models steering a
//! beam search down the tree), and ranking (per-label logistic models inside
//! the reached leaves). A memorization map of training strings provides
//! exact score-1.0 hits for unambiguous strings.

mod cluster;
mod linear;
mod persist;
mod vectorizer;

use std::collections::{BTreeMap, HashMap, HashSet};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cluster::{build_cluster_tree, ClusterTree, NodeId, TreeNode};
pub use linear::{sigmoid, LocalProblem, Solution, SolverConfig};
pub use persist::{MANIFEST_FILE, MODEL_FORMAT_VERSION};
pub use vectorizer::{extract_features, normalize_text, Vectorizer};

use crate::corpus::TrainingSet;
use crate::error::{Error, Result};
use crate::kos::{KnowledgeBase, LabelIndex};
use crate::sparse::{CsrMatrix, SparseVec};
use crate::strmatch::{sort_candidates, CandidateSource, ScoredCandidate};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_MAX_LEAF_SIZE: usize = 100;
pub const DEFAULT_BEAM: usize = 10;
pub const DEFAULT_TOP_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XmrConfig {
    pub seed: u64,
    pub max_leaf_size: usize,
    pub regularization: f64,
    pub grad_tol: f64,
    pub max_solver_iters: usize,
}

impl Default for XmrConfig {
    fn default() -> Self {
        XmrConfig {
            seed: DEFAULT_SEED,
            max_leaf_size: DEFAULT_MAX_LEAF_SIZE,
            regularization: 1.0,
            grad_tol: 1e-4,
            max_solver_iters: 100,
        }
    }
}

impl XmrConfig {
    fn solver(&self) -> SolverConfig {
        SolverConfig {
            regularization: self.regularization,
            grad_tol: self.grad_tol,
            max_iter: self.max_solver_iters,
        }
    }
}

/// Anything that ranks KOS labels for a mention string.
pub trait CandidateRanker: Send + Sync {
    fn rank(&self, mention_text: &str, beam: usize, top_k: usize) -> Vec<ScoredCandidate>;
}

/// Outcome of [`label_embeddings`].
#[derive(Debug, Clone, Default)]
pub struct LabelEmbeddings {
    pub vectors: Vec<(LabelIndex, SparseVec)>,
    /// Labels that had no instance, or whose instances vectorized to zero.
    pub excluded: Vec<LabelIndex>,
}

/// PIFA label representations: the normalized sum of each label's instance vectors.
pub fn label_embeddings(train: &TrainingSet, vec: &Vectorizer, n_labels: usize) -> LabelEmbeddings {
    let mut sums: BTreeMap<LabelIndex, Vec<(u32, f64)>> = BTreeMap::new();
    for inst in &train.instances {
        sums.entry(inst.label)
            .or_default()
            .extend(vec.transform(&inst.text).iter());
    }
    let mut out = LabelEmbeddings::default();
    for label in 0..n_labels as LabelIndex {
        match sums.remove(&label) {
            Some(pairs) => {
                let z = SparseVec::from_pairs(pairs).normalized();
                if z.is_empty() {
                    out.excluded.push(label);
                } else {
                    out.vectors.push((label, z));
                }
            }
            None => out.excluded.push(label),
        }
    }
    out
}

/// One binary model that hit the iteration cap.
#[derive(Debug, Clone, PartialEq)]
pub struct NonConvergence {
    pub node: NodeId,
    /// Child node (matcher) or label (ranker) the model scores.
    pub target: u32,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TrainReport {
    pub labels_trained: usize,
    pub labels_excluded: Vec<LabelIndex>,
    pub binary_models: usize,
    pub non_converged: Vec<NonConvergence>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct XmrModel {
    pub(crate) config: XmrConfig,
    pub(crate) label_ids: Vec<String>,
    pub(crate) vectorizer: Vectorizer,
    pub(crate) tree: ClusterTree,
    /// Row `n`: weights scoring the edge from `n`'s parent into `n`.
    pub(crate) matcher: CsrMatrix,
    /// Row `l`: weights scoring label `l` inside its leaf.
    pub(crate) ranker: CsrMatrix,
    pub(crate) exact_map: BTreeMap<String, Vec<LabelIndex>>,
    pub(crate) label_priors: Vec<u32>,
}

struct TaskResult {
    node: NodeId,
    target: u32,
    weights: SparseVec,
    solution_grad: f64,
    converged: bool,
}

/// Trains node matchers and leaf rankers over an existing tree.
pub fn train(
    train: &TrainingSet,
    vectorizer: &Vectorizer,
    tree: &ClusterTree,
    label_ids: &[String],
    config: &XmrConfig,
) -> Result<(XmrModel, TrainReport)> {
    let n_labels = label_ids.len();
    if let Some(bad) = train.instances.iter().find(|i| i.label as usize >= n_labels) {
        return Err(Error::InvalidArgument(format!(
            "instance label {} outside label space of {n_labels}",
            bad.label
        )));
    }
    let assignment = tree.leaf_assignment(n_labels);
    let tree_labels: HashSet<LabelIndex> = tree.labels().into_iter().collect();
    let bias_index = vectorizer.len() as u32;
    let solver = config.solver();

    // instance vectors, restricted to labels present in the tree
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for inst in &train.instances {
        if !tree_labels.contains(&inst.label) {
            continue;
        }
        let x = vectorizer.transform(&inst.text);
        if x.is_empty() {
            continue;
        }
        xs.push(x);
        ys.push(inst.label);
    }

    // the leaf of every instance, then the path of ancestors per node
    let n_nodes = tree.nodes().len();
    let mut node_instances: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
    for (i, &label) in ys.iter().enumerate() {
        let mut node = assignment[label as usize];
        while let Some(n) = node {
            node_instances[n as usize].push(i);
            node = tree.node(n).parent;
        }
    }

    let results: Vec<Vec<TaskResult>> = (0..n_nodes as NodeId)
        .into_par_iter()
        .map(|node| {
            let members = &node_instances[node as usize];
            let tree_node = tree.node(node);
            let targets: Vec<(u32, Vec<bool>)> = if tree_node.is_leaf() {
                tree_node
                    .labels
                    .iter()
                    .map(|&l| (l, members.iter().map(|&i| ys[i] == l).collect()))
                    .collect()
            } else {
                tree_node
                    .children
                    .iter()
                    .map(|&c| {
                        let inside: HashSet<LabelIndex> = tree.subtree_labels(c).into_iter().collect();
                        (c, members.iter().map(|&i| inside.contains(&ys[i])).collect())
                    })
                    .collect()
            };
            if members.is_empty() {
                return targets
                    .into_iter()
                    .map(|(target, _)| TaskResult {
                        node,
                        target,
                        weights: SparseVec::default(),
                        solution_grad: 0.0,
                        converged: true,
                    })
                    .collect();
            }
            let refs: Vec<&SparseVec> = members.iter().map(|&i| &xs[i]).collect();
            let problem = LocalProblem::new(&refs);
            targets
                .into_par_iter()
                .map(|(target, positive)| {
                    let sol = problem.solve(&positive, &solver);
                    TaskResult {
                        node,
                        target,
                        weights: problem.to_global(&sol.weights, bias_index),
                        solution_grad: sol.grad_norm,
                        converged: sol.converged,
                    }
                })
                .collect()
        })
        .collect();

    let mut matcher_rows = vec![SparseVec::default(); n_nodes];
    let mut ranker_rows = vec![SparseVec::default(); n_labels];
    let mut report = TrainReport {
        labels_trained: tree_labels.len(),
        ..Default::default()
    };
    for r in results.into_iter().flatten() {
        report.binary_models += 1;
        if !r.converged {
            warn!(
                "solver did not converge at node {} (target {}), gradient norm {:e}",
                r.node, r.target, r.solution_grad
            );
            report.non_converged.push(NonConvergence {
                node: r.node,
                target: r.target,
                grad_norm: r.solution_grad,
            });
        }
        if tree.node(r.node).is_leaf() {
            ranker_rows[r.target as usize] = r.weights;
        } else {
            matcher_rows[r.target as usize] = r.weights;
        }
    }

    let mut exact_map: BTreeMap<String, Vec<LabelIndex>> = BTreeMap::new();
    let mut label_priors = vec![0u32; n_labels];
    for inst in &train.instances {
        let key = normalize_text(&inst.text);
        let labels = exact_map.entry(key).or_default();
        if !labels.contains(&inst.label) {
            labels.push(inst.label);
        }
        label_priors[inst.label as usize] += 1;
    }
    for labels in exact_map.values_mut() {
        labels.sort_unstable();
    }

    let cols = vectorizer.len() + 1;
    let model = XmrModel {
        config: *config,
        label_ids: label_ids.to_vec(),
        vectorizer: vectorizer.clone(),
        tree: tree.clone(),
        matcher: CsrMatrix::from_rows(&matcher_rows, cols),
        ranker: CsrMatrix::from_rows(&ranker_rows, cols),
        exact_map,
        label_priors,
    };
    Ok((model, report))
}

impl XmrModel {
    /// Full training run: vectorizer, label embeddings, tree and linear models.
    pub fn fit(train_set: &TrainingSet, kb: &KnowledgeBase, config: &XmrConfig) -> Result<(Self, TrainReport)> {
        let texts: Vec<&str> = train_set.instances.iter().map(|i| i.text.as_str()).collect();
        let vectorizer = Vectorizer::fit(&texts)?;
        let embeddings = label_embeddings(train_set, &vectorizer, kb.len());
        if embeddings.vectors.is_empty() {
            return Err(Error::InvalidArgument("no label has a usable training instance".into()));
        }
        let tree = build_cluster_tree(&embeddings.vectors, config.max_leaf_size, config.seed);
        info!(
            "label tree: {} labels, {} leaves, depth {}; {} labels without instances",
            embeddings.vectors.len(),
            tree.leaf_count(),
            tree.depth(),
            embeddings.excluded.len()
        );
        let label_ids: Vec<String> = kb.concepts().iter().map(|c| c.id.clone()).collect();
        let (model, mut report) = train(train_set, &vectorizer, &tree, &label_ids, config)?;
        report.labels_excluded = embeddings.excluded;
        Ok((model, report))
    }

    pub fn config(&self) -> &XmrConfig {
        &self.config
    }

    pub fn vectorizer(&self) -> &Vectorizer {
        &self.vectorizer
    }

    pub fn tree(&self) -> &ClusterTree {
        &self.tree
    }

    pub fn matcher_weights(&self) -> &CsrMatrix {
        &self.matcher
    }

    pub fn ranker_weights(&self) -> &CsrMatrix {
        &self.ranker
    }

    pub fn label_ids(&self) -> &[String] {
        &self.label_ids
    }

    pub fn label_priors(&self) -> &[u32] {
        &self.label_priors
    }

    pub fn n_labels(&self) -> usize {
        self.label_ids.len()
    }

    /// Training labels for this exact (normalized) string.
    pub fn exact_labels(&self, text: &str) -> &[LabelIndex] {
        self.exact_map
            .get(&normalize_text(text))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn exact_map(&self) -> &BTreeMap<String, Vec<LabelIndex>> {
        &self.exact_map
    }

    /// Query vector with the constant bias feature appended.
    pub fn featurize(&self, text: &str) -> SparseVec {
        let mut x = self.vectorizer.transform(text);
        if !x.is_empty() {
            x.indices.push(self.vectorizer.len() as u32);
            x.values.push(1.0);
        }
        x
    }

    /// Beam search over the tree, then in-leaf ranking.
    pub fn predict(&self, mention_text: &str, beam: usize, top_k: usize) -> Vec<ScoredCandidate> {
        let beam = beam.max(1);
        let top_k = top_k.max(1);
        let exact = match self.exact_labels(mention_text) {
            [single] => Some(*single),
            _ => None,
        };

        let x = self.featurize(mention_text);
        let mut scored: Vec<ScoredCandidate> = if x.is_empty() {
            Vec::new()
        } else {
            self.beam_search(&x, beam)
        };
        sort_candidates(&mut scored);

        let mut out = Vec::with_capacity(top_k);
        if let Some(label) = exact {
            out.push(ScoredCandidate {
                concept_index: label,
                score: 1.0,
                source: CandidateSource::ExactLookup,
                matched_surface: normalize_text(mention_text),
            });
            scored.retain(|c| c.concept_index != label);
        }
        out.extend(scored);
        out.truncate(top_k);
        out
    }

    fn beam_search(&self, x: &SparseVec, beam: usize) -> Vec<ScoredCandidate> {
        let mut frontier: Vec<(NodeId, f64)> = vec![(self.tree.root(), 1.0)];
        while frontier.iter().any(|&(n, _)| !self.tree.node(n).is_leaf()) {
            let mut next = Vec::new();
            for &(node, score) in &frontier {
                let children = &self.tree.node(node).children;
                if children.is_empty() {
                    next.push((node, score));
                }
                for &c in children {
                    next.push((c, score * sigmoid(self.matcher.row_dot(c as usize, x))));
                }
            }
            next.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            next.truncate(beam);
            frontier = next;
        }

        let mut out = Vec::new();
        for (leaf, path_score) in frontier {
            for &label in &self.tree.node(leaf).labels {
                let s = path_score * sigmoid(self.ranker.row_dot(label as usize, x));
                out.push(ScoredCandidate {
                    concept_index: label,
                    score: s.clamp(f64::MIN_POSITIVE, 1.0),
                    source: CandidateSource::Xmr,
                    matched_surface: String::new(),
                });
            }
        }
        out
    }

    /// Number of leaves, i.e. the beam width that makes prediction exhaustive.
    pub fn leaf_count(&self) -> usize {
        self.tree.leaf_count()
    }
}

impl CandidateRanker for XmrModel {
    fn rank(&self, mention_text: &str, beam: usize, top_k: usize) -> Vec<ScoredCandidate> {
        self.predict(mention_text, beam, top_k)
    }
}

/// A fixed table of candidates per (lowercased) mention; handy for replaying
/// scores produced elsewhere.
#[derive(Debug, Clone, Default)]
pub struct StaticRanker {
    table: HashMap<String, Vec<ScoredCandidate>>,
}

impl StaticRanker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, mention: &str, concept_index: LabelIndex, score: f64) -> Self {
        let entry = self.table.entry(mention.to_lowercase()).or_default();
        entry.push(ScoredCandidate {
            concept_index,
            score,
            source: if score == 1.0 {
                CandidateSource::ExactLookup
            } else {
                CandidateSource::Xmr
            },
            matched_surface: String::new(),
        });
        sort_candidates(entry);
        self
    }
}

impl CandidateRanker for StaticRanker {
    fn rank(&self, mention_text: &str, _beam: usize, top_k: usize) -> Vec<ScoredCandidate> {
        let mut out = self
            .table
            .get(&mention_text.to_lowercase())
            .cloned()
            .unwrap_or_default();
        out.truncate(top_k.max(1));
        out
    }
}
