//! Hierarchical label tree built by recursive balanced spherical 2-means.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kos::LabelIndex;
use crate::sparse::{CsrMatrix, SparseVec};

pub type NodeId = u32;

const MAX_KMEANS_ITERS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// Member labels, ascending. Only populated for leaves.
    pub labels: Vec<LabelIndex>,
    pub centroid: SparseVec,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Binary label tree. Node ids are assigned breadth-first; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterTree {
    nodes: Vec<TreeNode>,
    leaves: Vec<NodeId>,
}

impl ClusterTree {
    pub(crate) fn from_nodes(nodes: Vec<TreeNode>) -> Self {
        let leaves = (0..nodes.len() as NodeId)
            .filter(|&n| nodes[n as usize].is_leaf())
            .collect();
        ClusterTree { nodes, leaves }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id as usize]
    }

    pub fn root(&self) -> NodeId {
        0
    }

    /// Leaf node ids in breadth-first order; position = cluster index.
    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn depth(&self) -> usize {
        (0..self.nodes.len() as NodeId)
            .map(|mut n| {
                let mut d = 0;
                while let Some(p) = self.nodes[n as usize].parent {
                    n = p;
                    d += 1;
                }
                d
            })
            .max()
            .unwrap_or(0)
    }

    /// Every label placed in the tree, ascending.
    pub fn labels(&self) -> Vec<LabelIndex> {
        let mut all: Vec<_> = self
            .leaves
            .iter()
            .flat_map(|&l| self.nodes[l as usize].labels.iter().copied())
            .collect();
        all.sort_unstable();
        all
    }

    /// Label to leaf node, for labels in `0..n_labels`.
    pub fn leaf_assignment(&self, n_labels: usize) -> Vec<Option<NodeId>> {
        let mut out = vec![None; n_labels];
        for &leaf in &self.leaves {
            for &l in &self.nodes[leaf as usize].labels {
                out[l as usize] = Some(leaf);
            }
        }
        out
    }

    /// Clustering matrix: one row per label, one column per leaf.
    pub fn cluster_matrix(&self, n_labels: usize) -> CsrMatrix {
        let mut rows = vec![SparseVec::default(); n_labels];
        for (k, &leaf) in self.leaves.iter().enumerate() {
            for &l in &self.nodes[leaf as usize].labels {
                rows[l as usize] = SparseVec {
                    indices: vec![k as u32],
                    values: vec![1.0],
                };
            }
        }
        CsrMatrix::from_rows(&rows, self.leaves.len())
    }

    /// Labels below `node`, ascending.
    pub fn subtree_labels(&self, node: NodeId) -> Vec<LabelIndex> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(n) = stack.pop() {
            let n = &self.nodes[n as usize];
            out.extend_from_slice(&n.labels);
            stack.extend_from_slice(&n.children);
        }
        out.sort_unstable();
        out
    }
}

/// Recursively splits `embeddings` in two until nodes hold at most `max_leaf_size` labels.
pub fn build_cluster_tree(
    embeddings: &[(LabelIndex, SparseVec)],
    max_leaf_size: usize,
    seed: u64,
) -> ClusterTree {
    let max_leaf_size = max_leaf_size.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes: Vec<TreeNode> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();

    let all: Vec<usize> = (0..embeddings.len()).collect();
    nodes.push(new_node(None, &all, embeddings));
    members.push(all);

    let mut queue = VecDeque::from([0usize]);
    while let Some(id) = queue.pop_front() {
        let set = std::mem::take(&mut members[id]);
        if set.len() <= max_leaf_size {
            let mut labels: Vec<LabelIndex> = set.iter().map(|&i| embeddings[i].0).collect();
            labels.sort_unstable();
            nodes[id].labels = labels;
            continue;
        }
        let (left, right) = balanced_two_means(&set, embeddings, &mut rng);
        for part in [left, right] {
            let child = nodes.len();
            nodes.push(new_node(Some(id as NodeId), &part, embeddings));
            members.push(part);
            nodes[id].children.push(child as NodeId);
            queue.push_back(child);
        }
    }
    ClusterTree::from_nodes(nodes)
}

fn new_node(parent: Option<NodeId>, set: &[usize], embeddings: &[(LabelIndex, SparseVec)]) -> TreeNode {
    TreeNode {
        parent,
        children: Vec::new(),
        labels: Vec::new(),
        centroid: centroid(set, embeddings),
    }
}

fn centroid(set: &[usize], embeddings: &[(LabelIndex, SparseVec)]) -> SparseVec {
    SparseVec::sum(set.iter().map(|&i| &embeddings[i].1)).normalized()
}

/// Splits `set` into halves of sizes `ceil(n/2)` and `floor(n/2)` (in either order).
fn balanced_two_means(
    set: &[usize],
    embeddings: &[(LabelIndex, SparseVec)],
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Vec<usize>) {
    let n = set.len();
    debug_assert!(n >= 2);
    let first = rng.gen_range(0..n);
    let seed_vec = &embeddings[set[first]].1;
    // second seed: least similar point to the first, lowest position on ties
    let second = (0..n)
        .filter(|&j| j != first)
        .min_by(|&a, &b| {
            seed_vec
                .dot(&embeddings[set[a]].1)
                .total_cmp(&seed_vec.dot(&embeddings[set[b]].1))
                .then(a.cmp(&b))
        })
        .unwrap();
    let mut centers = [seed_vec.clone(), embeddings[set[second]].1.clone()];

    let capacity = n.div_ceil(2);
    let mut assignment = vec![usize::MAX; n];
    for _ in 0..MAX_KMEANS_ITERS {
        let margins: Vec<f64> = set
            .iter()
            .map(|&i| {
                let z = &embeddings[i].1;
                centers[0].dot(z) - centers[1].dot(z)
            })
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            margins[b]
                .abs()
                .total_cmp(&margins[a].abs())
                .then(embeddings[set[a]].0.cmp(&embeddings[set[b]].0))
        });
        let mut next = vec![0usize; n];
        let mut sizes = [0usize; 2];
        for j in order {
            let preferred = usize::from(margins[j] < 0.0);
            let side = if sizes[preferred] < capacity {
                preferred
            } else {
                1 - preferred
            };
            next[j] = side;
            sizes[side] += 1;
        }
        if next == assignment {
            break;
        }
        assignment = next;
        for (side, center) in centers.iter_mut().enumerate() {
            let part: Vec<usize> = (0..n).filter(|&j| assignment[j] == side).map(|j| set[j]).collect();
            *center = centroid(&part, embeddings);
        }
    }

    let mut halves = (Vec::new(), Vec::new());
    for (j, &i) in set.iter().enumerate() {
        if assignment[j] == 0 {
            halves.0.push(i);
        } else {
            halves.1.push(i);
        }
    }
    halves
}
