//! Collective disambiguation with information-content weighted
//! Personalized PageRank.
//!
//! Nodes are (mention, candidate concept) pairs; two nodes of different
//! mentions are linked when their concepts are identical or directly
//! related by is-a in the KOS. For every source node a random walk with
//! restart to that source is run; a candidate's coherence is the sum of the
//! stationary probabilities it receives from sources of other mentions,
//! scaled by its information content.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kos::{KnowledgeBase, LabelIndex};
use crate::strmatch::{CandidateSource, ScoredCandidate};

pub const DEFAULT_TELEPORT: f64 = 0.15;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITERS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PprConfig {
    pub teleport: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for PprConfig {
    fn default() -> Self {
        PprConfig {
            teleport: DEFAULT_TELEPORT,
            tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

impl PprConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.teleport > 0.0 && self.teleport < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "teleport probability must lie in (0, 1), got {}",
                self.teleport
            )));
        }
        if self.tol.is_nan() || self.tol <= 0.0 || self.max_iters == 0 {
            return Err(Error::InvalidArgument("tol must be positive and max_iters at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphNode {
    pub mention: usize,
    pub candidate: ScoredCandidate,
}

impl GraphNode {
    pub fn concept(&self) -> LabelIndex {
        self.candidate.concept_index
    }
}

#[derive(Debug, Clone, Default)]
pub struct DisambiguationGraph {
    nodes: Vec<GraphNode>,
    adjacency: Vec<Vec<usize>>,
    mention_groups: Vec<Vec<usize>>,
}

/// One node per (mention, distinct candidate concept). Duplicate concepts in
/// a mention's list keep the highest incoming score.
pub fn build_graph(candidate_lists: &[Vec<ScoredCandidate>], kb: &KnowledgeBase) -> DisambiguationGraph {
    let mut g = DisambiguationGraph::default();
    for (m, list) in candidate_lists.iter().enumerate() {
        let mut group: Vec<usize> = Vec::new();
        for cand in list {
            match group
                .iter()
                .find(|&&n| g.nodes[n].concept() == cand.concept_index)
            {
                Some(&n) => {
                    if cand.score > g.nodes[n].candidate.score {
                        g.nodes[n].candidate = cand.clone();
                    }
                }
                None => {
                    group.push(g.nodes.len());
                    g.nodes.push(GraphNode {
                        mention: m,
                        candidate: cand.clone(),
                    });
                }
            }
        }
        g.mention_groups.push(group);
    }

    g.adjacency = vec![Vec::new(); g.nodes.len()];
    for i in 0..g.nodes.len() {
        for j in i + 1..g.nodes.len() {
            let (a, b) = (&g.nodes[i], &g.nodes[j]);
            if a.mention == b.mention {
                continue;
            }
            if a.concept() == b.concept() || kb.are_adjacent(a.concept(), b.concept()) {
                g.adjacency[i].push(j);
                g.adjacency[j].push(i);
            }
        }
    }
    g
}

impl DisambiguationGraph {
    /// Builds a graph from explicit nodes and undirected edges (no KOS needed).
    pub fn from_parts(nodes: Vec<GraphNode>, edges: &[(usize, usize)]) -> Result<Self> {
        let mention_count = nodes.iter().map(|n| n.mention + 1).max().unwrap_or(0);
        let mut mention_groups = vec![Vec::new(); mention_count];
        for (i, n) in nodes.iter().enumerate() {
            mention_groups[n.mention].push(i);
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for &(a, b) in edges {
            if a >= nodes.len() || b >= nodes.len() || a == b {
                return Err(Error::InvalidArgument(format!("bad edge ({a}, {b})")));
            }
            if !adjacency[a].contains(&b) {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        Ok(DisambiguationGraph {
            nodes,
            adjacency,
            mention_groups,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn mention_groups(&self) -> &[Vec<usize>] {
        &self.mention_groups
    }

    /// Line-oriented dump: `NODE idx mention concept ic score`, then `EDGE i j` with `i < j`.
    pub fn write_debug<W: Write>(&self, kb: &KnowledgeBase, mut out: W) -> Result<()> {
        for (i, n) in self.nodes.iter().enumerate() {
            writeln!(
                out,
                "NODE {i} {} {} {:.6} {:.6}",
                n.mention,
                kb.id_of(n.concept()),
                kb.information_content_at(n.concept()),
                n.candidate.score
            )?;
        }
        for (i, adj) in self.adjacency.iter().enumerate() {
            let mut adj = adj.clone();
            adj.sort_unstable();
            for j in adj.into_iter().filter(|&j| j > i) {
                writeln!(out, "EDGE {i} {j}")?;
            }
        }
        Ok(())
    }
}

/// Stationary distribution of the walk that restarts at `source` with
/// probability `teleport` and otherwise moves to a uniform neighbour
/// (isolated nodes jump back to the source).
pub fn personalized_pagerank(graph: &DisambiguationGraph, source: usize, cfg: &PprConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n = graph.len();
    if source >= n {
        return Err(Error::InvalidArgument(format!("source node {source} out of range for {n} nodes")));
    }
    let stay = 1.0 - cfg.teleport;
    let mut rank = vec![0.0; n];
    rank[source] = 1.0;
    let mut next = vec![0.0; n];
    let mut delta = f64::INFINITY;

    for _ in 0..cfg.max_iters {
        next.iter_mut().for_each(|v| *v = 0.0);
        next[source] = cfg.teleport;
        for (i, &mass) in rank.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let adj = &graph.adjacency[i];
            if adj.is_empty() {
                next[source] += stay * mass;
            } else {
                let share = stay * mass / adj.len() as f64;
                for &j in adj {
                    next[j] += share;
                }
            }
        }
        delta = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if delta <= cfg.tol {
            return Ok(rank);
        }
    }
    Err(Error::NotConverged {
        iterations: cfg.max_iters,
        last_delta: delta,
        last_iterate: rank,
    })
}

/// Global coherence per node.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceScores(pub Vec<f64>);

impl CoherenceScores {
    pub fn get(&self, node: usize) -> f64 {
        self.0[node]
    }
}

/// `coherence(t) = IC(t) * sum over sources s of other mentions of PPR(s -> t)`.
pub fn coherence_scores(graph: &DisambiguationGraph, kb: &KnowledgeBase, cfg: &PprConfig) -> Result<CoherenceScores> {
    let n = graph.len();
    let runs: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|s| {
            if graph.adjacency[s].is_empty() {
                // an isolated source keeps all of its mass
                let mut v = vec![0.0; n];
                v[s] = 1.0;
                Ok(v)
            } else {
                personalized_pagerank(graph, s, cfg)
            }
        })
        .collect::<Result<_>>()?;

    let mut out = vec![0.0; n];
    for (t, slot) in out.iter_mut().enumerate() {
        let mention = graph.nodes[t].mention;
        let received: f64 = runs
            .iter()
            .enumerate()
            .filter(|(s, _)| graph.nodes[*s].mention != mention)
            .map(|(_, pi)| pi[t])
            .sum();
        *slot = received * kb.information_content_at(graph.nodes[t].concept());
    }
    Ok(CoherenceScores(out))
}

/// Nodes of one mention in decision order: coherence, then incoming score,
/// then concept index. Without any positive coherence the incoming score decides.
pub fn rank_mention(graph: &DisambiguationGraph, scores: &CoherenceScores, mention: usize) -> Vec<usize> {
    let mut group = graph.mention_groups[mention].clone();
    let any_coherence = group.iter().any(|&n| scores.get(n) > 0.0);
    group.sort_by(|&a, &b| {
        let (na, nb) = (&graph.nodes[a], &graph.nodes[b]);
        let by_coherence = if any_coherence {
            scores.get(b).total_cmp(&scores.get(a))
        } else {
            std::cmp::Ordering::Equal
        };
        by_coherence
            .then(nb.candidate.score.total_cmp(&na.candidate.score))
            .then(na.concept().cmp(&nb.concept()))
    });
    group
}

/// The chosen candidate per mention; `None` for mentions without nodes.
pub fn select(graph: &DisambiguationGraph, scores: &CoherenceScores) -> Vec<Option<ScoredCandidate>> {
    (0..graph.mention_groups.len())
        .map(|m| {
            rank_mention(graph, scores, m)
                .first()
                .map(|&n| graph.nodes[n].candidate.clone())
        })
        .collect()
}

/// Convenience constructor for tests and examples.
pub fn candidate(concept_index: LabelIndex, score: f64, source: CandidateSource) -> ScoredCandidate {
    ScoredCandidate {
        concept_index,
        score,
        source,
        matched_surface: String::new(),
    }
}
