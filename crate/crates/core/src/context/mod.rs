//! Context discovery: the nodes most similar to a query.
//!
//! Two selectors are provided. [`random_walk_context`] ranks nodes by the
//! summed Personalized PageRank of every query node. [`context_rw`] mines
//! frequent edge-label sequences leading into the query and scores nodes by
//! how often those sequences, read outward from the query, end at them.

pub mod metapath;
pub mod pagerank;
pub mod score;
pub mod weights;

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use metapath::{mine_metapaths, Metapath, MetapathSet, NamedMetapathSet};
pub use pagerank::personalized_pagerank;
pub use score::metapath_score;
pub use weights::{weighted_adjacency_weight, EdgeWeights};

use crate::graph::{KnowledgeGraph, NodeId, Query};

/// How the metapath walker picks its next edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepChoice {
    /// Proportional to the label-frequency weight.
    #[default]
    Weighted,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkConfig {
    /// Follow probability `c` in `p = c·Ã·p + (1 - c)·v`.
    pub damping: f64,
    pub iterations: usize,
    pub num_walk_samples: u64,
    pub max_metapath_len: usize,
    pub num_metapaths: usize,
    pub step_choice: StepChoice,
    pub rng_seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            damping: 0.8,
            iterations: 10,
            num_walk_samples: 1_000_000,
            max_metapath_len: 5,
            num_metapaths: 5,
            step_choice: StepChoice::Weighted,
            rng_seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<(), ContextError> {
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(ContextError::InvalidConfig(format!(
                "damping must lie in (0, 1), got {}",
                self.damping
            )));
        }
        if self.iterations == 0 || self.num_walk_samples == 0 || self.max_metapath_len == 0 || self.num_metapaths == 0 {
            return Err(ContextError::InvalidConfig(
                "iterations, walk samples, metapath length and metapath count must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ContextError {
    #[error("no metapath reaches the query; fall back to the PageRank context")]
    NoMetapaths,
    #[error("invalid walk configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextEntry {
    pub node: NodeId,
    pub score: f64,
}

/// Ranked context: highest score first, ties by ascending node id, never
/// containing a query node.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContextResult {
    pub entries: Vec<ContextEntry>,
}

impl ContextResult {
    /// Picks the `k` best-scoring nodes outside the query. Nodes with a zero
    /// score are not candidates.
    pub fn top_k(scores: &[f64], query: &Query, k: usize) -> Self {
        let in_query = query.mask(scores.len());
        let mut entries: Vec<ContextEntry> = scores
            .iter()
            .enumerate()
            .filter(|&(i, &s)| !in_query[i] && s > 0.0)
            .map(|(i, &s)| ContextEntry {
                node: NodeId(i as u32),
                score: s,
            })
            .collect();
        let order = |a: &ContextEntry, b: &ContextEntry| -> Ordering {
            b.score.total_cmp(&a.score).then(a.node.cmp(&b.node))
        };
        if k == 0 {
            entries.clear();
        } else if entries.len() > k {
            entries.select_nth_unstable_by(k - 1, order);
            entries.truncate(k);
        }
        entries.sort_unstable_by(order);
        Self { entries }
    }

    pub fn nodes(&self) -> Vec<NodeId> {
        self.entries.iter().map(|e| e.node).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Keeps only the first `k` entries.
    pub fn truncated(&self, k: usize) -> Self {
        Self {
            entries: self.entries.iter().take(k).copied().collect(),
        }
    }
}

/// Sum of Personalized PageRank vectors seeded at each query node.
pub fn pagerank_scores(graph: &KnowledgeGraph, query: &Query, cfg: &WalkConfig) -> Vec<f64> {
    let weights = EdgeWeights::new(graph);
    let vectors: Vec<Vec<f64>> = query
        .nodes()
        .par_iter()
        .map(|&seed| pagerank::personalized_pagerank_observed(graph, &weights, seed, cfg, |_, _| {}))
        .collect();
    let mut total = vec![0.0; graph.node_count()];
    for v in vectors {
        for (t, x) in total.iter_mut().zip(v) {
            *t += x;
        }
    }
    for &n in query.nodes() {
        total[n.index()] = 0.0;
    }
    total
}

/// PageRank baseline context.
pub fn random_walk_context(graph: &KnowledgeGraph, query: &Query, k: usize, cfg: &WalkConfig) -> ContextResult {
    if k == 0 {
        return ContextResult::default();
    }
    ContextResult::top_k(&pagerank_scores(graph, query, cfg), query, k)
}

/// Metapath-constrained context.
pub fn context_rw(
    graph: &KnowledgeGraph,
    query: &Query,
    k: usize,
    cfg: &WalkConfig,
) -> Result<ContextResult, ContextError> {
    if k == 0 {
        return Ok(ContextResult::default());
    }
    let metapaths = mine_metapaths(graph, query, cfg);
    context_from_metapaths(graph, query, k, &metapaths)
}

/// Scores with an already mined metapath set and returns the top `k`.
pub fn context_from_metapaths(
    graph: &KnowledgeGraph,
    query: &Query,
    k: usize,
    metapaths: &MetapathSet,
) -> Result<ContextResult, ContextError> {
    if metapaths.is_empty() {
        return Err(ContextError::NoMetapaths);
    }
    let scores = metapath_score(graph, query, metapaths);
    Ok(ContextResult::top_k(&scores, query, k))
}
