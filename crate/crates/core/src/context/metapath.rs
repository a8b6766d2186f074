//! Metapath mining by random walks that terminate at query nodes.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::weights::EdgeWeights;
use super::{StepChoice, WalkConfig};
use crate::graph::{KnowledgeGraph, LabelId, NodeId, Query};

/// Walks simulated per RNG stream. Stream `i` covers walks
/// `[i * WALKS_PER_STREAM, (i + 1) * WALKS_PER_STREAM)`, so results do not
/// depend on how streams are scheduled across threads.
pub const WALKS_PER_STREAM: u64 = 1 << 14;

/// An edge-label sequence with the number of walks that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metapath {
    pub labels: Vec<LabelId>,
    pub count: u64,
}

impl Metapath {
    /// Reverses the sequence and inverts every label, turning a path that
    /// ends at a query node into one that starts there.
    pub fn reversed(&self, graph: &KnowledgeGraph) -> Vec<LabelId> {
        self.labels.iter().rev().map(|&l| graph.inverse(l)).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MetapathSet {
    paths: Vec<Metapath>,
    total_count: u64,
}

impl MetapathSet {
    /// Builds a set from counted sequences, keeping the `limit` most frequent
    /// (ties broken by label sequence).
    pub fn from_counts(counts: HashMap<Vec<LabelId>, u64>, limit: usize) -> Self {
        let mut paths: Vec<Metapath> = counts
            .into_iter()
            .filter(|(labels, count)| !labels.is_empty() && *count > 0)
            .map(|(labels, count)| Metapath { labels, count })
            .collect();
        paths.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.labels.cmp(&b.labels)));
        paths.truncate(limit);
        let total_count = paths.iter().map(|m| m.count).sum();
        Self { paths, total_count }
    }

    pub fn paths(&self) -> &[Metapath] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn total_count(&self) -> u64 {
        self.total_count
    }

    /// Pr(m) = c(m) / Σ c.
    pub fn probability(&self, index: usize) -> f64 {
        self.paths[index].count as f64 / self.total_count as f64
    }

    pub fn to_named(&self, graph: &KnowledgeGraph) -> NamedMetapathSet {
        NamedMetapathSet {
            metapaths: self
                .paths
                .iter()
                .map(|m| NamedMetapath {
                    labels: m.labels.iter().map(|&l| graph.label_name(l).to_string()).collect(),
                    count: m.count,
                })
                .collect(),
        }
    }

    pub fn from_named(graph: &KnowledgeGraph, named: &NamedMetapathSet) -> Result<Self, String> {
        let mut counts = HashMap::new();
        for m in &named.metapaths {
            let labels = m
                .labels
                .iter()
                .map(|name| {
                    graph
                        .label_by_name(name)
                        .ok_or_else(|| format!("unknown edge label `{name}`"))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if labels.is_empty() || m.count == 0 {
                return Err("metapaths need at least one label and a positive count".into());
            }
            *counts.entry(labels).or_insert(0) += m.count;
        }
        Ok(Self::from_counts(counts, usize::MAX))
    }
}

/// Serialized form of a [`MetapathSet`], with labels by name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedMetapathSet {
    pub metapaths: Vec<NamedMetapath>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedMetapath {
    pub labels: Vec<String>,
    pub count: u64,
}

/// Samples `cfg.num_walk_samples` walks from uniformly chosen non-query
/// nodes and counts the edge-label sequences of walks that reach the query
/// within `cfg.max_metapath_len` steps. Returns the `cfg.num_metapaths` most
/// frequent sequences; the set is empty when no walk reached the query.
pub fn mine_metapaths(graph: &KnowledgeGraph, query: &Query, cfg: &WalkConfig) -> MetapathSet {
    let weights = EdgeWeights::new(graph);
    mine_metapaths_with(graph, &weights, query, cfg)
}

pub fn mine_metapaths_with(
    graph: &KnowledgeGraph,
    weights: &EdgeWeights,
    query: &Query,
    cfg: &WalkConfig,
) -> MetapathSet {
    let in_query = query.mask(graph.node_count());
    let starts: Vec<NodeId> = graph
        .nodes()
        .filter(|&n| !in_query[n.index()] && can_step(graph, weights, cfg.step_choice, n))
        .collect();
    if starts.is_empty() || cfg.num_walk_samples == 0 || cfg.max_metapath_len == 0 {
        return MetapathSet::default();
    }

    let walker = Walker {
        graph,
        weights,
        in_query: &in_query,
        starts: &starts,
        cfg,
    };
    let total = cfg.num_walk_samples;
    let streams = total.div_ceil(WALKS_PER_STREAM);
    let counts = (0..streams)
        .into_par_iter()
        .map(|stream| {
            let begin = stream * WALKS_PER_STREAM;
            let walks = WALKS_PER_STREAM.min(total - begin);
            walker.run_stream(stream, walks)
        })
        .reduce(HashMap::new, merge_counts);

    MetapathSet::from_counts(counts, cfg.num_metapaths)
}

fn merge_counts(
    mut a: HashMap<Vec<LabelId>, u64>,
    b: HashMap<Vec<LabelId>, u64>,
) -> HashMap<Vec<LabelId>, u64> {
    if a.len() < b.len() {
        return merge_counts(b, a);
    }
    for (k, v) in b {
        *a.entry(k).or_insert(0) += v;
    }
    a
}

fn can_step(graph: &KnowledgeGraph, weights: &EdgeWeights, choice: StepChoice, node: NodeId) -> bool {
    match choice {
        StepChoice::Weighted => weights.out_total(node) > 0.0,
        StepChoice::Uniform => graph.out_degree(node) > 0,
    }
}

struct Walker<'a> {
    graph: &'a KnowledgeGraph,
    weights: &'a EdgeWeights,
    in_query: &'a [bool],
    starts: &'a [NodeId],
    cfg: &'a WalkConfig,
}

impl Walker<'_> {
    fn run_stream(&self, stream: u64, walks: u64) -> HashMap<Vec<LabelId>, u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.rng_seed);
        rng.set_stream(stream);
        let mut counts: HashMap<Vec<LabelId>, u64> = HashMap::new();
        let mut labels = Vec::with_capacity(self.cfg.max_metapath_len);
        for _ in 0..walks {
            if self.walk(&mut rng, &mut labels) {
                match counts.get_mut(labels.as_slice()) {
                    Some(c) => *c += 1,
                    None => {
                        counts.insert(labels.clone(), 1);
                    }
                }
            }
        }
        counts
    }

    /// Returns true when the walk reached the query; `labels` then holds the
    /// traversed edge labels.
    fn walk(&self, rng: &mut ChaCha8Rng, labels: &mut Vec<LabelId>) -> bool {
        labels.clear();
        let mut current = self.starts[rng.random_range(0..self.starts.len())];
        while labels.len() < self.cfg.max_metapath_len {
            let Some(edge) = self.step(rng, current) else {
                return false;
            };
            labels.push(edge.label);
            current = edge.target;
            if self.in_query[current.index()] {
                return true;
            }
        }
        false
    }

    fn step(&self, rng: &mut ChaCha8Rng, node: NodeId) -> Option<crate::graph::Edge> {
        let edges = self.graph.out_edges(node);
        if edges.is_empty() {
            return None;
        }
        match self.cfg.step_choice {
            StepChoice::Uniform => Some(edges[rng.random_range(0..edges.len())]),
            StepChoice::Weighted => {
                let total = self.weights.out_total(node);
                if total <= 0.0 {
                    return None;
                }
                let cum = self.weights.cumulative(self.graph, node);
                let r = rng.random::<f64>() * total;
                let idx = cum.partition_point(|&c| c <= r).min(edges.len() - 1);
                Some(edges[idx])
            }
        }
    }
}
