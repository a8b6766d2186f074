//! Label-frequency edge weights.
//!
//! An edge carrying label `l` weighs `1 - |E_l| / |E|`: rare labels are
//! preferred by both the PageRank baseline and the metapath walker.

use crate::graph::{KnowledgeGraph, LabelId, NodeId};

/// Weight of the edge `(u, v, l)`; zero when no such edge exists.
pub fn weighted_adjacency_weight(graph: &KnowledgeGraph, u: NodeId, v: NodeId, label: LabelId) -> f64 {
    if !graph.contains_node(u) || !graph.contains_label(label) {
        return 0.0;
    }
    let exists = graph
        .out_edges(u)
        .iter()
        .any(|e| e.target == v && e.label == label);
    if !exists {
        return 0.0;
    }
    label_weight(graph, label)
}

fn label_weight(graph: &KnowledgeGraph, label: LabelId) -> f64 {
    // label_frequency cannot fail for a label drawn from the graph.
    1.0 - graph.label_frequency(label).unwrap_or(1.0)
}

/// Precomputed per-label weights, per-node weight totals and per-node
/// cumulative weights for sampling.
#[derive(Debug, Clone)]
pub struct EdgeWeights {
    by_label: Vec<f64>,
    node_total: Vec<f64>,
    cumulative: Vec<f64>,
}

impl EdgeWeights {
    pub fn new(graph: &KnowledgeGraph) -> Self {
        let by_label: Vec<f64> = graph.labels().map(|l| label_weight(graph, l)).collect();
        let mut node_total = Vec::with_capacity(graph.node_count());
        let mut cumulative = Vec::with_capacity(graph.edge_count());
        for u in graph.nodes() {
            let mut acc = 0.0;
            for e in graph.out_edges(u) {
                acc += by_label[e.label.index()];
                cumulative.push(acc);
            }
            node_total.push(acc);
        }
        Self {
            by_label,
            node_total,
            cumulative,
        }
    }

    #[inline]
    pub fn label(&self, label: LabelId) -> f64 {
        self.by_label[label.index()]
    }

    /// Σ_k A_uk.
    #[inline]
    pub fn out_total(&self, node: NodeId) -> f64 {
        self.node_total[node.index()]
    }

    /// Running weight sums over `node`'s outgoing edges, in adjacency order.
    #[inline]
    pub(crate) fn cumulative<'a>(&'a self, graph: &KnowledgeGraph, node: NodeId) -> &'a [f64] {
        let start = graph.edge_offset(node);
        &self.cumulative[start..start + graph.out_degree(node)]
    }
}
