//! Metapath-constrained node scoring.

use std::collections::HashMap;

use rayon::prelude::*;

use super::metapath::MetapathSet;
use crate::graph::{KnowledgeGraph, LabelId, NodeId, Query};

/// Number of label-constrained paths from `start` following `labels`,
/// grouped by end node. Paths may revisit nodes.
pub fn count_label_paths(graph: &KnowledgeGraph, start: NodeId, labels: &[LabelId]) -> HashMap<NodeId, f64> {
    let mut frontier: HashMap<NodeId, f64> = HashMap::from([(start, 1.0)]);
    for &label in labels {
        let mut next: HashMap<NodeId, f64> = HashMap::with_capacity(frontier.len());
        for (&node, &count) in &frontier {
            for e in graph.out_edges(node) {
                if e.label == label {
                    *next.entry(e.target).or_insert(0.0) += count;
                }
            }
        }
        if next.is_empty() {
            return next;
        }
        frontier = next;
    }
    frontier
}

/// σ(n') = Σ_{m, n∈Q} |n ⇝m n'| / |n ⇝m V∖Q| · Pr(m), with every mined
/// metapath reversed so that it starts at the query. Query nodes score 0.
pub fn metapath_score(graph: &KnowledgeGraph, query: &Query, metapaths: &MetapathSet) -> Vec<f64> {
    let in_query = query.mask(graph.node_count());
    let reversed: Vec<Vec<LabelId>> = metapaths.paths().iter().map(|m| m.reversed(graph)).collect();
    let pairs: Vec<(usize, NodeId)> = (0..metapaths.len())
        .flat_map(|m| query.nodes().iter().map(move |&n| (m, n)))
        .collect();

    let terms: Vec<Vec<(NodeId, f64)>> = pairs
        .par_iter()
        .map(|&(m, n)| {
            let ends = count_label_paths(graph, n, &reversed[m]);
            let mut ends: Vec<(NodeId, f64)> = ends
                .into_iter()
                .filter(|(node, _)| !in_query[node.index()])
                .collect();
            let denom: f64 = ends.iter().map(|(_, c)| c).sum();
            if denom <= 0.0 {
                return Vec::new();
            }
            let pr = metapaths.probability(m);
            ends.sort_unstable_by_key(|(node, _)| *node);
            ends.into_iter().map(|(node, c)| (node, c / denom * pr)).collect()
        })
        .collect();

    let mut scores = vec![0.0; graph.node_count()];
    for term in terms {
        for (node, s) in term {
            scores[node.index()] += s;
        }
    }
    scores
}
