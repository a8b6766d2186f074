//! Personalized PageRank by power iteration over label-frequency weights.

use super::weights::EdgeWeights;
use super::WalkConfig;
use crate::graph::{KnowledgeGraph, NodeId};

/// Runs `cfg.iterations` sweeps of `p = c·Ã·p + (1 - c)·v` starting from
/// `p = v`, where `v` is the indicator of `seed` and
/// `Ã_ij = A_ji / Σ_k A_jk`. Nodes whose outgoing weight is zero send their
/// mass back to the seed.
pub fn personalized_pagerank(graph: &KnowledgeGraph, seed: NodeId, cfg: &WalkConfig) -> Vec<f64> {
    let weights = EdgeWeights::new(graph);
    personalized_pagerank_observed(graph, &weights, seed, cfg, |_, _| {})
}

/// Same as [`personalized_pagerank`], calling `observe(iteration, p)` after
/// every sweep.
pub fn personalized_pagerank_observed<F>(
    graph: &KnowledgeGraph,
    weights: &EdgeWeights,
    seed: NodeId,
    cfg: &WalkConfig,
    mut observe: F,
) -> Vec<f64>
where
    F: FnMut(usize, &[f64]),
{
    let n = graph.node_count();
    let c = cfg.damping;
    let mut p = vec![0.0; n];
    p[seed.index()] = 1.0;
    let mut next = vec![0.0; n];

    for iter in 0..cfg.iterations {
        next.iter_mut().for_each(|x| *x = 0.0);
        let mut dangling = 0.0;
        for u in graph.nodes() {
            let mass = p[u.index()];
            if mass == 0.0 {
                continue;
            }
            let total = weights.out_total(u);
            if total <= 0.0 {
                dangling += mass;
                continue;
            }
            let scale = c * mass / total;
            for e in graph.out_edges(u) {
                next[e.target.index()] += scale * weights.label(e.label);
            }
        }
        next[seed.index()] += (1.0 - c) + c * dangling;
        std::mem::swap(&mut p, &mut next);
        observe(iter, &p);
    }
    p
}
