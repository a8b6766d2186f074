//! Notability of edge labels.
//!
//! For each label the query's instance and cardinality histograms are tested
//! against the context's, used as the null multinomial. The label's score is
//! the larger of the two test scores; it is notable when that is non-zero.

pub mod distribution;
pub mod multinomial;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use distribution::{
    build_cardinality_distribution, build_instance_distribution, CardinalityDistribution, InstanceDistribution,
};
pub use multinomial::{
    exact_significance, montecarlo_significance, mt, multinomial_point_probability, normalize, Method, MtOutcome,
    Significance, TestSettings,
};

use crate::graph::{KnowledgeGraph, LabelId, NodeId};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("probability vector has {probs} entries but count vector has {counts}")]
    DimensionMismatch { probs: usize, counts: usize },
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("probabilities must lie in [0, 1]")]
    InvalidProbability,
    #[error("observation has no counts")]
    EmptySample,
    #[error("cannot normalize an all-zero count vector")]
    ZeroTotal,
    #[error("{outcomes} outcomes exceed the enumeration budget of {budget}")]
    BudgetExceeded { outcomes: u64, budget: u64 },
    #[error("at least one Monte Carlo sample is required")]
    NoSamples,
    #[error("label {0} has no edges leaving the query or context")]
    LabelNotIncident(LabelId),
    #[error("the context is empty")]
    EmptyContext,
}

/// Knobs for the per-label test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StatsConfig {
    pub alpha: f64,
    pub exact_budget: u64,
    pub mc_samples: u64,
    pub rng_seed: u64,
}

impl Default for StatsConfig {
    fn default() -> Self {
        let t = TestSettings::default();
        Self {
            alpha: t.alpha,
            exact_budget: t.exact_budget,
            mc_samples: t.mc_samples,
            rng_seed: t.rng_seed,
        }
    }
}

impl StatsConfig {
    /// Settings with an RNG stream specific to `(label, test)`.
    fn settings(&self, label: LabelId, test: u64) -> TestSettings {
        let mut seed = self.rng_seed ^ 0x9E37_79B9_7F4A_7C15;
        seed = seed.wrapping_mul(0xBF58_476D_1CE4_E5B9) ^ ((label.0 as u64) << 1) ^ test;
        seed = (seed ^ (seed >> 31)).wrapping_mul(0x94D0_49BB_1331_11EB);
        TestSettings {
            alpha: self.alpha,
            exact_budget: self.exact_budget,
            mc_samples: self.mc_samples,
            rng_seed: seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictKind {
    Instance,
    Cardinality,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NotableVerdict {
    pub label: LabelId,
    /// max(δ_inst, δ_card); 0 when neither test rejects.
    pub delta: f64,
    pub kind: VerdictKind,
    pub p_sig_instance: f64,
    pub p_sig_cardinality: f64,
    pub instance_method: Method,
    pub cardinality_method: Method,
}

impl NotableVerdict {
    pub fn is_notable(&self) -> bool {
        self.delta != 0.0
    }
}

/// Verdict together with the histograms it was computed from.
#[derive(Debug, Clone)]
pub struct LabelAnalysis {
    pub verdict: NotableVerdict,
    pub instance: InstanceDistribution,
    pub cardinality: CardinalityDistribution,
}

/// Runs both tests for `label`. A tie between the two scores is attributed
/// to the cardinality test.
pub fn analyze_label(
    graph: &KnowledgeGraph,
    label: LabelId,
    query: &[NodeId],
    context: &[NodeId],
    cfg: &StatsConfig,
) -> Result<LabelAnalysis, StatsError> {
    if context.is_empty() {
        return Err(StatsError::EmptyContext);
    }
    let instance = build_instance_distribution(graph, label, query, context)?;
    let cardinality = build_cardinality_distribution(graph, label, query, context)?;

    let inst = mt(
        &normalize(&instance.context_counts)?,
        &instance.query_counts,
        &cfg.settings(label, 0),
    )?;
    let card = mt(
        &normalize(&cardinality.context_counts)?,
        &cardinality.query_counts,
        &cfg.settings(label, 1),
    )?;

    let (delta, kind) = if card.score > 0.0 && card.score >= inst.score {
        (card.score, VerdictKind::Cardinality)
    } else if inst.score > 0.0 {
        (inst.score, VerdictKind::Instance)
    } else {
        (0.0, VerdictKind::None)
    };
    Ok(LabelAnalysis {
        verdict: NotableVerdict {
            label,
            delta,
            kind,
            p_sig_instance: inst.significance.p_value,
            p_sig_cardinality: card.significance.p_value,
            instance_method: inst.significance.method,
            cardinality_method: card.significance.method,
        },
        instance,
        cardinality,
    })
}

/// δ(l, C, Q).
pub fn delta(
    graph: &KnowledgeGraph,
    label: LabelId,
    query: &[NodeId],
    context: &[NodeId],
    cfg: &StatsConfig,
) -> Result<NotableVerdict, StatsError> {
    analyze_label(graph, label, query, context, cfg).map(|a| a.verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::LoadOptions;

    fn graph(tsv: &str) -> KnowledgeGraph {
        KnowledgeGraph::load_tsv(tsv.as_bytes(), &LoadOptions::default()).unwrap()
    }

    fn ids(g: &KnowledgeGraph, names: &[&str]) -> Vec<NodeId> {
        names.iter().map(|n| g.node_by_name(n).unwrap()).collect()
    }

    #[test]
    fn identical_single_nodes_are_not_notable() {
        let g = graph("a\tp\tx\nb\tp\tx\n");
        let v = delta(&g, g.label_by_name("p").unwrap(), &ids(&g, &["a"]), &ids(&g, &["b"]), &StatsConfig::default())
            .unwrap();
        assert_eq!(v.delta, 0.0);
        assert_eq!(v.kind, VerdictKind::None);
        assert!(!v.is_notable());
    }

    #[test]
    fn missing_child_flags_cardinality() {
        let g = graph(
            "Merkel\tleaderOf\tGermany\nObama\tchild\tMalia\nObama\tchild\tSasha\n\
             Putin\tchild\tMaria\nRenzi\tchild\tFrancesco\nHollande\tchild\tThomas\n",
        );
        let v = delta(
            &g,
            g.label_by_name("child").unwrap(),
            &ids(&g, &["Merkel", "Obama"]),
            &ids(&g, &["Putin", "Renzi", "Hollande"]),
            &StatsConfig::default(),
        )
        .unwrap();
        assert_eq!(v.kind, VerdictKind::Cardinality);
        assert_eq!(v.delta, 1.0);
        assert_eq!(v.p_sig_cardinality, 0.0);
    }

    #[test]
    fn context_without_label_uses_none_point_mass() {
        // Context has no p-edges at all; query does.
        let g = graph("q\tp\tx\nc1\tr\ty\nc2\tr\ty\n");
        let v = delta(
            &g,
            g.label_by_name("p").unwrap(),
            &ids(&g, &["q"]),
            &ids(&g, &["c1", "c2"]),
            &StatsConfig::default(),
        )
        .unwrap();
        assert_eq!(v.delta, 1.0);
        assert_eq!(v.p_sig_instance, 0.0);
        assert_eq!(v.p_sig_cardinality, 0.0);
    }

    #[test]
    fn empty_context_is_an_error() {
        let g = graph("q\tp\tx\n");
        let err = delta(&g, g.label_by_name("p").unwrap(), &ids(&g, &["q"]), &[], &StatsConfig::default());
        assert!(matches!(err, Err(StatsError::EmptyContext)));
    }

    #[test]
    fn per_label_seeds_differ() {
        let cfg = StatsConfig::default();
        let a = cfg.settings(LabelId(1), 0).rng_seed;
        let b = cfg.settings(LabelId(1), 1).rng_seed;
        let c = cfg.settings(LabelId(2), 0).rng_seed;
        assert!(a != b && a != c && b != c);
    }
}
