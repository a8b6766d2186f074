//! End-to-end notable-characteristics search and its report format.

use std::collections::HashSet;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::context::{
    self, metapath::mine_metapaths_with, ContextError, ContextResult, EdgeWeights, MetapathSet, WalkConfig,
};
use crate::graph::{GraphError, KnowledgeGraph, NodeId, Query, MAX_QUERY_SIZE};
use crate::stats::{self, LabelAnalysis, Method, StatsConfig, StatsError, VerdictKind};

/// Context selector feeding the per-label tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Metapath-constrained context.
    #[default]
    FindNc,
    /// Personalized PageRank context.
    RwMult,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::FindNc => "findnc",
            Algorithm::RwMult => "rwmult",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Tsv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub walk: WalkConfig,
    pub k: usize,
    pub alpha: f64,
    pub algorithm: Algorithm,
    pub format: OutputFormat,
    /// Seeds both the metapath walks and the Monte Carlo tests.
    pub rng_seed: u64,
    pub exact_budget: u64,
    pub mc_samples: u64,
    /// When false every timing is reported as 0, making reports
    /// byte-reproducible.
    pub record_timings: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let stats = StatsConfig::default();
        Self {
            walk: WalkConfig::default(),
            k: 100,
            alpha: stats.alpha,
            algorithm: Algorithm::FindNc,
            format: OutputFormat::Json,
            rng_seed: 0,
            exact_budget: stats.exact_budget,
            mc_samples: stats.mc_samples,
            record_timings: true,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.k == 0 {
            return Err(PipelineError::InvalidConfig("k must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(PipelineError::InvalidConfig(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        self.walk.validate()?;
        Ok(())
    }

    pub fn walk_config(&self) -> WalkConfig {
        WalkConfig {
            rng_seed: self.rng_seed,
            ..self.walk.clone()
        }
    }

    pub fn stats_config(&self) -> StatsConfig {
        StatsConfig {
            alpha: self.alpha,
            exact_budget: self.exact_budget,
            mc_samples: self.mc_samples,
            rng_seed: self.rng_seed,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("unresolved query names: {}", format_unresolved(.0))]
    Unresolved(Vec<Unresolved>),
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no context nodes are reachable from the query")]
    EmptyContext,
}

/// A query name that matched no node, or several.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unresolved {
    pub name: String,
    pub ambiguous: bool,
    pub candidates: Vec<String>,
}

fn format_unresolved(items: &[Unresolved]) -> String {
    items
        .iter()
        .map(|u| {
            let what = if u.ambiguous { "ambiguous" } else { "not found" };
            if u.candidates.is_empty() {
                format!("`{}` ({what})", u.name)
            } else {
                format!("`{}` ({what}; candidates: {})", u.name, u.candidates.join(", "))
            }
        })
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone)]
pub struct ResolvedQuery {
    pub query: Query,
    pub warnings: Vec<String>,
}

const MAX_CANDIDATES: usize = 5;

/// Maps names to nodes by exact, case-sensitive match. A name matching no
/// node id is looked up among node labels, which must then be unique.
pub fn resolve_query<S: AsRef<str>>(graph: &KnowledgeGraph, names: &[S]) -> Result<ResolvedQuery, PipelineError> {
    let mut warnings = Vec::new();
    let mut seen = HashSet::new();
    let mut unique: Vec<&str> = Vec::new();
    for name in names {
        let name = name.as_ref();
        if seen.insert(name) {
            unique.push(name);
        } else {
            warnings.push(format!("duplicate query name `{name}` ignored"));
        }
    }
    if unique.is_empty() || unique.len() > MAX_QUERY_SIZE {
        return Err(GraphError::QuerySize(unique.len()).into());
    }

    let mut nodes = Vec::with_capacity(unique.len());
    let mut unresolved = Vec::new();
    for name in unique {
        if let Some(n) = graph.node_by_name(name) {
            nodes.push(n);
            continue;
        }
        let by_label: Vec<NodeId> = graph.nodes().filter(|&n| graph.node_label(n) == name).collect();
        match by_label.as_slice() {
            [n] => nodes.push(*n),
            [] => unresolved.push(Unresolved {
                name: name.to_string(),
                ambiguous: false,
                candidates: suggestions(graph, name),
            }),
            many => unresolved.push(Unresolved {
                name: name.to_string(),
                ambiguous: true,
                candidates: many
                    .iter()
                    .take(MAX_CANDIDATES)
                    .map(|&n| graph.node_name(n).to_string())
                    .collect(),
            }),
        }
    }
    if !unresolved.is_empty() {
        return Err(PipelineError::Unresolved(unresolved));
    }
    Ok(ResolvedQuery {
        query: Query::new(graph, nodes)?,
        warnings,
    })
}

fn suggestions(graph: &KnowledgeGraph, name: &str) -> Vec<String> {
    let lower = name.to_lowercase();
    graph
        .nodes()
        .map(|n| graph.node_name(n))
        .filter(|candidate| {
            let c = candidate.to_lowercase();
            c == lower || (!lower.is_empty() && c.contains(&lower))
        })
        .take(MAX_CANDIDATES)
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Timings {
    #[serde(serialize_with = "sig6")]
    pub mining: f64,
    #[serde(serialize_with = "sig6")]
    pub scoring: f64,
    #[serde(serialize_with = "sig6")]
    pub testing: f64,
}

/// Context plus the bookkeeping of how it was obtained.
#[derive(Debug, Clone)]
pub struct ContextOutcome {
    pub context: ContextResult,
    pub metapaths: Option<MetapathSet>,
    /// The metapath selector found nothing and the PageRank context was used.
    pub fell_back: bool,
    pub mining_ms: f64,
    pub scoring_ms: f64,
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Selects the context for `query`, falling back from the metapath selector
/// to PageRank when no metapath reaches the query.
pub fn discover_context(
    graph: &KnowledgeGraph,
    query: &Query,
    k: usize,
    algorithm: Algorithm,
    walk: &WalkConfig,
    metapaths: Option<MetapathSet>,
) -> ContextOutcome {
    if algorithm == Algorithm::FindNc {
        let t0 = Instant::now();
        let mined = metapaths.unwrap_or_else(|| {
            let weights = EdgeWeights::new(graph);
            mine_metapaths_with(graph, &weights, query, walk)
        });
        let mining_ms = elapsed_ms(t0);
        let t1 = Instant::now();
        match context::context_from_metapaths(graph, query, k, &mined) {
            Ok(context) => {
                return ContextOutcome {
                    context,
                    metapaths: Some(mined),
                    fell_back: false,
                    mining_ms,
                    scoring_ms: elapsed_ms(t1),
                }
            }
            Err(ContextError::NoMetapaths) => {
                log::warn!("no metapath reaches the query; using the PageRank context");
                let t2 = Instant::now();
                let context = context::random_walk_context(graph, query, k, walk);
                return ContextOutcome {
                    context,
                    metapaths: Some(mined),
                    fell_back: true,
                    mining_ms,
                    scoring_ms: elapsed_ms(t2),
                };
            }
            Err(e) => unreachable!("context scoring failed: {e}"),
        }
    }
    let t0 = Instant::now();
    let context = context::random_walk_context(graph, query, k, walk);
    ContextOutcome {
        context,
        metapaths: None,
        fell_back: false,
        mining_ms: 0.0,
        scoring_ms: elapsed_ms(t0),
    }
}

/// Tests every label leaving `query ∪ context`, in label-id order.
pub fn characterize(
    graph: &KnowledgeGraph,
    query: &Query,
    context: &[NodeId],
    cfg: &StatsConfig,
) -> Result<Vec<LabelAnalysis>, StatsError> {
    let members: Vec<NodeId> = query.nodes().iter().chain(context).copied().collect();
    let labels: Vec<_> = graph.restricted_labels(&members).into_iter().collect();
    labels
        .par_iter()
        .map(|&l| stats::analyze_label(graph, l, query.nodes(), context, cfg))
        .collect()
}

/// Resolves `names` and runs the full search.
pub fn find_notable<S: AsRef<str>>(
    graph: &KnowledgeGraph,
    names: &[S],
    cfg: &RunConfig,
) -> Result<NotableReport, PipelineError> {
    cfg.validate()?;
    let resolved = resolve_query(graph, names)?;
    find_notable_for_query(graph, &resolved.query, cfg, resolved.warnings)
}

pub fn find_notable_for_query(
    graph: &KnowledgeGraph,
    query: &Query,
    cfg: &RunConfig,
    mut warnings: Vec<String>,
) -> Result<NotableReport, PipelineError> {
    cfg.validate()?;
    let walk = cfg.walk_config();
    let outcome = discover_context(graph, query, cfg.k, cfg.algorithm, &walk, None);
    if outcome.fell_back {
        warnings.push("no metapath reached the query; context selected by PageRank (rwmult)".into());
    }
    if outcome.context.is_empty() {
        return Err(PipelineError::EmptyContext);
    }
    let t0 = Instant::now();
    let analyses = characterize(graph, query, &outcome.context.nodes(), &cfg.stats_config())?;
    let testing_ms = elapsed_ms(t0);

    let timings = if cfg.record_timings {
        Timings {
            mining: outcome.mining_ms,
            scoring: outcome.scoring_ms,
            testing: testing_ms,
        }
    } else {
        Timings::default()
    };
    Ok(NotableReport::build(graph, query, &outcome, analyses, timings, cfg, warnings))
}

/// Rounds to 6 significant digits so that serialized reports are stable.
pub fn round_sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

fn sig6<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round_sig6(*x))
}

#[derive(Debug, Clone, Serialize)]
pub struct ContextRow {
    pub node: String,
    #[serde(serialize_with = "sig6")]
    pub score: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DistributionDump<T> {
    pub support: Vec<T>,
    pub q: Vec<u64>,
    pub c: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Debug, Clone, Serialize)]
pub struct Characteristic {
    pub label: String,
    pub direction: Direction,
    #[serde(serialize_with = "sig6")]
    pub delta: f64,
    pub kind: VerdictKind,
    #[serde(serialize_with = "sig6")]
    pub p_sig_instance: f64,
    #[serde(serialize_with = "sig6")]
    pub p_sig_cardinality: f64,
    pub instance_method: Method,
    pub cardinality_method: Method,
    /// `null` stands for the bucket of members without the label.
    pub instance_distribution: DistributionDump<Option<String>>,
    pub cardinality_distribution: DistributionDump<u64>,
}

impl Characteristic {
    pub fn is_notable(&self) -> bool {
        self.delta != 0.0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MetapathRow {
    pub labels: Vec<String>,
    pub count: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NotableReport {
    pub query: Vec<String>,
    pub context: Vec<ContextRow>,
    /// Sorted by δ descending.
    pub characteristics: Vec<Characteristic>,
    pub timings_ms: Timings,
    pub config: RunConfig,
    pub algorithm_used: Algorithm,
    pub metapaths: Vec<MetapathRow>,
    pub warnings: Vec<String>,
}

impl NotableReport {
    fn build(
        graph: &KnowledgeGraph,
        query: &Query,
        outcome: &ContextOutcome,
        analyses: Vec<LabelAnalysis>,
        timings_ms: Timings,
        cfg: &RunConfig,
        warnings: Vec<String>,
    ) -> Self {
        let mut characteristics: Vec<Characteristic> = analyses
            .into_iter()
            .map(|a| {
                let v = a.verdict;
                Characteristic {
                    label: graph.label_name(v.label).to_string(),
                    direction: if graph.is_inverse(v.label) {
                        Direction::Inverse
                    } else {
                        Direction::Forward
                    },
                    delta: v.delta,
                    kind: v.kind,
                    p_sig_instance: v.p_sig_instance,
                    p_sig_cardinality: v.p_sig_cardinality,
                    instance_method: v.instance_method,
                    cardinality_method: v.cardinality_method,
                    instance_distribution: DistributionDump {
                        support: a
                            .instance
                            .support
                            .iter()
                            .map(|s| s.map(|n| graph.node_name(n).to_string()))
                            .collect(),
                        q: a.instance.query_counts,
                        c: a.instance.context_counts,
                    },
                    cardinality_distribution: DistributionDump {
                        support: a.cardinality.support,
                        q: a.cardinality.query_counts,
                        c: a.cardinality.context_counts,
                    },
                }
            })
            .collect();
        characteristics.sort_by(|a, b| {
            b.delta
                .total_cmp(&a.delta)
                .then(
                    a.p_sig_instance
                        .min(a.p_sig_cardinality)
                        .total_cmp(&b.p_sig_instance.min(b.p_sig_cardinality)),
                )
                .then_with(|| a.label.cmp(&b.label))
        });

        let algorithm_used = if outcome.fell_back {
            Algorithm::RwMult
        } else {
            cfg.algorithm
        };
        let metapaths = outcome
            .metapaths
            .iter()
            .flat_map(|m| m.paths())
            .map(|m| MetapathRow {
                labels: m.labels.iter().map(|&l| graph.label_name(l).to_string()).collect(),
                count: m.count,
            })
            .collect();

        Self {
            query: query.nodes().iter().map(|&n| graph.node_name(n).to_string()).collect(),
            context: outcome
                .context
                .entries
                .iter()
                .map(|e| ContextRow {
                    node: graph.node_name(e.node).to_string(),
                    score: e.score,
                })
                .collect(),
            characteristics,
            timings_ms,
            config: cfg.clone(),
            algorithm_used,
            metapaths,
            warnings,
        }
    }

    pub fn notable(&self) -> impl Iterator<Item = &Characteristic> {
        self.characteristics.iter().filter(|c| c.is_notable())
    }

    pub fn characteristic(&self, label: &str) -> Option<&Characteristic> {
        self.characteristics.iter().find(|c| c.label == label)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("label\tdirection\tdelta\tkind\tp_sig_instance\tp_sig_cardinality\n");
        for c in &self.characteristics {
            let direction = match c.direction {
                Direction::Forward => "forward",
                Direction::Inverse => "inverse",
            };
            let kind = match c.kind {
                VerdictKind::Instance => "instance",
                VerdictKind::Cardinality => "cardinality",
                VerdictKind::None => "none",
            };
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                c.label,
                direction,
                round_sig6(c.delta),
                kind,
                round_sig6(c.p_sig_instance),
                round_sig6(c.p_sig_cardinality)
            ));
        }
        out
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => self.to_json(),
            OutputFormat::Tsv => self.to_tsv(),
        }
    }
}
