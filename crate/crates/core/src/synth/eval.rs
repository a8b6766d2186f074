//! Context quality against a known relevant set, swept over parameters.

use std::collections::BTreeSet;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::GroundTruth;
use crate::context::{self, ContextResult, WalkConfig};
use crate::graph::{KnowledgeGraph, Query};
use crate::pipeline::{resolve_query, round_sig6, PipelineError};

pub const CSV_HEADER: &str = "algo,q_size,c_size,num_metapaths,max_len,f1,wall_ms";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("ground truth has no relevant nodes")]
    EmptyTruth,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContextAlgorithm {
    ContextRw,
    RandomWalk,
}

impl ContextAlgorithm {
    pub fn name(self) -> &'static str {
        match self {
            ContextAlgorithm::ContextRw => "contextrw",
            ContextAlgorithm::RandomWalk => "randomwalk",
        }
    }

    /// Top-`k` context. The metapath selector yields an empty context when
    /// no metapath reaches the query.
    pub fn context(self, graph: &KnowledgeGraph, query: &Query, k: usize, cfg: &WalkConfig) -> ContextResult {
        match self {
            ContextAlgorithm::ContextRw => context::context_rw(graph, query, k, cfg).unwrap_or_default(),
            ContextAlgorithm::RandomWalk => context::random_walk_context(graph, query, k, cfg),
        }
    }
}

/// F1 of the first `k` result nodes against `truth.relevant`, as sets. When
/// the result holds fewer than `k` nodes, all of them are used.
pub fn f1_at_k(graph: &KnowledgeGraph, result: &ContextResult, truth: &GroundTruth, k: usize) -> Result<f64, EvalError> {
    if truth.relevant.is_empty() {
        return Err(EvalError::EmptyTruth);
    }
    let top: BTreeSet<&str> = result.entries.iter().take(k).map(|e| graph.node_name(e.node)).collect();
    if top.is_empty() {
        return Ok(0.0);
    }
    let hits = top.iter().filter(|n| truth.relevant.contains(**n)).count() as f64;
    if hits == 0.0 {
        return Ok(0.0);
    }
    let precision = hits / top.len() as f64;
    let recall = hits / truth.relevant.len() as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Parameter axes. Every combination is one cell; `c_sizes` are reported as
/// separate rows of the same cell. A context size of 0 stands for the size
/// of each query's relevant set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Grid {
    pub algorithms: Vec<ContextAlgorithm>,
    /// Query prefixes; empty means the full query.
    pub q_sizes: Vec<usize>,
    pub c_sizes: Vec<usize>,
    pub num_metapaths: Vec<usize>,
    pub max_lens: Vec<usize>,
    pub walks: u64,
    pub damping: f64,
    pub iterations: usize,
    pub rng_seed: u64,
    pub record_timings: bool,
}

impl Default for Grid {
    fn default() -> Self {
        let walk = WalkConfig::default();
        Self {
            algorithms: vec![ContextAlgorithm::ContextRw, ContextAlgorithm::RandomWalk],
            q_sizes: Vec::new(),
            c_sizes: vec![0],
            num_metapaths: vec![walk.num_metapaths],
            max_lens: vec![walk.max_metapath_len],
            walks: 100_000,
            damping: walk.damping,
            iterations: walk.iterations,
            rng_seed: 0,
            record_timings: true,
        }
    }
}

impl Grid {
    /// A single-cell grid.
    pub fn single(algorithm: ContextAlgorithm) -> Self {
        Self {
            algorithms: vec![algorithm],
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), EvalError> {
        if self.algorithms.is_empty() || self.c_sizes.is_empty() || self.num_metapaths.is_empty() || self.max_lens.is_empty()
        {
            return Err(EvalError::InvalidGrid("every axis needs at least one value".into()));
        }
        if self.q_sizes.contains(&0) {
            return Err(EvalError::InvalidGrid("query sizes must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub algo: ContextAlgorithm,
    pub q_size: usize,
    /// Context cutoff; 0 when it varied with the relevant-set size.
    pub c_size: usize,
    pub num_metapaths: usize,
    pub max_len: usize,
    /// Mean over queries.
    pub f1: f64,
    /// Mean context time per query; 0 when timings are disabled.
    pub wall_ms: f64,
}

impl GridRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.algo.name(),
            self.q_size,
            self.c_size,
            self.num_metapaths,
            self.max_len,
            round_sig6(self.f1),
            round_sig6(self.wall_ms)
        )
    }
}

pub fn to_csv(rows: &[GridRow]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

struct Cell {
    algo: ContextAlgorithm,
    q_size: Option<usize>,
    num_metapaths: usize,
    max_len: usize,
}

/// Evaluates every grid cell over all `truths`. Rows follow grid order:
/// algorithm, query size, metapath count, length, context size.
pub fn run_grid(graph: &KnowledgeGraph, truths: &[GroundTruth], grid: &Grid) -> Result<Vec<GridRow>, EvalError> {
    grid.validate()?;
    if truths.is_empty() || truths.iter().any(|t| t.relevant.is_empty()) {
        return Err(EvalError::EmptyTruth);
    }
    let q_sizes: Vec<Option<usize>> = if grid.q_sizes.is_empty() {
        vec![None]
    } else {
        grid.q_sizes.iter().map(|&q| Some(q)).collect()
    };
    let mut cells = Vec::new();
    for &algo in &grid.algorithms {
        for &q_size in &q_sizes {
            for &num_metapaths in &grid.num_metapaths {
                for &max_len in &grid.max_lens {
                    cells.push(Cell {
                        algo,
                        q_size,
                        num_metapaths,
                        max_len,
                    });
                }
            }
        }
    }

    let rows: Vec<Vec<GridRow>> = cells
        .par_iter()
        .map(|cell| evaluate_cell(graph, truths, grid, cell))
        .collect::<Result<_, _>>()?;
    Ok(rows.into_iter().flatten().collect())
}

fn evaluate_cell(graph: &KnowledgeGraph, truths: &[GroundTruth], grid: &Grid, cell: &Cell) -> Result<Vec<GridRow>, EvalError> {
    let cfg = WalkConfig {
        damping: grid.damping,
        iterations: grid.iterations,
        num_walk_samples: grid.walks,
        max_metapath_len: cell.max_len,
        num_metapaths: cell.num_metapaths,
        rng_seed: grid.rng_seed,
        ..WalkConfig::default()
    };
    cfg.validate().map_err(|e| EvalError::InvalidGrid(e.to_string()))?;

    let prepared: Vec<GroundTruth> = truths
        .iter()
        .map(|t| match cell.q_size {
            Some(q) => t.with_query_prefix(q),
            None => t.clone(),
        })
        .collect();
    let cutoff = |c: usize, t: &GroundTruth| if c == 0 { t.relevant.len() } else { c };
    let max_k = prepared
        .iter()
        .flat_map(|t| grid.c_sizes.iter().map(move |&c| cutoff(c, t)))
        .max()
        .unwrap_or(1);

    let mut f1_sums = vec![0.0; grid.c_sizes.len()];
    let mut elapsed_ms = 0.0;
    for truth in &prepared {
        let query = resolve_query(graph, &truth.query)?.query;
        let t0 = Instant::now();
        let result = cell.algo.context(graph, &query, max_k, &cfg);
        elapsed_ms += t0.elapsed().as_secs_f64() * 1e3;
        for (sum, &c) in f1_sums.iter_mut().zip(&grid.c_sizes) {
            *sum += f1_at_k(graph, &result, truth, cutoff(c, truth))?;
        }
    }

    let n = prepared.len() as f64;
    let q_size = prepared[0].query.len();
    Ok(grid
        .c_sizes
        .iter()
        .zip(f1_sums)
        .map(|(&c, sum)| {
            let c_size = if c != 0 {
                c
            } else {
                let first = prepared[0].relevant.len();
                if prepared.iter().all(|t| t.relevant.len() == first) {
                    first
                } else {
                    0
                }
            };
            GridRow {
                algo: cell.algo,
                q_size,
                c_size,
                num_metapaths: cell.num_metapaths,
                max_len: cell.max_len,
                f1: sum / n,
                wall_ms: if grid.record_timings { elapsed_ms / n } else { 0.0 },
            }
        })
        .collect())
}
