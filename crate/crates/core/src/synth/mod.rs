//! Synthetic graphs with planted structure, and the context-quality harness.
//!
//! Entities are split into domains. Every attribute label is shared by all
//! domains (unless restricted), but a domain-scoped attribute draws its
//! values from a pool private to the domain, so same-domain entities meet at
//! the same value nodes. Global attributes draw from one pool shared by
//! everybody and blur the domain boundaries.

pub mod eval;

use std::collections::BTreeSet;

use rand::seq::index::sample_weighted;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{KnowledgeGraph, LoadOptions, Triple, MAX_QUERY_SIZE};

pub use eval::{f1_at_k, run_grid, to_csv, ContextAlgorithm, EvalError, Grid, GridRow, CSV_HEADER};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// One value pool per domain.
    Domain,
    /// One value pool for all domains.
    Global,
    /// Values are the first `pool` entities of the entity's own domain.
    Members,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub label: String,
    pub scope: Scope,
    /// Number of value nodes per pool.
    pub pool: usize,
    /// Each entity gets between `min` and `max` distinct values.
    pub min: usize,
    pub max: usize,
    /// Restricts the attribute to these domains; all when absent.
    #[serde(default)]
    pub domains: Option<Vec<usize>>,
    /// When set, every value node gets an edge with this predicate to a
    /// shared node standing for the attribute's value class.
    #[serde(default)]
    pub value_class: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnomalyKind {
    /// The entity loses every edge of the label.
    Missing,
    /// The entity's values are replaced by one value nobody else has.
    Divergent,
}

/// An anomaly planted on a query member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anomaly {
    pub kind: AnomalyKind,
    pub label: String,
    /// Index into the query.
    pub query_member: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub domains: usize,
    pub entities_per_domain: usize,
    pub attributes: Vec<AttributeSpec>,
    #[serde(default)]
    pub anomalies: Vec<Anomaly>,
    #[serde(default)]
    pub query_domain: usize,
    pub query_size: usize,
    #[serde(default)]
    pub rng_seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        let attr = |label: &str, scope, pool, min, max| AttributeSpec {
            label: label.to_string(),
            scope,
            pool,
            min,
            max,
            domains: None,
            value_class: None,
        };
        Self {
            domains: 3,
            entities_per_domain: 50,
            attributes: vec![
                attr("gender", Scope::Global, 2, 1, 1),
                attr("livesIn", Scope::Global, 4, 1, 1),
                attr("bornIn", Scope::Domain, 4, 1, 1),
                attr("worksOn", Scope::Domain, 5, 1, 2),
                attr("child", Scope::Domain, 6, 1, 3),
            ],
            anomalies: Vec::new(),
            query_domain: 0,
            query_size: 5,
            rng_seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::InvalidSpec(msg));
        if self.domains == 0 || self.entities_per_domain == 0 || self.domains * self.entities_per_domain < 2 {
            return bad("at least two entities are required".into());
        }
        if self.query_domain >= self.domains {
            return bad(format!("query domain {} out of range", self.query_domain));
        }
        if self.query_size == 0 || self.query_size > MAX_QUERY_SIZE || self.query_size >= self.entities_per_domain {
            return bad(format!(
                "query size must lie in 1..={} and leave room for context in the domain",
                MAX_QUERY_SIZE.min(self.entities_per_domain.saturating_sub(1))
            ));
        }
        if self.attributes.is_empty() {
            return bad("at least one attribute is required".into());
        }
        let mut labels = BTreeSet::new();
        for a in &self.attributes {
            if !labels.insert(a.label.as_str()) {
                return bad(format!("attribute `{}` declared twice", a.label));
            }
            if a.label.is_empty() || a.label.contains(['\t', '\n']) {
                return bad(format!("attribute label `{}` is not a valid predicate", a.label));
            }
            if a.pool == 0 || a.min > a.max || a.max > a.pool {
                return bad(format!("attribute `{}` needs 0 < pool and min <= max <= pool", a.label));
            }
            if a.scope == Scope::Members && (a.max >= a.pool || a.pool > self.entities_per_domain) {
                return bad(format!(
                    "member attribute `{}` needs max < pool <= entities per domain",
                    a.label
                ));
            }
            if let Some(ds) = &a.domains {
                if ds.iter().any(|&d| d >= self.domains) {
                    return bad(format!("attribute `{}` names an unknown domain", a.label));
                }
            }
        }
        for an in &self.anomalies {
            if an.query_member >= self.query_size {
                return bad(format!("anomaly on query member {} out of range", an.query_member));
            }
            if !labels.contains(an.label.as_str()) {
                return bad(format!("anomaly names unknown attribute `{}`", an.label));
            }
        }
        Ok(())
    }
}

/// Query names and the nodes that should appear in their context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub query: Vec<String>,
    pub relevant: BTreeSet<String>,
}

impl GroundTruth {
    /// Truth for the first `size` query members: the dropped members
    /// become relevant context.
    pub fn with_query_prefix(&self, size: usize) -> GroundTruth {
        let size = size.min(self.query.len());
        let mut relevant = self.relevant.clone();
        relevant.extend(self.query[size..].iter().cloned());
        GroundTruth {
            query: self.query[..size].to_vec(),
            relevant,
        }
    }

    /// One name per line.
    pub fn relevant_lines(&self) -> String {
        self.relevant.iter().map(|n| format!("{n}\n")).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticGraph {
    pub triples: Vec<Triple>,
    pub truth: GroundTruth,
    /// Labels that carry an anomaly and should be the only notable ones.
    pub planted: BTreeSet<String>,
}

impl SyntheticGraph {
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for t in &self.triples {
            out.push_str(&t.subject);
            out.push('\t');
            out.push_str(&t.predicate);
            out.push('\t');
            out.push_str(&t.object);
            out.push('\n');
        }
        out
    }

    pub fn graph(&self, options: &LoadOptions) -> KnowledgeGraph {
        KnowledgeGraph::from_triples(self.triples.iter().cloned(), options).expect("generated graphs are well formed")
    }
}

pub fn entity_name(domain: usize, index: usize) -> String {
    format!("d{domain}_e{index}")
}

fn value_name(attr: &AttributeSpec, domain: usize, index: usize) -> String {
    match attr.scope {
        Scope::Domain => format!("d{domain}_{}_{index}", attr.label),
        Scope::Global => format!("{}_{index}", attr.label),
        Scope::Members => entity_name(domain, index),
    }
}

/// Draws a graph from `spec`. Identical specs give identical triples.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticGraph, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);

    // Value popularity per (attribute, pool). Mild skew keeps every value
    // common enough that a sample of one domain sees all of them.
    let pools_per_attr = |a: &AttributeSpec| match a.scope {
        Scope::Domain | Scope::Members => spec.domains,
        Scope::Global => 1,
    };
    let popularity: Vec<Vec<Vec<f64>>> = spec
        .attributes
        .iter()
        .map(|a| {
            (0..pools_per_attr(a))
                .map(|_| (0..a.pool).map(|_| rng.random_range(1.0..1.5)).collect())
                .collect()
        })
        .collect();

    let mut query_idx: Vec<usize> =
        rand::seq::index::sample(&mut rng, spec.entities_per_domain, spec.query_size).into_vec();
    query_idx.sort_unstable();
    let query: Vec<String> = query_idx.iter().map(|&i| entity_name(spec.query_domain, i)).collect();

    let mut triples = Vec::new();
    for d in 0..spec.domains {
        for e in 0..spec.entities_per_domain {
            let subject = entity_name(d, e);
            let member = if d == spec.query_domain {
                query_idx.iter().position(|&i| i == e)
            } else {
                None
            };
            for (ai, a) in spec.attributes.iter().enumerate() {
                if a.domains.as_ref().is_some_and(|ds| !ds.contains(&d)) {
                    continue;
                }
                let pool = match a.scope {
                    Scope::Domain | Scope::Members => d,
                    Scope::Global => 0,
                };
                let weights = &popularity[ai][pool];
                // Nobody is their own value.
                let own = (a.scope == Scope::Members).then_some(e);
                let n = rng.random_range(a.min..=a.max);
                let mut picked: Vec<usize> =
                    sample_weighted(&mut rng, a.pool, |i| if Some(i) == own { 0.0 } else { weights[i] }, n)
                    .expect("positive weights")
                    .into_vec();
                picked.sort_unstable();

                let anomaly = member.and_then(|m| {
                    spec.anomalies
                        .iter()
                        .find(|an| an.query_member == m && an.label == a.label)
                });
                match anomaly.map(|an| an.kind) {
                    Some(AnomalyKind::Missing) => {}
                    Some(AnomalyKind::Divergent) => {
                        triples.push(Triple::new(&subject, &a.label, format!("anomalous_{}_{}", a.label, e)));
                    }
                    None => {
                        for v in picked {
                            triples.push(Triple::new(&subject, &a.label, value_name(a, d, v)));
                        }
                    }
                }
            }
        }
    }

    for a in &spec.attributes {
        let Some(predicate) = &a.value_class else { continue };
        if a.scope == Scope::Members {
            continue;
        }
        let class = format!("{}_class", a.label);
        for pool in 0..pools_per_attr(a) {
            for v in 0..a.pool {
                triples.push(Triple::new(value_name(a, pool, v), predicate, &class));
            }
        }
    }

    let query_set: BTreeSet<&String> = query.iter().collect();
    let relevant: BTreeSet<String> = (0..spec.entities_per_domain)
        .map(|e| entity_name(spec.query_domain, e))
        .filter(|n| !query_set.contains(n))
        .collect();
    Ok(SyntheticGraph {
        triples,
        truth: GroundTruth { query, relevant },
        planted: spec.anomalies.iter().map(|a| a.label.clone()).collect(),
    })
}
