//! Exact multinomial goodness-of-fit test with a Monte Carlo fallback.
//!
//! The significance of an observed count vector `x` under `Mult(N, π)` is the
//! total probability of every outcome that is no more likely than `x`.
//! All probabilities are handled in log space.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;
use statrs::function::factorial::ln_factorial;

use super::StatsError;

/// Two outcomes whose log-probabilities differ by less than this are treated
/// as equally likely.
pub const LOG_TIE_TOLERANCE: f64 = 1e-12;

const SUM_TOLERANCE: f64 = 1e-12;

/// Which computation produced a significance value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Significance {
    pub p_value: f64,
    pub method: Method,
}

/// Settings for [`significance`] and [`mt`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestSettings {
    pub alpha: f64,
    /// Largest outcome count enumerated exactly.
    pub exact_budget: u64,
    pub mc_samples: u64,
    pub rng_seed: u64,
}

impl Default for TestSettings {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            exact_budget: 1_000_000,
            mc_samples: 100_000,
            rng_seed: 0,
        }
    }
}

/// Turns counts into probabilities.
pub fn normalize(counts: &[u64]) -> Result<Vec<f64>, StatsError> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(StatsError::ZeroTotal);
    }
    let t = total as f64;
    Ok(counts.iter().map(|&c| c as f64 / t).collect())
}

fn validate(probs: &[f64], counts: &[u64]) -> Result<u64, StatsError> {
    if probs.len() != counts.len() {
        return Err(StatsError::DimensionMismatch {
            probs: probs.len(),
            counts: counts.len(),
        });
    }
    if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(StatsError::InvalidProbability);
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(StatsError::NotNormalized(sum));
    }
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(StatsError::EmptySample);
    }
    Ok(n)
}

/// ln Pr(X = x); `-inf` when some category with probability 0 is observed.
fn ln_probability(probs: &[f64], counts: &[u64], n: u64) -> f64 {
    let mut lp = ln_factorial(n);
    for (&p, &x) in probs.iter().zip(counts) {
        if x == 0 {
            continue;
        }
        if p == 0.0 {
            return f64::NEG_INFINITY;
        }
        lp += x as f64 * p.ln() - ln_factorial(x);
    }
    lp
}

/// `N! · Π π_i^{x_i} / x_i!` with `0⁰ = 1`.
pub fn multinomial_point_probability(probs: &[f64], counts: &[u64]) -> Result<f64, StatsError> {
    let n = validate(probs, counts)?;
    Ok(ln_probability(probs, counts, n).exp())
}

/// C(n + k - 1, k - 1), saturating at `u64::MAX`.
pub fn outcome_count(n: u64, k: usize) -> u64 {
    if k == 0 {
        return 0;
    }
    let r = (k - 1) as u128;
    let total = n as u128 + r;
    let r = r.min(n as u128);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (total - i) / (i + 1);
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Drops categories with zero probability. Valid only when the observation
/// has no mass there, since every outcome touching them has probability 0.
fn support(probs: &[f64], counts: &[u64]) -> (Vec<f64>, Vec<u64>) {
    probs
        .iter()
        .zip(counts)
        .filter(|(&p, _)| p > 0.0)
        .map(|(&p, &x)| (p, x))
        .unzip()
}

/// Exact significance by enumerating all outcomes. Fails with
/// [`StatsError::BudgetExceeded`] when there are more than `budget` of them.
pub fn exact_significance(probs: &[f64], counts: &[u64], budget: u64) -> Result<f64, StatsError> {
    let n = validate(probs, counts)?;
    let lp_obs = ln_probability(probs, counts, n);
    if lp_obs == f64::NEG_INFINITY {
        // Only zero-probability outcomes are as unlikely as x.
        return Ok(0.0);
    }
    let (p, _) = support(probs, counts);
    let outcomes = outcome_count(n, p.len());
    if outcomes > budget {
        return Err(StatsError::BudgetExceeded { outcomes, budget });
    }

    let nn = n as usize;
    let ln_fact: Vec<f64> = (0..=n).map(ln_factorial).collect();
    // term[i][y] = y·ln π_i − ln y!
    let terms: Vec<Vec<f64>> = p
        .iter()
        .map(|&pi| {
            let lpi = pi.ln();
            (0..=nn).map(|y| y as f64 * lpi - ln_fact[y]).collect()
        })
        .collect();

    let threshold = lp_obs + LOG_TIE_TOLERANCE;
    let mut total = 0.0;
    enumerate(&terms, 0, nn, ln_fact[nn], &mut |lp| {
        if lp <= threshold {
            total += lp.exp();
        }
    });
    Ok(total.min(1.0))
}

fn enumerate<F: FnMut(f64)>(terms: &[Vec<f64>], i: usize, remaining: usize, acc: f64, visit: &mut F) {
    if i + 1 == terms.len() {
        visit(acc + terms[i][remaining]);
        return;
    }
    for y in 0..=remaining {
        enumerate(terms, i + 1, remaining - y, acc + terms[i][y], visit);
    }
}

/// Monte Carlo estimate `(1 + #{y : Pr(y) ≤ Pr(x)}) / (samples + 1)` over
/// `samples` draws from `Mult(N, π)`.
pub fn montecarlo_significance(probs: &[f64], counts: &[u64], samples: u64, rng_seed: u64) -> Result<f64, StatsError> {
    let n = validate(probs, counts)?;
    if samples == 0 {
        return Err(StatsError::NoSamples);
    }
    let lp_obs = ln_probability(probs, counts, n);
    let threshold = lp_obs + LOG_TIE_TOLERANCE;
    let (p, _) = support(probs, counts);

    // Conditional probabilities for sequential binomial sampling.
    let mut tail = 1.0;
    let conditional: Vec<f64> = p
        .iter()
        .map(|&pi| {
            let c = if tail > 0.0 { (pi / tail).clamp(0.0, 1.0) } else { 1.0 };
            tail -= pi;
            c
        })
        .collect();
    let ln_fact: Vec<f64> = (0..=n).map(ln_factorial).collect();
    let ln_p: Vec<f64> = p.iter().map(|x| x.ln()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut draw = vec![0u64; p.len()];
    let mut hits: u64 = 0;
    for _ in 0..samples {
        let mut remaining = n;
        let last = p.len() - 1;
        for (i, slot) in draw.iter_mut().enumerate() {
            *slot = if remaining == 0 {
                0
            } else if i == last {
                remaining
            } else {
                let y = Binomial::new(remaining, conditional[i])
                    .map_err(|_| StatsError::InvalidProbability)?
                    .sample(&mut rng);
                y.min(remaining)
            };
            remaining -= *slot;
        }
        let lp = ln_fact[n as usize]
            + draw
                .iter()
                .zip(&ln_p)
                .map(|(&y, &lp)| if y == 0 { 0.0 } else { y as f64 * lp - ln_fact[y as usize] })
                .sum::<f64>();
        if lp <= threshold {
            hits += 1;
        }
    }
    Ok((1 + hits) as f64 / (samples + 1) as f64)
}

/// Exact significance when affordable, Monte Carlo otherwise. Observations
/// with zero probability always take the exact path (significance 0).
pub fn significance(probs: &[f64], counts: &[u64], settings: &TestSettings) -> Result<Significance, StatsError> {
    match exact_significance(probs, counts, settings.exact_budget) {
        Ok(p_value) => Ok(Significance {
            p_value,
            method: Method::Exact,
        }),
        Err(StatsError::BudgetExceeded { .. }) => {
            let p_value = montecarlo_significance(probs, counts, settings.mc_samples, settings.rng_seed)?;
            Ok(Significance {
                p_value,
                method: Method::MonteCarlo,
            })
        }
        Err(e) => Err(e),
    }
}

/// Test score: `1 - Pr_s` when `Pr_s ≤ α`, else 0. The comparison allows
/// the same relative slack as tie detection, so a p-value that equals α up
/// to rounding still rejects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MtOutcome {
    pub score: f64,
    pub significance: Significance,
}

pub fn mt(probs: &[f64], counts: &[u64], settings: &TestSettings) -> Result<MtOutcome, StatsError> {
    let significance = significance(probs, counts, settings)?;
    let score = if significance.p_value <= settings.alpha * (1.0 + LOG_TIE_TOLERANCE) {
        1.0 - significance.p_value
    } else {
        0.0
    };
    Ok(MtOutcome { score, significance })
}
