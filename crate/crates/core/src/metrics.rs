//! Regret statistics, delay statistics and regret-bound evaluators.

use std::collections::BTreeMap;
use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::env::RunRecord;
use crate::error::{Error, Result};

/// Skip statistics of a delay sequence at threshold `β`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayStats {
    /// `|S_β|`: rounds with `d_t >= β`.
    pub skipped: u64,
    /// `D_β`: total delay of rounds with `d_t < β`.
    pub experienced: u64,
    /// `D`: total delay.
    pub total: u64,
}

pub fn delay_stats(delays: &[u64], beta: f64) -> DelayStats {
    let mut stats = DelayStats {
        skipped: 0,
        experienced: 0,
        total: 0,
    };
    for &d in delays {
        stats.total += d;
        if d as f64 >= beta {
            stats.skipped += 1;
        } else {
            stats.experienced += d;
        }
    }
    stats
}

/// `β |S_β| <= D`: every skipped round contributes at least `β` to `D`.
pub fn skip_count_within_budget(delays: &[u64], beta: f64) -> bool {
    let s = delay_stats(delays, beta);
    s.skipped as f64 * beta <= s.total as f64
}

/// Stability span of every round: the number of feedback arrivals in
/// `[t, t + d_t)`, i.e. between playing round `t` and observing it.
pub fn stability_spans(delays: &[u64]) -> Vec<usize> {
    let horizon = delays.len();
    let mut arrivals = vec![0usize; horizon + 2];
    for (i, &d) in delays.iter().enumerate() {
        let arrival = i + 1 + d as usize;
        if arrival <= horizon {
            arrivals[arrival] += 1;
        }
    }
    // prefix[r] = arrivals at rounds 1..=r
    let mut prefix = vec![0usize; horizon + 2];
    for r in 1..=horizon + 1 {
        prefix[r] = prefix[r - 1] + arrivals[r];
    }
    delays
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let t = i + 1;
            let end = (t + d as usize - 1).min(horizon);
            if d == 0 {
                0
            } else {
                prefix[end] - prefix[t - 1]
            }
        })
        .collect()
}

fn check_game(arms: usize, horizon: usize) -> Result<()> {
    if arms < 2 {
        return Err(Error::Config(format!("need at least 2 arms, got {arms}")));
    }
    if horizon == 0 {
        return Err(Error::Config("horizon must be positive".into()));
    }
    Ok(())
}

/// `η = √(ln K / (K T e / 2 + D))`.
pub fn theorem1_eta(arms: usize, horizon: usize, total_delay: f64) -> f64 {
    let k = arms as f64;
    (k.ln() / (k * horizon as f64 * E / 2.0 + total_delay)).sqrt()
}

/// `2 √((K T e / 2 + D) ln K)`.
pub fn theorem1_bound(arms: usize, horizon: usize, total_delay: f64) -> f64 {
    let k = arms as f64;
    2.0 * ((k * horizon as f64 * E / 2.0 + total_delay) * k.ln()).sqrt()
}

/// Skipping threshold tuned with known `T` and `D`:
/// `β = √( ((e K T / 2 + D) / (4e) + D) / (4e ln K) )`.
pub fn corollary_beta(arms: usize, horizon: usize, total_delay: f64) -> f64 {
    let k = arms as f64;
    let inner = (E * k * horizon as f64 / 2.0 + total_delay) / (4.0 * E) + total_delay;
    (inner / (4.0 * E * k.ln())).sqrt()
}

/// `2 √((K T e / 2 + (1 + 4e) D) ln K)`.
pub fn corollary_bound(arms: usize, horizon: usize, total_delay: f64) -> f64 {
    let k = arms as f64;
    2.0 * ((k * horizon as f64 * E / 2.0 + (1.0 + 4.0 * E) * total_delay) * k.ln()).sqrt()
}

/// Objective minimized by the oracle bound:
/// `|S_β| + 4e β ln K + (K T + D_β) / (4e β)`.
pub fn oracle_objective(delays: &[u64], arms: usize, horizon: usize, beta: f64) -> f64 {
    let s = delay_stats(delays, beta);
    segment_value(s.skipped as f64, s.experienced as f64, arms, horizon, beta)
}

fn segment_value(skipped: f64, experienced: f64, arms: usize, horizon: usize, beta: f64) -> f64 {
    let k = arms as f64;
    skipped + 4.0 * E * beta * k.ln() + (k * horizon as f64 + experienced) / (4.0 * E * beta)
}

/// Minimum of the oracle objective over `β > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleBound {
    pub value: f64,
    pub beta: f64,
}

/// Exact minimum of [`oracle_objective`] over `β > 0`.
///
/// `|S_β|` and `D_β` only change at the distinct positive delay values
/// `u_1 < … < u_r`. On `(u_j, u_{j+1}]` the objective is
/// `c₀ + 4e ln K β + c₁ / (4e β)`, convex with unconstrained minimizer
/// `√(c₁ / (16 e² ln K))`; the segment minimum is that point clamped into the
/// segment. A segment is open on the left, so when its minimum sits on the
/// left end the infimum is not attained; the returned `beta` is then the
/// next float above that end and `value` the limit from the right.
/// Ties go to the smaller `β`.
pub fn oracle_bound(delays: &[u64], arms: usize, horizon: usize) -> Result<OracleBound> {
    check_game(arms, horizon)?;
    let k = arms as f64;
    let slope = 4.0 * E * k.ln();

    let mut distinct: Vec<(u64, u64)> = Vec::new();
    let mut sorted: Vec<u64> = delays.iter().copied().filter(|&d| d > 0).collect();
    sorted.sort_unstable();
    for d in sorted {
        match distinct.last_mut() {
            Some((v, n)) if *v == d => *n += 1,
            _ => distinct.push((d, 1)),
        }
    }

    let mut skipped = distinct.iter().map(|&(_, n)| n).sum::<u64>();
    let mut experienced = 0u64;
    let mut lower = 0.0f64;
    let mut best: Option<OracleBound> = None;

    for j in 0..=distinct.len() {
        let upper = distinct.get(j).map_or(f64::INFINITY, |&(v, _)| v as f64);
        let c1 = k * horizon as f64 + experienced as f64;
        let vertex = (c1 / (4.0 * E * slope)).sqrt();
        let (beta, value) = if vertex > lower && vertex <= upper {
            (vertex, skipped as f64 + 2.0 * (slope * c1 / (4.0 * E)).sqrt())
        } else if vertex <= lower {
            let limit = segment_value(skipped as f64, experienced as f64, arms, horizon, lower);
            (next_up(lower), limit)
        } else {
            (
                upper,
                segment_value(skipped as f64, experienced as f64, arms, horizon, upper),
            )
        };
        if best.is_none_or(|b| value < b.value) {
            best = Some(OracleBound { value, beta });
        }
        if let Some(&(v, n)) = distinct.get(j) {
            skipped -= n;
            experienced += v * n;
            lower = v as f64;
        }
    }
    Ok(best.expect("at least one segment"))
}

fn next_up(x: f64) -> f64 {
    debug_assert!(x > 0.0 && x.is_finite());
    f64::from_bits(x.to_bits() + 1)
}

/// Oracle bound with its analysis constants:
/// `15 · oracle + 10 e² K ln K + 5`.
pub fn scaled_oracle_bound(oracle_value: f64, arms: usize) -> f64 {
    let k = arms as f64;
    15.0 * oracle_value + 10.0 * E * E * k * k.ln() + 5.0
}

/// Regret bounds for a game, echoed together with its inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub arms: usize,
    pub horizon: usize,
    #[serde(rename = "D")]
    pub total_delay: u64,
    pub theorem1: f64,
    pub corollary: f64,
    pub oracle: f64,
    pub oracle_beta: f64,
    /// Number of rounds per delay value.
    pub delay_histogram: BTreeMap<u64, u64>,
}

pub fn bound_report(delays: &[u64], arms: usize, horizon: usize) -> Result<BoundReport> {
    check_game(arms, horizon)?;
    let total: u64 = delays.iter().sum();
    let oracle = oracle_bound(delays, arms, horizon)?;
    let mut histogram = BTreeMap::new();
    for &d in delays {
        *histogram.entry(d).or_insert(0) += 1;
    }
    Ok(BoundReport {
        arms,
        horizon,
        total_delay: total,
        theorem1: theorem1_bound(arms, horizon, total as f64),
        corollary: corollary_bound(arms, horizon, total as f64),
        oracle: oracle.value,
        oracle_beta: oracle.beta,
        delay_histogram: histogram,
    })
}

/// Sample mean and standard error (unbiased variance) of a sample.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Mean regret over runs of the same scenario and its standard error.
pub fn empirical_regret(records: &[RunRecord]) -> Result<(f64, f64)> {
    let first = records
        .first()
        .ok_or_else(|| Error::Aggregation("no run records".into()))?;
    if let Some(other) = records.iter().find(|r| r.scenario != first.scenario) {
        return Err(Error::Aggregation(format!(
            "run with seed {} belongs to a different scenario than seed {}",
            other.seed, first.seed
        )));
    }
    let regrets: Vec<f64> = records.iter().map(|r| r.summary.regret).collect();
    Ok(mean_and_stderr(&regrets))
}
