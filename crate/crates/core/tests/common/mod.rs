#![allow(dead_code)]

use std::f64::consts::E;

use delaybandit::{DelaySchedule, LossTable};

/// Objective `|S_β| + 4e β ln K + (KT + D_β) / (4e β)` evaluated by direct counting.
pub fn brute_objective(delays: &[u64], arms: usize, horizon: usize, beta: f64) -> f64 {
    let mut skipped = 0.0;
    let mut experienced = 0.0;
    for &d in delays {
        if d as f64 >= beta {
            skipped += 1.0;
        } else {
            experienced += d as f64;
        }
    }
    let k = arms as f64;
    skipped + 4.0 * E * beta * k.ln() + (k * horizon as f64 + experienced) / (4.0 * E * beta)
}

/// Minimum of the objective over the grid `step, 2 step, …, hi`.
pub fn grid_minimum(delays: &[u64], arms: usize, horizon: usize, step: f64, hi: f64) -> (f64, f64) {
    let n = (hi / step).round() as usize;
    (1..=n)
        .map(|i| {
            let beta = i as f64 * step;
            (brute_objective(delays, arms, horizon, beta), beta)
        })
        .fold(
            (f64::INFINITY, 0.0),
            |best, cur| if cur.0 < best.0 { cur } else { best },
        )
}

/// The game restricted to rounds with `d_t < β`.
///
/// A kept round `s` whose feedback arrives at original round `r` is
/// delivered in the restricted game at the end of the last kept round `<= r`,
/// which is when it would reach the base learner inside the full game.
pub fn restricted_game(
    losses: &LossTable,
    delays: &DelaySchedule,
    draws: &[f64],
    beta: f64,
) -> (Vec<usize>, LossTable, DelaySchedule, Vec<f64>) {
    let horizon = losses.horizon();
    let kept: Vec<usize> = (1..=horizon).filter(|&t| (delays.delay(t) as f64) < beta).collect();
    // kept_upto[r] = number of kept rounds <= r
    let mut kept_upto = vec![0usize; horizon + 1];
    for r in 1..=horizon {
        kept_upto[r] = kept_upto[r - 1] + usize::from((delays.delay(r) as f64) < beta);
    }
    let new_horizon = kept.len();
    let mut rows = Vec::new();
    let mut new_delays = Vec::new();
    let mut new_draws = Vec::new();
    for (j, &s) in kept.iter().enumerate() {
        let j = j + 1;
        rows.push(losses.row(s).to_vec());
        let arrival = s + delays.delay(s) as usize;
        let d = if arrival <= horizon {
            kept_upto[arrival] - j
        } else {
            new_horizon + 1 - j
        };
        new_delays.push(d as u64);
        new_draws.push(draws[s - 1]);
    }
    (
        kept,
        LossTable::from_rows(&rows).unwrap(),
        DelaySchedule::new(new_delays, delays.visibility()),
        new_draws,
    )
}

/// `β |S_β| <= D` at every distinct delay value, just above it, and a few
/// fractional thresholds.
pub fn assert_skip_inequality(delays: &[u64]) {
    let total: u64 = delays.iter().sum();
    let mut distinct: Vec<u64> = delays.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let mut betas: Vec<f64> = vec![0.25, 0.5, 1.0];
    betas.extend(distinct.iter().filter(|&&d| d > 0).map(|&d| d as f64));
    betas.extend(distinct.iter().map(|&d| d as f64 + 0.5));
    for beta in betas {
        let skipped = delays.iter().filter(|&&d| d as f64 >= beta).count() as f64;
        assert!(skipped <= total as f64 / beta + 1e-9, "|S_β| > D/β at β = {beta}");
        assert!(delaybandit::metrics::skip_count_within_budget(delays, beta));
    }
}
