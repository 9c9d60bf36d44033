//! Domain types shared across the learners and the simulator.
//!
//! Rounds are numbered from 1 wherever a round index crosses an API boundary
//! (`LossTable::loss`, `DelaySchedule::delay`, `FeedbackEvent::origin`).
//! Arms are numbered from 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Round number, starting at 1.
pub type Round = usize;

/// Arm index, starting at 0.
pub type Arm = usize;

/// Tolerance on the total mass of a probability vector.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

/// Oblivious loss sequences: a `horizon × arms` matrix with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTable {
    horizon: usize,
    arms: usize,
    losses: Vec<f64>,
}

impl LossTable {
    /// Builds a table from row-major losses (`losses[(t - 1) * arms + a]`).
    pub fn new(horizon: usize, arms: usize, losses: Vec<f64>) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Config("horizon must be positive".into()));
        }
        if arms < 2 {
            return Err(Error::Config(format!("need at least 2 arms, got {arms}")));
        }
        if losses.len() != horizon * arms {
            return Err(Error::Config(format!(
                "loss table has {} entries, expected {horizon}x{arms}",
                losses.len()
            )));
        }
        if let Some(pos) = losses.iter().position(|l| !(0.0..=1.0).contains(l)) {
            return Err(Error::Config(format!(
                "loss at round {}, arm {} is {} (outside [0, 1])",
                pos / arms + 1,
                pos % arms,
                losses[pos]
            )));
        }
        Ok(Self { horizon, arms, losses })
    }

    /// Builds a table from one row per round.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let arms = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != arms) {
            return Err(Error::Config("loss rows have differing lengths".into()));
        }
        Self::new(rows.len(), arms, rows.concat())
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    /// Loss of `arm` at 1-based `round`.
    pub fn loss(&self, round: Round, arm: Arm) -> f64 {
        self.losses[(round - 1) * self.arms + arm]
    }

    /// Row of losses at 1-based `round`.
    pub fn row(&self, round: Round) -> &[f64] {
        let start = (round - 1) * self.arms;
        &self.losses[start..start + self.arms]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.losses
    }

    /// Cumulative loss of every arm over the whole horizon.
    pub fn arm_totals(&self) -> Vec<f64> {
        let mut totals = vec![0.0; self.arms];
        for row in self.losses.chunks_exact(self.arms) {
            for (total, l) in totals.iter_mut().zip(row) {
                *total += l;
            }
        }
        totals
    }
}

/// When the learner gets to see the delay of a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Visibility {
    /// `d_t` is revealed at the start of round `t`, before the action is chosen.
    AtActionTime,
    /// `d_t` is only known once the feedback of round `t` arrives.
    AtObservationTime,
}

/// Oblivious delay sequence `d_1..d_T`, in rounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelaySchedule {
    delays: Vec<u64>,
    visibility: Visibility,
}

impl DelaySchedule {
    pub fn new(delays: Vec<u64>, visibility: Visibility) -> Self {
        Self { delays, visibility }
    }

    pub fn visibility(&self) -> Visibility {
        self.visibility
    }

    pub fn with_visibility(mut self, visibility: Visibility) -> Self {
        self.visibility = visibility;
        self
    }

    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    /// Delay of 1-based `round`.
    pub fn delay(&self, round: Round) -> u64 {
        self.delays[round - 1]
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.delays
    }

    /// Total delay `D`, counting every round whether or not its feedback lands
    /// inside the horizon.
    pub fn total(&self) -> u64 {
        self.delays.iter().sum()
    }

    pub fn max_delay(&self) -> u64 {
        self.delays.iter().copied().max().unwrap_or(0)
    }

    /// Checks that the schedule can be paired with `table`.
    pub fn check_pairing(&self, table: &LossTable) -> Result<()> {
        if self.delays.len() != table.horizon() {
            return Err(Error::Config(format!(
                "delay schedule has {} rounds but the loss table has {}",
                self.delays.len(),
                table.horizon()
            )));
        }
        Ok(())
    }
}

/// Feedback of round `origin`, observed at the end of round `arrival`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackEvent {
    pub origin: Round,
    pub arm: Arm,
    pub loss: f64,
    pub delay: u64,
    pub arrival: Round,
}

impl FeedbackEvent {
    pub fn new(origin: Round, arm: Arm, loss: f64, delay: u64) -> Self {
        Self {
            origin,
            arm,
            loss,
            delay,
            arrival: origin + delay as usize,
        }
    }

    /// Whether the event is observed within a game of `horizon` rounds.
    pub fn is_delivered_within(&self, horizon: usize) -> bool {
        self.arrival <= horizon
    }
}

/// Checks that `p` is a probability vector up to [`DISTRIBUTION_TOLERANCE`].
pub fn validate_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidDistribution("empty distribution".into()));
    }
    if let Some((a, v)) = p.iter().enumerate().find(|(_, v)| v.is_nan() || **v < 0.0) {
        return Err(Error::InvalidDistribution(format!("entry {a} is {v}")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
        return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
    }
    Ok(())
}

/// Inverse-CDF draw: the smallest arm whose cumulative probability exceeds `u`.
///
/// When rounding leaves the total mass a hair below `u`, the last arm with
/// positive probability is returned.
pub fn sample_arm(p: &[f64], u: f64) -> Result<Arm> {
    validate_distribution(p)?;
    if !(0.0..1.0).contains(&u) {
        return Err(Error::InvalidDistribution(format!("uniform draw {u} outside [0, 1)")));
    }
    let mut cumulative = 0.0;
    for (a, &pa) in p.iter().enumerate() {
        cumulative += pa;
        if cumulative > u {
            return Ok(a);
        }
    }
    Ok(p.iter().rposition(|&pa| pa > 0.0).unwrap_or(p.len() - 1))
}

/// Arm with the smallest cumulative loss; ties go to the lowest index.
pub fn best_arm(table: &LossTable) -> (Arm, f64) {
    table.arm_totals().into_iter().enumerate().fold(
        (0, f64::INFINITY),
        |best, (a, total)| if total < best.1 { (a, total) } else { best },
    )
}

/// Shifted softmax of log-weights: `exp(x_a - max x) / Σ_b exp(x_b - max x)`.
pub fn softmax(log_weights: &[f64]) -> Vec<f64> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = log_weights.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    p
}
