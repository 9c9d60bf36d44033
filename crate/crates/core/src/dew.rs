//! Delayed exponential weights.
//!
//! Each arriving feedback event triggers one importance-weighted
//! multiplicative update, so zero, one or several updates may happen between
//! two predictions. The learning rate is truncated to `1 / (4e * d_max)`.

use std::f64::consts::E;

use crate::error::{Error, Result};
use crate::learner::Learner;
use crate::types::{softmax, Arm, FeedbackEvent};

/// Absolute slack allowed by the drift checks.
pub const DRIFT_SLACK: f64 = 1e-12;

/// `min{eta, 1 / (4e * d_max)}`.
pub fn truncated_learning_rate(eta: f64, delay_bound: f64) -> f64 {
    eta.min(1.0 / (4.0 * E * delay_bound))
}

/// Importance-weighted estimate `loss * 1(arm == played) / p_at_play`.
pub fn loss_estimate(loss: f64, arm_played: Arm, arm: Arm, p_at_play: f64) -> Result<f64> {
    if p_at_play.is_nan() || p_at_play <= 0.0 {
        return Err(Error::Invariant(format!(
            "sampling probability {p_at_play} of played arm {arm_played} is not positive"
        )));
    }
    Ok(if arm == arm_played { loss / p_at_play } else { 0.0 })
}

/// Parameters and log-weights of a delayed exponential-weights learner.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    /// Natural log of the weights `w^a`.
    pub log_weights: Vec<f64>,
    pub eta_input: f64,
    pub eta_effective: f64,
    pub delay_bound: f64,
}

/// Per-update record of how far the induced distribution moved.
///
/// For every single-event update with distributions `before` and `after`:
/// the upper check is `after[a] <= (1 + 1/(2N - 1)) * before[a]` with
/// `N = max(2 * d_max, 1)`, the lower check is
/// `after[a] - before[a] >= -eta' * estimate[a] * before[a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftStats {
    pub updates: u64,
    pub upper_violations: u64,
    pub lower_violations: u64,
    /// Largest observed `after[a] / before[a]`.
    pub max_ratio: f64,
    /// Allowed ratio `1 + 1/(2N - 1)`.
    pub ratio_bound: f64,
    /// Smallest observed `(after[a] - before[a]) + eta' * estimate[a] * before[a]`.
    pub min_lower_slack: f64,
}

impl DriftStats {
    fn new(delay_bound: f64) -> Self {
        let span = (2.0 * delay_bound).max(1.0);
        Self {
            updates: 0,
            upper_violations: 0,
            lower_violations: 0,
            max_ratio: 0.0,
            ratio_bound: 1.0 + 1.0 / (2.0 * span - 1.0),
            min_lower_slack: f64::INFINITY,
        }
    }

    pub fn violations(&self) -> u64 {
        self.upper_violations + self.lower_violations
    }

    fn record(&mut self, before: &[f64], after: &[f64], arm: Arm, estimate: f64, eta: f64) {
        self.updates += 1;
        for (a, (&b, &q)) in before.iter().zip(after).enumerate() {
            if b > 0.0 {
                self.max_ratio = self.max_ratio.max(q / b);
            }
            if q > self.ratio_bound * b + DRIFT_SLACK {
                self.upper_violations += 1;
            }
            let est = if a == arm { estimate } else { 0.0 };
            let slack = (q - b) + eta * est * b;
            self.min_lower_slack = self.min_lower_slack.min(slack);
            if slack < -DRIFT_SLACK {
                self.lower_violations += 1;
            }
        }
    }
}

/// Delayed exponential-weights learner.
#[derive(Debug, Clone)]
pub struct DewLearner {
    state: LearnerState,
    updates: u64,
    bound_exceedances: u64,
    drift: Option<DriftStats>,
}

impl DewLearner {
    /// `eta` is the requested learning rate, `delay_bound` an upper bound on
    /// the delays this learner will be fed (it may be fractional).
    pub fn new(arms: usize, eta: f64, delay_bound: f64) -> Result<Self> {
        if arms < 2 {
            return Err(Error::Config(format!("need at least 2 arms, got {arms}")));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {eta}")));
        }
        if !(delay_bound > 0.0 && delay_bound.is_finite()) {
            return Err(Error::Config(format!(
                "delay bound must be positive, got {delay_bound}"
            )));
        }
        Ok(Self {
            state: LearnerState {
                log_weights: vec![0.0; arms],
                eta_input: eta,
                eta_effective: truncated_learning_rate(eta, delay_bound),
                delay_bound,
            },
            updates: 0,
            bound_exceedances: 0,
            drift: None,
        })
    }

    /// Turns on per-update drift diagnostics. Each update then costs two
    /// extra softmax evaluations.
    pub fn with_drift_monitor(mut self) -> Self {
        self.drift = Some(DriftStats::new(self.state.delay_bound));
        self
    }

    pub fn state(&self) -> &LearnerState {
        &self.state
    }

    pub fn eta_effective(&self) -> f64 {
        self.state.eta_effective
    }

    pub fn delay_bound(&self) -> f64 {
        self.state.delay_bound
    }

    /// Number of feedback events applied so far.
    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Events received whose delay exceeded the configured bound.
    pub fn bound_exceedances(&self) -> u64 {
        self.bound_exceedances
    }

    pub fn drift_stats(&self) -> Option<&DriftStats> {
        self.drift.as_ref()
    }

    /// Shifts the log-weights so that their maximum is 0.
    pub fn renormalize(&mut self) {
        let max = self.state.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.state.log_weights.iter_mut().for_each(|w| *w -= max);
    }

    pub fn predict(&self) -> Vec<f64> {
        softmax(&self.state.log_weights)
    }

    pub fn observe_feedback(&mut self, event: &FeedbackEvent, p_at_play: &[f64]) -> Result<()> {
        let arms = self.state.log_weights.len();
        if p_at_play.len() != arms {
            return Err(Error::Protocol(format!(
                "stored distribution for round {} has {} entries, expected {arms}",
                event.origin,
                p_at_play.len()
            )));
        }
        if event.arm >= arms {
            return Err(Error::Protocol(format!("arm {} out of range", event.arm)));
        }
        if !(0.0..=1.0).contains(&event.loss) {
            return Err(Error::Protocol(format!("loss {} outside [0, 1]", event.loss)));
        }
        if p_at_play[event.arm].is_nan() || p_at_play[event.arm] <= 0.0 {
            return Err(Error::Protocol(format!(
                "stored distribution for round {} gives arm {} no mass",
                event.origin, event.arm
            )));
        }
        if event.delay as f64 > self.state.delay_bound {
            self.bound_exceedances += 1;
        }

        let estimate = loss_estimate(event.loss, event.arm, event.arm, p_at_play[event.arm])?;
        let before = self.drift.is_some().then(|| self.predict());
        self.state.log_weights[event.arm] -= self.state.eta_effective * estimate;
        self.updates += 1;

        if let Some(before) = before {
            let after = self.predict();
            let eta = self.state.eta_effective;
            if let Some(stats) = self.drift.as_mut() {
                stats.record(&before, &after, event.arm, estimate, eta);
            }
        }
        Ok(())
    }
}

impl Learner for DewLearner {
    fn arms(&self) -> usize {
        self.state.log_weights.len()
    }

    fn predict(&self) -> Vec<f64> {
        DewLearner::predict(self)
    }

    fn observe(&mut self, event: &FeedbackEvent, p_at_play: &[f64]) -> Result<()> {
        self.observe_feedback(event, p_at_play)
    }
}
