//! Textbook Exp3: multiplicative weights `w^a <- w^a exp(-eta * estimate^a)`
//! over importance-weighted loss estimates, kept in log domain. No
//! learning-rate truncation; feedback that arrives late is applied when it
//! arrives.

use crate::error::{Error, Result};
use crate::learner::Learner;
use crate::types::{softmax, FeedbackEvent};

#[derive(Debug, Clone)]
pub struct Exp3 {
    eta: f64,
    log_weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Exp3 {
    pub fn new(arms: usize, eta: f64) -> Result<Self> {
        if arms < 2 {
            return Err(Error::Config(format!("need at least 2 arms, got {arms}")));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {eta}")));
        }
        Ok(Self {
            eta,
            log_weights: vec![0.0; arms],
            cumulative: vec![0.0; arms],
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Estimated cumulative loss of each arm.
    pub fn cumulative_estimates(&self) -> &[f64] {
        &self.cumulative
    }
}

impl Learner for Exp3 {
    fn arms(&self) -> usize {
        self.cumulative.len()
    }

    fn predict(&self) -> Vec<f64> {
        softmax(&self.log_weights)
    }

    fn observe(&mut self, event: &FeedbackEvent, p_at_play: &[f64]) -> Result<()> {
        let p = p_at_play
            .get(event.arm)
            .copied()
            .filter(|p| *p > 0.0)
            .ok_or_else(|| Error::Protocol(format!("no sampling probability for round {}", event.origin)))?;
        let estimate = event.loss / p;
        self.cumulative[event.arm] += estimate;
        self.log_weights[event.arm] -= self.eta * estimate;
        Ok(())
    }
}
