//! Wrapper that withholds feedback with excessively large delays from a base
//! learner.
//!
//! Predictions pass through untouched. A feedback event is forwarded only if
//! its delay is strictly below the threshold; otherwise it is counted as
//! skipped and the base learner never sees it.

use crate::dew::DewLearner;
use crate::error::{Error, Result};
use crate::learner::Learner;
use crate::types::FeedbackEvent;

#[derive(Debug, Clone)]
pub struct Skipper<L> {
    threshold: f64,
    base: L,
    skipped: u64,
    forwarded: u64,
    forwarded_delay: u64,
}

impl<L: Learner> Skipper<L> {
    pub fn new(threshold: f64, base: L) -> Result<Self> {
        if threshold.is_nan() || threshold <= 0.0 {
            return Err(Error::Config(format!(
                "skipping threshold must be positive, got {threshold}"
            )));
        }
        Ok(Self {
            threshold,
            base,
            skipped: 0,
            forwarded: 0,
            forwarded_delay: 0,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn base(&self) -> &L {
        &self.base
    }

    pub fn into_base(self) -> L {
        self.base
    }

    /// `|S_β|` over the events seen so far.
    pub fn skipped_count(&self) -> u64 {
        self.skipped
    }

    pub fn forwarded_count(&self) -> u64 {
        self.forwarded
    }

    /// `D_β` over the events forwarded so far.
    pub fn forwarded_delay_sum(&self) -> u64 {
        self.forwarded_delay
    }

    /// Whether an event with this delay would be forwarded.
    pub fn forwards(&self, delay: u64) -> bool {
        (delay as f64) < self.threshold
    }

    pub fn predict(&self) -> Vec<f64> {
        self.base.predict()
    }

    pub fn observe(&mut self, event: &FeedbackEvent, p_at_play: &[f64]) -> Result<()> {
        if self.forwards(event.delay) {
            self.base.observe(event, p_at_play)?;
            self.forwarded += 1;
            self.forwarded_delay += event.delay;
        } else {
            self.skipped += 1;
        }
        Ok(())
    }
}

impl Skipper<DewLearner> {
    /// `Skipper(β, DEW(η, β))`: the wrapped learner's delay bound is the threshold.
    pub fn with_dew(arms: usize, threshold: f64, eta: f64) -> Result<Self> {
        Self::new(threshold, DewLearner::new(arms, eta, threshold)?)
    }
}

impl<L: Learner> Learner for Skipper<L> {
    fn arms(&self) -> usize {
        self.base.arms()
    }

    fn predict(&self) -> Vec<f64> {
        Skipper::predict(self)
    }

    fn observe(&mut self, event: &FeedbackEvent, p_at_play: &[f64]) -> Result<()> {
        Skipper::observe(self, event, p_at_play)
    }

    fn skip_threshold(&self) -> Option<f64> {
        Some(self.threshold)
    }
}
