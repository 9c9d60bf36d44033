//! Epoch-doubling tuner for the setting where each round's delay is revealed
//! before the action is chosen.
//!
//! Epoch `m` has budget `ω_m = 2^m`, skipping threshold
//! `β_m = √ω_m / (4e ln K)` and learning rate `η_m = 1 / (4e β_m)`. The epoch
//! lasts while
//!
//! ```text
//! max{ |S^m|², (e K σ(m) / 2 + D^m) ln K } <= ω_m
//! ```
//!
//! where `σ(m)` is the epoch length, `|S^m|` the number of rounds of the
//! epoch with `d_t >= β_m` and `D^m` the total delay of the others. The
//! condition is evaluated with the incoming round already counted; when it
//! fails the controller moves to the next epoch and restarts
//! `Skipper(β_m, DEW(η_m, β_m))` from scratch.

use std::f64::consts::E;

use crate::dew::DewLearner;
use crate::error::{Error, Result};
use crate::skipper::Skipper;
use crate::types::{FeedbackEvent, Visibility};

/// Epochs are numbered from 1.
pub const FIRST_EPOCH: u32 = 1;

/// `β_m = √(2^m) / (4e ln K)`.
pub fn epoch_threshold(epoch: u32, arms: usize) -> Result<f64> {
    if arms < 2 {
        return Err(Error::Config(format!("need at least 2 arms, got {arms}")));
    }
    Ok(epoch_budget(epoch).sqrt() / (4.0 * E * (arms as f64).ln()))
}

/// `ω_m = 2^m`.
pub fn epoch_budget(epoch: u32) -> f64 {
    2f64.powi(epoch as i32)
}

/// `η_m = 1 / (4e β_m)`.
pub fn epoch_learning_rate(threshold: f64) -> f64 {
    1.0 / (4.0 * E * threshold)
}

/// Left-hand side of the stay-in-epoch condition.
pub fn condition_lhs(length: u64, skipped: u64, delay: u64, arms: usize) -> f64 {
    let skipped = skipped as f64;
    let load = (E * arms as f64 * length as f64 / 2.0 + delay as f64) * (arms as f64).ln();
    (skipped * skipped).max(load)
}

/// Per-epoch accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochState {
    pub epoch: u32,
    pub budget: f64,
    pub threshold: f64,
    /// `σ(m)`: rounds played in this epoch.
    pub length: u64,
    /// `|S^m|`: rounds of this epoch with delay at or above the threshold.
    pub skipped: u64,
    /// `D^m`: total delay of the rounds of this epoch below the threshold.
    pub experienced_delay: u64,
}

impl EpochState {
    fn start(epoch: u32, arms: usize) -> Result<Self> {
        Ok(Self {
            epoch,
            budget: epoch_budget(epoch),
            threshold: epoch_threshold(epoch, arms)?,
            length: 0,
            skipped: 0,
            experienced_delay: 0,
        })
    }

    fn add_round(&mut self, delay: u64) {
        self.length += 1;
        if delay as f64 >= self.threshold {
            self.skipped += 1;
        } else {
            self.experienced_delay += delay;
        }
    }

    fn remove_round(&mut self, delay: u64) {
        self.length -= 1;
        if delay as f64 >= self.threshold {
            self.skipped -= 1;
        } else {
            self.experienced_delay -= delay;
        }
    }

    pub fn lhs(&self, arms: usize) -> f64 {
        condition_lhs(self.length, self.skipped, self.experienced_delay, arms)
    }

    pub fn holds(&self, arms: usize) -> bool {
        self.lhs(arms) <= self.budget
    }
}

/// Outcome of [`DoublingController::begin_round`].
#[derive(Debug, Clone, PartialEq)]
pub struct RoundStart {
    pub probabilities: Vec<f64>,
    /// Epoch increments taken before this round's action.
    pub transitions: u32,
}

#[derive(Debug, Clone)]
pub struct DoublingController {
    arms: usize,
    state: EpochState,
    inner: Skipper<DewLearner>,
    rounds: u64,
    transitions: u64,
    discarded: u64,
    skipped_total: u64,
    experienced_total: u64,
}

impl DoublingController {
    /// Fails with a mode error unless delays are visible at action time.
    pub fn new(arms: usize, visibility: Visibility) -> Result<Self> {
        if visibility != Visibility::AtActionTime {
            return Err(Error::Mode("doubling needs delays revealed at action time".into()));
        }
        let state = EpochState::start(FIRST_EPOCH, arms)?;
        let inner = Self::fresh_inner(arms, &state)?;
        Ok(Self {
            arms,
            state,
            inner,
            rounds: 0,
            transitions: 0,
            discarded: 0,
            skipped_total: 0,
            experienced_total: 0,
        })
    }

    fn fresh_inner(arms: usize, state: &EpochState) -> Result<Skipper<DewLearner>> {
        Skipper::with_dew(arms, state.threshold, epoch_learning_rate(state.threshold))
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn epoch(&self) -> u32 {
        self.state.epoch
    }

    pub fn epoch_state(&self) -> &EpochState {
        &self.state
    }

    pub fn inner(&self) -> &Skipper<DewLearner> {
        &self.inner
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    /// Total number of epoch increments so far.
    pub fn transitions(&self) -> u64 {
        self.transitions
    }

    /// Feedback events dropped because they originated in an earlier epoch.
    pub fn discarded_events(&self) -> u64 {
        self.discarded
    }

    /// Rounds classified as skipped, summed over all epochs.
    pub fn skipped_rounds(&self) -> u64 {
        self.skipped_total + self.state.skipped
    }

    /// Delay of non-skipped rounds, summed over all epochs.
    pub fn experienced_delay(&self) -> u64 {
        self.experienced_total + self.state.experienced_delay
    }

    /// Accounts for the delay revealed at the start of a round, moving to
    /// later epochs as long as the condition fails, and returns the
    /// distribution to draw this round's action from.
    ///
    /// `revealed_delay` is `None` when the delay is not visible at action
    /// time, which is a mode error.
    pub fn begin_round(&mut self, revealed_delay: Option<u64>) -> Result<RoundStart> {
        let delay =
            revealed_delay.ok_or_else(|| Error::Mode("doubling needs delays revealed at action time".into()))?;
        let mut transitions = 0;
        self.state.add_round(delay);
        while !self.state.holds(self.arms) {
            self.state.remove_round(delay);
            self.advance()?;
            transitions += 1;
            self.state.add_round(delay);
        }
        self.rounds += 1;
        Ok(RoundStart {
            probabilities: self.inner.predict(),
            transitions,
        })
    }

    fn advance(&mut self) -> Result<()> {
        let next = self
            .state
            .epoch
            .checked_add(1)
            .filter(|m| *m < 1024)
            .ok_or_else(|| Error::Invariant("epoch index overflow".into()))?;
        self.skipped_total += self.state.skipped;
        self.experienced_total += self.state.experienced_delay;
        self.state = EpochState::start(next, self.arms)?;
        self.inner = Self::fresh_inner(self.arms, &self.state)?;
        self.transitions += 1;
        Ok(())
    }

    /// Feeds one event to the current epoch's learner, or drops it if it was
    /// played in an earlier epoch.
    pub fn observe(&mut self, event: &FeedbackEvent, p_at_play: &[f64], origin_epoch: u32) -> Result<()> {
        if origin_epoch == self.state.epoch {
            self.inner.observe(event, p_at_play)
        } else if origin_epoch < self.state.epoch {
            self.discarded += 1;
            Ok(())
        } else {
            Err(Error::Protocol(format!(
                "event from epoch {origin_epoch} delivered during epoch {}",
                self.state.epoch
            )))
        }
    }

    /// Processes every event arriving at the end of the current round.
    pub fn end_round_feedback<'a, I>(&mut self, events: I) -> Result<()>
    where
        I: IntoIterator<Item = (&'a FeedbackEvent, &'a [f64], u32)>,
    {
        events
            .into_iter()
            .try_for_each(|(event, p, epoch)| self.observe(event, p, epoch))
    }
}
