use crate::error::Result;
use crate::types::FeedbackEvent;

/// A bandit learner that predicts from its current state and is updated one
/// feedback event at a time.
pub trait Learner {
    fn arms(&self) -> usize;

    /// Distribution over arms for the next draw. Must not change state.
    fn predict(&self) -> Vec<f64>;

    /// Applies one feedback event. `p_at_play` is the distribution the
    /// event's arm was drawn from at its origin round.
    fn observe(&mut self, event: &FeedbackEvent, p_at_play: &[f64]) -> Result<()>;

    /// Delay threshold at or above which feedback is ignored, if any.
    fn skip_threshold(&self) -> Option<f64> {
        None
    }
}

impl<L: Learner + ?Sized> Learner for Box<L> {
    fn arms(&self) -> usize {
        (**self).arms()
    }

    fn predict(&self) -> Vec<f64> {
        (**self).predict()
    }

    fn observe(&mut self, event: &FeedbackEvent, p_at_play: &[f64]) -> Result<()> {
        (**self).observe(event, p_at_play)
    }

    fn skip_threshold(&self) -> Option<f64> {
        (**self).skip_threshold()
    }
}
