//! Nonstochastic multiarmed bandits with variably delayed feedback.
//!
//! - [`dew`]: delayed exponential weights, one update per arriving feedback event.
//! - [`skipper`]: wrapper that drops feedback whose delay reaches a threshold.
//! - [`doubling`]: epoch-doubling tuner of the skipping threshold when delays
//!   are revealed at action time.
//! - [`env`]: round-based simulator, scenario generators and run records.
//! - [`metrics`]: regret statistics and regret-bound evaluators, including the
//!   exact minimizer of the oracle bound over the skipping threshold.

pub mod dew;
pub mod doubling;
pub mod env;
pub mod error;
pub mod exp3;
pub mod learner;
pub mod metrics;
pub mod skipper;
pub mod types;

pub use dew::{DewLearner, DriftStats, LearnerState};
pub use doubling::{DoublingController, EpochState};
pub use env::{
    run_game, Agent, AlgorithmSpec, DelaySpec, Game, LossSpec, RoundRow, RunRecord, RunSummary, ScenarioSpec,
};
pub use error::{Error, Result};
pub use exp3::Exp3;
pub use learner::Learner;
pub use metrics::{BoundReport, OracleBound};
pub use skipper::Skipper;
pub use types::{best_arm, sample_arm, Arm, DelaySchedule, FeedbackEvent, LossTable, Round, Visibility};
