//! Fixtures shared by the benchmarks.

use delaybandit::{DelaySpec, FeedbackEvent, LossSpec, ScenarioSpec, Visibility};

/// Uniform-delay scenario with a fixed gap between the best arm and the rest.
pub fn scenario(arms: usize, horizon: usize, max_delay: u64, visibility: Visibility) -> ScenarioSpec {
    ScenarioSpec {
        arms,
        horizon,
        losses: LossSpec::ConstantGap { gap: 0.2 },
        delays: DelaySpec::Uniform { max: max_delay },
        visibility,
        seed: 1,
    }
}

/// Events cycling over the arms, each played with probability `1 / arms`.
pub fn events(arms: usize, count: usize) -> Vec<FeedbackEvent> {
    (0..count)
        .map(|i| FeedbackEvent::new(i + 1, i % arms, if i % 3 == 0 { 1.0 } else { 0.0 }, (i % 7) as u64))
        .collect()
}
