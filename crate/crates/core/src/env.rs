//! Round-based simulation of the delayed-feedback bandit game.
//!
//! Each round `t = 1..T`:
//! 1. under [`Visibility::AtActionTime`] the delay `d_t` is revealed to the agent;
//! 2. the agent's distribution is sampled with the round's uniform draw and
//!    the chosen arm's loss is incurred;
//! 3. every feedback event whose arrival round is `t` is delivered, in
//!    ascending origin order, and the new event is queued for round `t + d_t`
//!    (or dropped if that lies beyond `T`).
//!
//! Loss tables and delay schedules are materialized before the first round
//! and never depend on the agent's actions.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dew::DewLearner;
use crate::doubling::DoublingController;
use crate::error::{Error, Result};
use crate::exp3::Exp3;
use crate::learner::Learner;
use crate::metrics;
use crate::skipper::Skipper;
use crate::types::{best_arm, sample_arm, Arm, DelaySchedule, FeedbackEvent, LossTable, Round, Visibility};

const LOSS_STREAM: u64 = 0;
const DELAY_STREAM: u64 = 1;
const DRAW_STREAM: u64 = 2;

/// How the loss table is produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LossSpec {
    /// Independent Bernoulli losses with a fixed mean per arm.
    IidBernoulli { means: Vec<f64> },
    /// Deterministic losses: arm 0 gets `0.5 - gap/2`, every other arm `0.5 + gap/2`.
    ConstantGap { gap: f64 },
    /// Bernoulli losses whose best arm rotates every `segment` rounds: during
    /// segment `j` arm `j mod K` has mean `0.5 - gap/2`, the others `0.5 + gap/2`.
    ShiftingAdversary { segment: usize, gap: f64 },
    /// CSV with one row per round and one column per arm.
    FromFile { path: PathBuf },
}

/// How the delay schedule is produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DelaySpec {
    Constant {
        delay: u64,
    },
    /// Independent uniform integers in `[0, max]`.
    Uniform {
        max: u64,
    },
    /// Large delays `T - t` for the first `√(KT / ln K)` rounds, zero afterwards.
    Example1,
    /// CSV with one integer delay per line.
    FromFile {
        path: PathBuf,
    },
}

/// Everything needed to regenerate a game's loss table and delay schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub arms: usize,
    pub horizon: usize,
    pub losses: LossSpec,
    pub delays: DelaySpec,
    pub visibility: Visibility,
    /// Seed of the loss and delay generators.
    pub seed: u64,
}

/// A materialized game.
#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    pub losses: LossTable,
    pub delays: DelaySchedule,
}

impl ScenarioSpec {
    pub fn materialize(&self) -> Result<Game> {
        let losses = generate_losses(self)?;
        let delays = generate_delays(self)?;
        delays.check_pairing(&losses)?;
        Ok(Game { losses, delays })
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn check_dimensions(spec: &ScenarioSpec) -> Result<()> {
    if spec.arms < 2 {
        return Err(Error::Config(format!("need at least 2 arms, got {}", spec.arms)));
    }
    if spec.horizon == 0 {
        return Err(Error::Config("horizon must be positive".into()));
    }
    Ok(())
}

fn check_gap(gap: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gap) {
        return Err(Error::Config(format!("gap must lie in [0, 1], got {gap}")));
    }
    Ok(())
}

pub fn generate_losses(spec: &ScenarioSpec) -> Result<LossTable> {
    check_dimensions(spec)?;
    let (k, t) = (spec.arms, spec.horizon);
    let mut rng = stream_rng(spec.seed, LOSS_STREAM);
    let mut bernoulli = |mean: f64| if rng.gen::<f64>() < mean { 1.0 } else { 0.0 };
    let losses = match &spec.losses {
        LossSpec::IidBernoulli { means } => {
            if means.len() != k {
                return Err(Error::Config(format!("{} means given for {k} arms", means.len())));
            }
            if let Some(m) = means.iter().find(|m| !(0.0..=1.0).contains(*m)) {
                return Err(Error::Config(format!("Bernoulli mean {m} outside [0, 1]")));
            }
            (0..t).flat_map(|_| means.to_vec()).map(&mut bernoulli).collect()
        }
        LossSpec::ConstantGap { gap } => {
            check_gap(*gap)?;
            let row: Vec<f64> = (0..k)
                .map(|a| if a == 0 { 0.5 - gap / 2.0 } else { 0.5 + gap / 2.0 })
                .collect();
            row.repeat(t)
        }
        LossSpec::ShiftingAdversary { segment, gap } => {
            check_gap(*gap)?;
            if *segment == 0 {
                return Err(Error::Config("segment length must be positive".into()));
            }
            let mut out = Vec::with_capacity(t * k);
            for i in 0..t {
                let best = (i / segment) % k;
                for a in 0..k {
                    let mean = if a == best { 0.5 - gap / 2.0 } else { 0.5 + gap / 2.0 };
                    out.push(bernoulli(mean));
                }
            }
            out
        }
        LossSpec::FromFile { path } => {
            let table = read_loss_csv(path)?;
            if table.horizon() != t || table.arms() != k {
                return Err(Error::Config(format!(
                    "{} holds a {}x{} table, scenario declares {t}x{k}",
                    path.display(),
                    table.horizon(),
                    table.arms()
                )));
            }
            return Ok(table);
        }
    };
    LossTable::new(t, k, losses)
}

pub fn generate_delays(spec: &ScenarioSpec) -> Result<DelaySchedule> {
    check_dimensions(spec)?;
    let t = spec.horizon;
    let delays = match &spec.delays {
        DelaySpec::Constant { delay } => vec![*delay; t],
        DelaySpec::Uniform { max } => {
            let mut rng = stream_rng(spec.seed, DELAY_STREAM);
            (0..t).map(|_| rng.gen_range(0..=*max)).collect()
        }
        DelaySpec::Example1 => return Ok(gen_example1(spec.arms, t)?.with_visibility(spec.visibility)),
        DelaySpec::FromFile { path } => {
            let delays = read_delay_csv(path)?;
            if delays.len() != t {
                return Err(Error::Config(format!(
                    "{} holds {} delays, scenario declares {t} rounds",
                    path.display(),
                    delays.len()
                )));
            }
            delays
        }
    };
    Ok(DelaySchedule::new(delays, spec.visibility))
}

/// Schedule with `d_t = T - t` for rounds `t < √(KT / ln K)` and `d_t = 0`
/// afterwards. Requires `T >= K ln K`.
pub fn gen_example1(arms: usize, horizon: usize) -> Result<DelaySchedule> {
    if arms < 2 {
        return Err(Error::Config(format!("need at least 2 arms, got {arms}")));
    }
    let k = arms as f64;
    let t = horizon as f64;
    if t < k * k.ln() {
        return Err(Error::Config(format!(
            "example schedule needs T >= K ln K, got T = {horizon}"
        )));
    }
    let cutoff = example1_cutoff(arms, horizon);
    let delays = (1..=horizon)
        .map(|round| {
            if (round as f64) < cutoff {
                (horizon - round) as u64
            } else {
                0
            }
        })
        .collect();
    Ok(DelaySchedule::new(delays, Visibility::AtActionTime))
}

/// `√(KT / ln K)`.
pub fn example1_cutoff(arms: usize, horizon: usize) -> f64 {
    let k = arms as f64;
    (k * horizon as f64 / k.ln()).sqrt()
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

pub fn read_loss_csv(path: &Path) -> Result<LossTable> {
    parse_loss_csv(&read_text(path)?)
}

pub fn read_delay_csv(path: &Path) -> Result<Vec<u64>> {
    parse_delay_csv(&read_text(path)?)
}

/// Parses `T` lines of `K` comma-separated reals.
pub fn parse_loss_csv(text: &str) -> Result<LossTable> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row =
            line.split(',')
                .map(|field| {
                    field.trim().parse::<f64>().map_err(|e| {
                        Error::Config(format!("line {}: cannot parse loss {:?}: {e}", i + 1, field.trim()))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    LossTable::from_rows(&rows)
}

/// Parses one nonnegative integer delay per line.
pub fn parse_delay_csv(text: &str) -> Result<Vec<u64>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let field = line.trim().trim_end_matches(',');
            field
                .parse::<u64>()
                .map_err(|e| Error::Config(format!("line {}: cannot parse delay {field:?}: {e}", i + 1)))
        })
        .collect()
}

/// The per-round uniform draws of a run. They depend on the seed only, so
/// every algorithm run with the same seed sees the same draws.
pub fn draw_sequence(seed: u64, horizon: usize) -> Vec<f64> {
    let mut rng = stream_rng(seed, DRAW_STREAM);
    (0..horizon).map(|_| rng.gen::<f64>()).collect()
}

/// A feedback event waiting for its arrival round, with the distribution it
/// was drawn from and the epoch it was played in.
#[derive(Debug, Clone, PartialEq)]
pub struct PendingFeedback {
    pub event: FeedbackEvent,
    pub p_at_play: Vec<f64>,
    pub epoch: u32,
}

/// Feedback bucketed by arrival round. Each bucket is in ascending origin
/// order as long as events are pushed in round order.
#[derive(Debug, Clone, Default)]
pub struct PendingQueue {
    buckets: BTreeMap<Round, Vec<PendingFeedback>>,
    horizon: usize,
    dropped: u64,
}

impl PendingQueue {
    pub fn new(horizon: usize) -> Self {
        Self {
            buckets: BTreeMap::new(),
            horizon,
            dropped: 0,
        }
    }

    /// Queues the event, or drops it if it would arrive after the horizon.
    pub fn push(&mut self, pending: PendingFeedback) {
        if pending.event.is_delivered_within(self.horizon) {
            self.buckets.entry(pending.event.arrival).or_default().push(pending);
        } else {
            self.dropped += 1;
        }
    }

    /// Removes and returns the events arriving at `round`.
    pub fn take(&mut self, round: Round) -> Vec<PendingFeedback> {
        self.buckets.remove(&round).unwrap_or_default()
    }

    /// Events that will never be delivered.
    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn len(&self) -> usize {
        self.buckets.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }
}

/// An algorithm as driven by the simulator.
pub trait Agent {
    /// Distribution for the current round. `revealed_delay` is `Some(d_t)`
    /// only when delays are visible at action time.
    fn act(&mut self, revealed_delay: Option<u64>) -> Result<Vec<f64>>;

    fn deliver(&mut self, event: &FeedbackEvent, p_at_play: &[f64], epoch: u32) -> Result<()>;

    /// Epoch the current round is played in.
    fn epoch(&self) -> u32 {
        1
    }

    /// Skipping threshold in force for the current round.
    fn threshold(&self) -> Option<f64> {
        None
    }
}

impl<L: Learner> Agent for L {
    fn act(&mut self, _revealed_delay: Option<u64>) -> Result<Vec<f64>> {
        Ok(self.predict())
    }

    fn deliver(&mut self, event: &FeedbackEvent, p_at_play: &[f64], _epoch: u32) -> Result<()> {
        self.observe(event, p_at_play)
    }

    fn threshold(&self) -> Option<f64> {
        self.skip_threshold()
    }
}

impl Agent for DoublingController {
    fn act(&mut self, revealed_delay: Option<u64>) -> Result<Vec<f64>> {
        Ok(self.begin_round(revealed_delay)?.probabilities)
    }

    fn deliver(&mut self, event: &FeedbackEvent, p_at_play: &[f64], epoch: u32) -> Result<()> {
        self.observe(event, p_at_play, epoch)
    }

    fn epoch(&self) -> u32 {
        DoublingController::epoch(self)
    }

    fn threshold(&self) -> Option<f64> {
        Some(self.epoch_state().threshold)
    }
}

/// One row of a run trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRow {
    pub round: Round,
    pub arm: Arm,
    pub loss: f64,
    pub cum_loss: f64,
    pub epoch: u32,
    pub beta: Option<f64>,
    pub skipped: bool,
    pub delivered_events: usize,
}

/// Output of [`simulate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub rows: Vec<RoundRow>,
    /// Row-major `T × K` distributions the arms were drawn from.
    pub probabilities: Vec<f64>,
    pub learner_loss: f64,
    /// Rounds whose delay met the threshold in force when they were played.
    pub skipped_rounds: u64,
    /// Total delay of the other rounds.
    pub experienced_delay: u64,
    pub delivered_events: u64,
    pub final_epoch: u32,
}

/// Plays one game with the given per-round uniform draws.
pub fn simulate<A: Agent + ?Sized>(game: &Game, agent: &mut A, draws: &[f64]) -> Result<Trace> {
    let Game { losses, delays } = game;
    delays.check_pairing(losses)?;
    let horizon = losses.horizon();
    let arms = losses.arms();
    if draws.len() < horizon {
        return Err(Error::Config(format!("{} draws for {horizon} rounds", draws.len())));
    }

    let mut queue = PendingQueue::new(horizon);
    let mut rows = Vec::with_capacity(horizon);
    let mut probabilities = Vec::with_capacity(horizon * arms);
    let mut cum_loss = 0.0;
    let (mut skipped_rounds, mut experienced_delay, mut delivered_events) = (0u64, 0u64, 0u64);

    for round in 1..=horizon {
        let delay = delays.delay(round);
        let revealed = (delays.visibility() == Visibility::AtActionTime).then_some(delay);
        let p = agent.act(revealed)?;
        if p.len() != arms {
            return Err(Error::Invariant(format!(
                "agent returned {} probabilities for {arms} arms",
                p.len()
            )));
        }
        let arm = sample_arm(&p, draws[round - 1]).map_err(|e| Error::Invariant(e.to_string()))?;
        let loss = losses.loss(round, arm);
        cum_loss += loss;

        let epoch = agent.epoch();
        let beta = agent.threshold();
        let skipped = beta.is_some_and(|b| delay as f64 >= b);
        if skipped {
            skipped_rounds += 1;
        } else {
            experienced_delay += delay;
        }

        let arriving = queue.take(round);
        // the new event arrives now when d_t = 0
        let own = PendingFeedback {
            event: FeedbackEvent::new(round, arm, loss, delay),
            p_at_play: p.clone(),
            epoch,
        };
        let mut delivered = 0;
        for pending in arriving.iter().chain((delay == 0).then_some(&own)) {
            agent.deliver(&pending.event, &pending.p_at_play, pending.epoch)?;
            delivered += 1;
        }
        if delay > 0 {
            queue.push(own);
        }
        delivered_events += delivered as u64;
        probabilities.extend_from_slice(&p);
        rows.push(RoundRow {
            round,
            arm,
            loss,
            cum_loss,
            epoch,
            beta,
            skipped,
            delivered_events: delivered,
        });
    }

    Ok(Trace {
        final_epoch: rows.last().map_or(1, |r| r.epoch),
        rows,
        probabilities,
        learner_loss: cum_loss,
        skipped_rounds,
        experienced_delay,
        delivered_events,
    })
}

/// Algorithm selection with fully resolved parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AlgorithmSpec {
    Exp3 { eta: f64 },
    Dew { eta: f64, d_max: f64 },
    SkipperDew { beta: f64, eta: f64 },
    Doubling,
}

impl AlgorithmSpec {
    pub fn build(&self, arms: usize, visibility: Visibility) -> Result<Box<dyn Agent>> {
        Ok(match *self {
            AlgorithmSpec::Exp3 { eta } => Box::new(Exp3::new(arms, eta)?),
            AlgorithmSpec::Dew { eta, d_max } => Box::new(DewLearner::new(arms, eta, d_max)?),
            AlgorithmSpec::SkipperDew { beta, eta } => Box::new(Skipper::with_dew(arms, beta, eta)?),
            AlgorithmSpec::Doubling => Box::new(DoublingController::new(arms, visibility)?),
        })
    }
}

impl Agent for Box<dyn Agent> {
    fn act(&mut self, revealed_delay: Option<u64>) -> Result<Vec<f64>> {
        (**self).act(revealed_delay)
    }

    fn deliver(&mut self, event: &FeedbackEvent, p_at_play: &[f64], epoch: u32) -> Result<()> {
        (**self).deliver(event, p_at_play, epoch)
    }

    fn epoch(&self) -> u32 {
        (**self).epoch()
    }

    fn threshold(&self) -> Option<f64> {
        (**self).threshold()
    }
}

/// Theoretical bounds evaluated on a run's delay schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSummary {
    pub theorem1: f64,
    pub corollary: f64,
    pub oracle: f64,
    pub oracle_beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub regret: f64,
    pub learner_loss: f64,
    pub best_arm: Arm,
    pub best_arm_loss: f64,
    /// Total delay over all rounds, delivered or not.
    pub total_delay: u64,
    /// `D_β` under the thresholds in force.
    pub experienced_delay: u64,
    /// `|S_β|` under the thresholds in force.
    pub skipped_rounds: u64,
    pub epochs: u32,
    pub delivered_events: u64,
    pub bounds: BoundSummary,
}

/// Full result of one seeded run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub scenario: ScenarioSpec,
    pub algorithm: AlgorithmSpec,
    pub seed: u64,
    pub arms: usize,
    pub rows: Vec<RoundRow>,
    pub probabilities: Vec<f64>,
    pub summary: RunSummary,
}

impl RunRecord {
    /// Distribution used at 1-based `round`.
    pub fn distribution(&self, round: Round) -> &[f64] {
        &self.probabilities[(round - 1) * self.arms..round * self.arms]
    }

    pub fn arm_sequence(&self) -> Vec<Arm> {
        self.rows.iter().map(|r| r.arm).collect()
    }
}

/// Bounds of a game, computed once and shared across seeds.
pub fn game_bounds(game: &Game) -> Result<BoundSummary> {
    let arms = game.losses.arms();
    let horizon = game.losses.horizon();
    let total = game.delays.total() as f64;
    let oracle = metrics::oracle_bound(game.delays.as_slice(), arms, horizon)?;
    Ok(BoundSummary {
        theorem1: metrics::theorem1_bound(arms, horizon, total),
        corollary: metrics::corollary_bound(arms, horizon, total),
        oracle: oracle.value,
        oracle_beta: oracle.beta,
    })
}

/// Runs `algorithm` on an already materialized game of `scenario`.
pub fn play(
    scenario: &ScenarioSpec,
    game: &Game,
    bounds: BoundSummary,
    algorithm: &AlgorithmSpec,
    seed: u64,
) -> Result<RunRecord> {
    let arms = game.losses.arms();
    let mut agent = algorithm.build(arms, game.delays.visibility())?;
    let draws = draw_sequence(seed, game.losses.horizon());
    let trace = simulate(game, &mut agent, &draws)?;
    let (best, best_loss) = best_arm(&game.losses);
    let summary = RunSummary {
        regret: trace.learner_loss - best_loss,
        learner_loss: trace.learner_loss,
        best_arm: best,
        best_arm_loss: best_loss,
        total_delay: game.delays.total(),
        experienced_delay: trace.experienced_delay,
        skipped_rounds: trace.skipped_rounds,
        epochs: trace.final_epoch,
        delivered_events: trace.delivered_events,
        bounds,
    };
    Ok(RunRecord {
        scenario: scenario.clone(),
        algorithm: algorithm.clone(),
        seed,
        arms,
        rows: trace.rows,
        probabilities: trace.probabilities,
        summary,
    })
}

/// Materializes `scenario` and plays `algorithm` on it with the draws of `seed`.
pub fn run_game(scenario: &ScenarioSpec, algorithm: &AlgorithmSpec, seed: u64) -> Result<RunRecord> {
    let game = scenario.materialize()?;
    let bounds = game_bounds(&game)?;
    play(scenario, &game, bounds, algorithm, seed)
}
