//! JSON run configuration.

use std::f64::consts::E;
use std::path::{Path, PathBuf};

use delaybandit::env::Game;
use delaybandit::metrics;
use delaybandit::{AlgorithmSpec, ScenarioSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    pub algorithm: AlgorithmConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

/// Algorithm selection. Parameters left out are tuned from the scenario's
/// `K`, `T` and total delay `D`:
/// - `exp3`, `dew`: `eta = √(ln K / (KTe/2 + D))`; `dew` also `d_max = max(max_t d_t, 1)`;
/// - `skipper-dew`: `beta = √(((eKT/2 + D)/(4e) + D) / (4e ln K))`, `eta = 1/(4e beta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AlgorithmConfig {
    Exp3 {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eta: Option<f64>,
    },
    Dew {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d_max: Option<f64>,
    },
    SkipperDew {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eta: Option<f64>,
    },
    Doubling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmName {
    Exp3,
    Dew,
    SkipperDew,
    Doubling,
}

impl AlgorithmConfig {
    pub fn name(&self) -> AlgorithmName {
        match self {
            AlgorithmConfig::Exp3 { .. } => AlgorithmName::Exp3,
            AlgorithmConfig::Dew { .. } => AlgorithmName::Dew,
            AlgorithmConfig::SkipperDew { .. } => AlgorithmName::SkipperDew,
            AlgorithmConfig::Doubling => AlgorithmName::Doubling,
        }
    }

    pub fn from_name(name: AlgorithmName) -> Self {
        match name {
            AlgorithmName::Exp3 => AlgorithmConfig::Exp3 { eta: None },
            AlgorithmName::Dew => AlgorithmConfig::Dew { eta: None, d_max: None },
            AlgorithmName::SkipperDew => AlgorithmConfig::SkipperDew { beta: None, eta: None },
            AlgorithmName::Doubling => AlgorithmConfig::Doubling,
        }
    }

    /// Fills unset parameters from the game.
    pub fn resolve(&self, game: &Game) -> AlgorithmSpec {
        let arms = game.losses.arms();
        let horizon = game.losses.horizon();
        let total = game.delays.total() as f64;
        let tuned_eta = || metrics::theorem1_eta(arms, horizon, total);
        match *self {
            AlgorithmConfig::Exp3 { eta } => AlgorithmSpec::Exp3 {
                eta: eta.unwrap_or_else(tuned_eta),
            },
            AlgorithmConfig::Dew { eta, d_max } => AlgorithmSpec::Dew {
                eta: eta.unwrap_or_else(tuned_eta),
                d_max: d_max.unwrap_or_else(|| game.delays.max_delay().max(1) as f64),
            },
            AlgorithmConfig::SkipperDew { beta, eta } => {
                let beta = beta.unwrap_or_else(|| metrics::corollary_beta(arms, horizon, total));
                AlgorithmSpec::SkipperDew {
                    beta,
                    eta: eta.unwrap_or(1.0 / (4.0 * E * beta)),
                }
            }
            AlgorithmConfig::Doubling => AlgorithmSpec::Doubling,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// Number of rounds `T`.
    Horizon,
    /// Skipping threshold of `skipper-dew`.
    Beta,
    /// Learning rate of `exp3`, `dew` or `skipper-dew`.
    Eta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::parse(&text)?;
        config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Makes relative data-file paths relative to the config's directory.
    fn resolve_paths(&mut self, base: &Path) {
        use delaybandit::{DelaySpec, LossSpec};
        if let LossSpec::FromFile { path } = &mut self.scenario.losses {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        if let DelaySpec::FromFile { path } = &mut self.scenario.delays {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }

    /// Returns a copy with one sweep value applied.
    pub fn with_axis_value(&self, axis: SweepAxis, value: f64) -> Result<Self, CliError> {
        let mut cfg = self.clone();
        match axis {
            SweepAxis::Horizon => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(CliError::Config(format!("horizon {value} is not a positive integer")));
                }
                cfg.scenario.horizon = value as usize;
            }
            SweepAxis::Beta => match &mut cfg.algorithm {
                AlgorithmConfig::SkipperDew { beta, .. } => *beta = Some(value),
                other => {
                    return Err(CliError::Config(format!(
                        "beta sweep needs skipper-dew, got {:?}",
                        other.name()
                    )))
                }
            },
            SweepAxis::Eta => match &mut cfg.algorithm {
                AlgorithmConfig::Exp3 { eta }
                | AlgorithmConfig::Dew { eta, .. }
                | AlgorithmConfig::SkipperDew { eta, .. } => *eta = Some(value),
                AlgorithmConfig::Doubling => {
                    return Err(CliError::Config("doubling tunes its own learning rate".into()))
                }
            },
        }
        Ok(cfg)
    }
}
