//! Experiment configuration: one TOML file per experiment.
//!
//! Relative paths inside a config (maps, automaton files) resolve against
//! the config file's directory, so experiment bundles stay relocatable.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub task: TaskSection,
    pub environment: EnvironmentSection,
    #[serde(default)]
    pub reward: RewardSection,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub learner: LearnerSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
}

/// Task specification. All fields are optional for the bundled
/// environments, which carry a default formula and proposition set.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSection {
    pub formula: Option<String>,
    pub props: Option<Vec<String>>,
    /// Load a pre-built automaton (JSON) instead of compiling the formula.
    pub automaton: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvName {
    ExampleGrid,
    Office,
    Taxi,
    /// A custom flag grid loaded from `map`.
    Grid,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSection {
    pub name: EnvName,
    /// Bundled-environment variant; defaults to the first listed one.
    pub variant: Option<String>,
    /// Slip probability; only `example-grid` and `grid` accept it.
    #[serde(default)]
    pub noise: f64,
    /// Map file for `grid` environments.
    pub map: Option<PathBuf>,
    /// Episode step budget for `grid` environments.
    pub horizon: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindName {
    Progression,
    Hybrid,
    AdaptiveProgression,
    AdaptiveHybrid,
    Naive,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardSection {
    pub kind: KindName,
    #[serde(default = "default_eta0")]
    pub eta0: f64,
    /// Manual θ; mutually exclusive with `auto_theta`.
    pub theta: Option<f64>,
    /// Derive θ from the automaton (sum of round-0 progression values).
    #[serde(default)]
    pub auto_theta: bool,
}

impl Default for RewardSection {
    fn default() -> Self {
        RewardSection {
            kind: KindName::Progression,
            eta0: default_eta0(),
            theta: None,
            auto_theta: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    /// Window length N between adaptive success-rate checks.
    #[serde(default = "default_interval")]
    pub interval: usize,
    /// Success-rate threshold below which a round advance triggers.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Greedy episodes per round-advance probe.
    #[serde(default = "default_probe")]
    pub probe_episodes: usize,
    /// Greedy episodes for the final evaluation.
    #[serde(default = "default_eval")]
    pub eval_episodes: usize,
    /// Derive N as budget / |partition| instead of using `interval`.
    #[serde(default)]
    pub auto_interval: bool,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        ScheduleSection {
            interval: default_interval(),
            lambda: default_lambda(),
            probe_episodes: default_probe(),
            eval_episodes: default_eval(),
            auto_interval: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSection {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Starting Q-value for unseen entries; values above the best achievable
    /// return give optimistic exploration.
    #[serde(default)]
    pub q_init: f64,
    /// Training episodes per trial.
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Master seed; per-trial seeds are derived from it.
    #[serde(default)]
    pub seed: u64,
    /// Drop the Q-table whenever an adaptive round advances.
    #[serde(default)]
    pub reset_on_round: bool,
}

impl Default for LearnerSection {
    fn default() -> Self {
        LearnerSection {
            alpha: default_alpha(),
            epsilon: default_epsilon(),
            gamma: default_gamma(),
            q_init: 0.0,
            budget: default_budget(),
            trials: default_trials(),
            seed: 0,
            reset_on_round: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    /// Training-log evaluation cadence in episodes; 0 disables logging.
    #[serde(default = "default_report_every")]
    pub report_every: usize,
    /// Greedy episodes per logged evaluation.
    #[serde(default = "default_report_episodes")]
    pub report_episodes: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_out_dir(),
            report_every: default_report_every(),
            report_episodes: default_report_episodes(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// θ values to sweep over; each gets its own output subdirectory.
    pub theta: Vec<f64>,
}

fn default_eta0() -> f64 {
    0.1
}
fn default_interval() -> usize {
    500
}
fn default_lambda() -> f64 {
    0.95
}
fn default_probe() -> usize {
    20
}
fn default_eval() -> usize {
    20
}
fn default_alpha() -> f64 {
    0.1
}
fn default_epsilon() -> f64 {
    0.1
}
fn default_gamma() -> f64 {
    0.9
}
fn default_budget() -> usize {
    5_000
}
fn default_trials() -> usize {
    10
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_report_every() -> usize {
    100
}
fn default_report_episodes() -> usize {
    5
}

/// A parsed config plus the provenance needed by the commands: the SHA-256
/// of the raw file bytes and the directory relative paths resolve against.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub hash: String,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    /// Resolves a config-relative path against the config's directory.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }
}

pub fn load_config(path: &Path) -> Result<LoadedConfig, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| CliError::config(format!("config {} is not UTF-8", path.display())))?;
    let config: ExperimentConfig = toml::from_str(text)
        .map_err(|e| CliError::config(format!("config {}: {e}", path.display())))?;
    let hash = hex_digest(&bytes);
    let base_dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let loaded = LoadedConfig {
        config,
        hash,
        base_dir,
    };
    validate(&loaded)?;
    Ok(loaded)
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        use std::fmt::Write;
        let _ = write!(out, "{b:02x}");
    }
    out
}

fn validate(lc: &LoadedConfig) -> Result<(), CliError> {
    let c = &lc.config;
    let err = |msg: String| Err(CliError::Config(msg));

    if !(0.0 < c.learner.gamma && c.learner.gamma <= 1.0) {
        return err(format!("learner.gamma must be in (0, 1], got {}", c.learner.gamma));
    }
    if c.learner.trials < 1 {
        return err("learner.trials must be at least 1".into());
    }
    if !(0.0..=1.0).contains(&c.learner.alpha) || c.learner.alpha == 0.0 {
        return err(format!("learner.alpha must be in (0, 1], got {}", c.learner.alpha));
    }
    if !(0.0..=1.0).contains(&c.learner.epsilon) {
        return err(format!("learner.epsilon must be in [0, 1], got {}", c.learner.epsilon));
    }
    if !c.learner.q_init.is_finite() {
        return err(format!("learner.q_init must be finite, got {}", c.learner.q_init));
    }
    if !(0.0 < c.reward.eta0 && c.reward.eta0 < 1.0) {
        return err(format!("reward.eta0 must be in (0, 1), got {}", c.reward.eta0));
    }
    if let Some(theta) = c.reward.theta {
        if theta <= 1.0 {
            return err(format!("reward.theta must exceed 1, got {theta}"));
        }
        if c.reward.auto_theta {
            return err("reward.theta and reward.auto_theta are mutually exclusive".into());
        }
    }
    if !(0.0 < c.schedule.lambda && c.schedule.lambda <= 1.0) {
        return err(format!("schedule.lambda must be in (0, 1], got {}", c.schedule.lambda));
    }
    if c.schedule.interval == 0 && !c.schedule.auto_interval {
        return err("schedule.interval must be at least 1".into());
    }
    if !(0.0..1.0).contains(&c.environment.noise) {
        return err(format!("environment.noise must be in [0, 1), got {}", c.environment.noise));
    }

    match c.environment.name {
        EnvName::Grid => {
            let Some(map) = &c.environment.map else {
                return err("environment.map is required for grid environments".into());
            };
            let resolved = lc.resolve(map);
            if !resolved.is_file() {
                return err(format!("environment.map {} does not exist", resolved.display()));
            }
            if c.environment.horizon.is_none() {
                return err("environment.horizon is required for grid environments".into());
            }
            if c.task.formula.is_none() && c.task.automaton.is_none() {
                return err("grid environments need task.formula or task.automaton".into());
            }
            if c.task.props.is_none() {
                return err("grid environments need task.props".into());
            }
            if c.environment.variant.is_some() {
                return err("environment.variant does not apply to grid environments".into());
            }
        }
        EnvName::ExampleGrid | EnvName::Office | EnvName::Taxi => {
            if c.environment.map.is_some() {
                return err("environment.map only applies to grid environments".into());
            }
            if c.environment.horizon.is_some() {
                return err("environment.horizon only applies to grid environments".into());
            }
            if c.environment.name != EnvName::ExampleGrid && c.environment.noise != 0.0 {
                return err("environment.noise is set by the variant for this environment".into());
            }
        }
    }

    if let Some(automaton) = &c.task.automaton {
        let resolved = lc.resolve(automaton);
        if !resolved.is_file() {
            return err(format!("task.automaton {} does not exist", resolved.display()));
        }
    }
    if let Some(sweep) = &c.sweep {
        if sweep.theta.is_empty() {
            return err("sweep.theta must list at least one value".into());
        }
        if let Some(&bad) = sweep.theta.iter().find(|&&t| t <= 1.0) {
            return err(format!("sweep.theta values must exceed 1, got {bad}"));
        }
    }
    Ok(())
}
