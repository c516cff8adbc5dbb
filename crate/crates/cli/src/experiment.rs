//! Assembly of a configured experiment: environment, automaton, reward
//! context, and trainer settings, all derived from one [`LoadedConfig`].

use std::path::Path;

use shaper_core::dfa::{analyze, compile, minimize};
use shaper_core::env::{
    example_grid, office_world, taxi_world, ExampleGridVariant, FlagGrid, GridMap, LabeledEnv,
    OfficeVariant, TaxiVariant, EXAMPLE_FORMULA, OFFICE_FORMULA, TAXI_FORMULA,
};
use shaper_core::metrics::{distances, partition};
use shaper_core::parse::parse;
use shaper_core::reward::{context_for, RewardContext};
use shaper_core::rl::{AdaptiveSchedule, QConfig, TrainConfig};
use shaper_core::{Alphabet, Dfa, DfaAnalysis, DistanceTable, Formula, Partition, RewardKind};

use crate::config::{EnvName, KindName, LoadedConfig};
use crate::dfa_io;
use crate::error::CliError;

/// The compiled task side of an experiment.
#[derive(Debug)]
pub struct Task {
    pub ap: Alphabet,
    /// Absent when the automaton was loaded from a file.
    pub formula: Option<Formula>,
    pub dfa: Dfa,
    pub analysis: DfaAnalysis,
    pub d0: DistanceTable,
    pub partition: Partition,
}

impl From<KindName> for RewardKind {
    fn from(k: KindName) -> Self {
        match k {
            KindName::Progression => RewardKind::Progression,
            KindName::Hybrid => RewardKind::Hybrid,
            KindName::AdaptiveProgression => RewardKind::AdaptiveProgression,
            KindName::AdaptiveHybrid => RewardKind::AdaptiveHybrid,
            KindName::Naive => RewardKind::Naive,
        }
    }
}

fn default_task(name: EnvName) -> Option<(&'static str, &'static [&'static str])> {
    match name {
        EnvName::ExampleGrid => Some((EXAMPLE_FORMULA, &["o", "b", "y"])),
        EnvName::Office => Some((OFFICE_FORMULA, &["c", "m", "o", "d"])),
        EnvName::Taxi => Some((TAXI_FORMULA, &["p", "g", "f"])),
        EnvName::Grid => None,
    }
}

/// The proposition set for the experiment: explicit `task.props`, or the
/// environment's bundled one.
pub fn alphabet(lc: &LoadedConfig) -> Result<Alphabet, CliError> {
    let names: Vec<String> = match &lc.config.task.props {
        Some(props) => props.clone(),
        None => default_task(lc.config.environment.name)
            .ok_or_else(|| CliError::config("grid environments need task.props"))?
            .1
            .iter()
            .map(|s| s.to_string())
            .collect(),
    };
    Alphabet::new(names.iter().map(String::as_str))
        .map_err(|e| CliError::config(format!("task.props: {e}")))
}

/// The formula text for the experiment, when one is needed.
pub fn formula_text(lc: &LoadedConfig) -> Result<String, CliError> {
    match &lc.config.task.formula {
        Some(text) => Ok(text.clone()),
        None => default_task(lc.config.environment.name)
            .map(|(f, _)| f.to_string())
            .ok_or_else(|| CliError::config("grid environments need task.formula")),
    }
}

/// Builds the task automaton: loads `automaton_override` or the configured
/// automaton file when present, otherwise compiles and minimizes the
/// formula.
pub fn build_task(lc: &LoadedConfig, automaton_override: Option<&Path>) -> Result<Task, CliError> {
    let ap = alphabet(lc)?;
    let automaton_path = automaton_override
        .map(Path::to_path_buf)
        .or_else(|| lc.config.task.automaton.as_ref().map(|p| lc.resolve(p)));

    let (formula, dfa) = match automaton_path {
        Some(path) => {
            let dfa = dfa_io::read_json(&path)?;
            if dfa.alphabet().names() != ap.names() {
                return Err(CliError::config(format!(
                    "automaton {} is over propositions {:?}, the experiment uses {:?}",
                    path.display(),
                    dfa.alphabet().names(),
                    ap.names()
                )));
            }
            (None, dfa)
        }
        None => {
            let text = formula_text(lc)?;
            let f = parse(&text, &ap)
                .map_err(|e| CliError::config(format!("task formula: {e}")))?;
            let dfa = compile(&f, &ap)
                .map_err(|e| CliError::config(format!("task formula: {e}")))?;
            (Some(f), minimize(&dfa))
        }
    };

    let analysis = analyze(&dfa);
    let d0 = distances(&dfa, &analysis);
    let part = partition(&dfa, &d0);
    Ok(Task {
        ap,
        formula,
        dfa,
        analysis,
        d0,
        partition: part,
    })
}

fn variant_error(name: &str, got: &str, allowed: &[&str]) -> CliError {
    CliError::config(format!(
        "unknown {name} variant `{got}` (expected one of {})",
        allowed.join(", ")
    ))
}

/// Instantiates the configured environment. Each caller gets an
/// independent copy, so trials can run in parallel.
pub fn build_env(lc: &LoadedConfig) -> Result<Box<dyn LabeledEnv + Send>, CliError> {
    let env = &lc.config.environment;
    let variant = env.variant.as_deref();
    match env.name {
        EnvName::ExampleGrid => {
            let v = match variant.unwrap_or("full") {
                "full" => ExampleGridVariant::Full,
                "no-orange" => ExampleGridVariant::NoOrange,
                "no-blue" => ExampleGridVariant::NoBlue,
                other => {
                    return Err(variant_error(
                        "example-grid",
                        other,
                        &["full", "no-orange", "no-blue"],
                    ))
                }
            };
            Ok(Box::new(example_grid(v, env.noise)))
        }
        EnvName::Office => {
            let v = match variant.unwrap_or("deterministic") {
                "deterministic" => OfficeVariant::Deterministic,
                "noisy" => OfficeVariant::Noisy,
                "infeasible" => OfficeVariant::Infeasible,
                other => {
                    return Err(variant_error(
                        "office",
                        other,
                        &["deterministic", "noisy", "infeasible"],
                    ))
                }
            };
            Ok(Box::new(office_world(v)))
        }
        EnvName::Taxi => {
            let v = match variant.unwrap_or("deterministic") {
                "deterministic" => TaxiVariant::Deterministic,
                "noisy" => TaxiVariant::Noisy,
                "infeasible" => TaxiVariant::Infeasible,
                other => {
                    return Err(variant_error(
                        "taxi",
                        other,
                        &["deterministic", "noisy", "infeasible"],
                    ))
                }
            };
            Ok(Box::new(taxi_world(v)))
        }
        EnvName::Grid => {
            let map_path = lc.resolve(env.map.as_ref().expect("validated"));
            let text = std::fs::read_to_string(&map_path).map_err(|e| {
                CliError::config(format!("cannot read map {}: {e}", map_path.display()))
            })?;
            let map = GridMap::parse(&text)
                .map_err(|e| CliError::config(format!("map {}: {e}", map_path.display())))?;
            let ap = alphabet(lc)?;
            let horizon = env.horizon.expect("validated");
            Ok(Box::new(FlagGrid::new(map, ap, env.noise, horizon)))
        }
    }
}

/// The experiment's θ: the manual value, or the automaton-derived default
/// when `auto_theta` is set or no value is given.
pub fn resolved_theta(lc: &LoadedConfig, task: &Task) -> f64 {
    match lc.config.reward.theta {
        Some(theta) if !lc.config.reward.auto_theta => theta,
        _ => shaper_core::reward::default_theta(&task.d0, &task.analysis),
    }
}

/// Builds the round-0 reward context for a task, honoring θ resolution.
pub fn reward_context(lc: &LoadedConfig, task: &Task) -> RewardContext {
    context_for(
        &task.dfa,
        lc.config.reward.kind.into(),
        lc.config.reward.eta0,
        Some(resolved_theta(lc, task)),
    )
}

/// The adaptive window length N: configured, or budget / |partition|.
pub fn resolved_interval(lc: &LoadedConfig, task: &Task) -> usize {
    if lc.config.schedule.auto_interval {
        (lc.config.learner.budget / task.partition.len().max(1)).max(1)
    } else {
        lc.config.schedule.interval
    }
}

pub fn train_config(lc: &LoadedConfig, task: &Task) -> TrainConfig {
    let c = &lc.config;
    TrainConfig {
        qcfg: QConfig {
            alpha: c.learner.alpha,
            epsilon: c.learner.epsilon,
            q_init: c.learner.q_init,
            gamma: c.learner.gamma,
            reset_on_round: c.learner.reset_on_round,
        },
        schedule: AdaptiveSchedule {
            interval: resolved_interval(lc, task),
            lambda: c.schedule.lambda,
            probe_episodes: c.schedule.probe_episodes,
        },
        budget_episodes: c.learner.budget,
        report_every: c.output.report_every,
        report_episodes: c.output.report_episodes,
    }
}

/// Worker threads for trial execution: `SHAPER_WORKERS`, or the machine's
/// available parallelism.
pub fn worker_count() -> usize {
    match std::env::var("SHAPER_WORKERS") {
        Ok(v) => v.parse().ok().filter(|&n| n >= 1).unwrap_or(1),
        Err(_) => std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1),
    }
}
