//! Tabular Q-learning over the on-the-fly product of environment and task
//! automaton, with the adaptive round schedule.
//!
//! The product is never materialized: a [`ProductSession`] pairs one sampled
//! environment episode with the automaton run over its emitted labels. The
//! trainer watches a success-rate window; when an adaptive reward stalls
//! below the threshold, it probes the greedy policy for the best partition
//! index it reaches and advances the reward context one round.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dfa::{Dfa, DfaAnalysis, StateId};
use crate::env::{derive_seed, EnvStateId, LabeledEnv, SubgoalRewarder};
use crate::metrics::Partition;
use crate::reward::{RewardContext, TransitionView};

/// Why (or whether) an episode has ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionStatus {
    Running,
    /// The automaton reached an accepting state: task complete.
    Accepted,
    /// The automaton reached a trap state: task failed for good.
    Trapped,
    /// The step budget ran out.
    Horizon,
    /// The environment ended the episode on its own.
    EnvDone,
}

impl SessionStatus {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, SessionStatus::Running)
    }
}

/// One environment episode paired with the automaton run over its labels.
#[derive(Debug)]
pub struct ProductSession<'a, E: LabeledEnv + ?Sized> {
    env: &'a mut E,
    dfa: &'a Dfa,
    analysis: &'a DfaAnalysis,
    env_state: EnvStateId,
    q: StateId,
    steps: usize,
    status: SessionStatus,
}

/// Everything observed on one session step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionStep {
    pub prev: (EnvStateId, StateId),
    pub action: usize,
    pub next: (EnvStateId, StateId),
    pub reward: f64,
    pub status: SessionStatus,
}

impl<'a, E: LabeledEnv + ?Sized> ProductSession<'a, E> {
    /// Resets the environment and seeds the product state with the initial
    /// label already consumed: `s0 = (env start, δ(q0, L(start)))`.
    pub fn start(env: &'a mut E, dfa: &'a Dfa, analysis: &'a DfaAnalysis, seed: u64) -> Self {
        let (env_state, label) = env.reset(seed);
        let q = dfa.step(dfa.initial(), label);
        let mut session = ProductSession {
            env,
            dfa,
            analysis,
            env_state,
            q,
            steps: 0,
            status: SessionStatus::Running,
        };
        session.status = session.classify();
        session
    }

    fn classify(&self) -> SessionStatus {
        if self.dfa.is_accepting(self.q) {
            SessionStatus::Accepted
        } else if self.analysis.is_trap(self.q) {
            SessionStatus::Trapped
        } else if self.steps >= self.env.horizon() {
            SessionStatus::Horizon
        } else {
            SessionStatus::Running
        }
    }

    pub fn state(&self) -> (EnvStateId, StateId) {
        (self.env_state, self.q)
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Advances one step, scoring the automaton transition under `ctx`.
    /// Panics if the session is already terminal.
    pub fn step(&mut self, action: usize, ctx: &RewardContext) -> SessionStep {
        assert!(
            !self.status.is_terminal(),
            "step on a terminal session"
        );
        let prev = (self.env_state, self.q);
        let out = self.env.step(action);
        let q_next = self.dfa.step(self.q, out.label);
        let reward = ctx.reward(TransitionView {
            source: self.q,
            target: q_next,
        });
        self.env_state = out.state;
        self.q = q_next;
        self.steps += 1;
        self.status = if out.env_done && !self.dfa.is_accepting(q_next) {
            SessionStatus::EnvDone
        } else {
            self.classify()
        };
        SessionStep {
            prev,
            action,
            next: (out.state, q_next),
            reward,
            status: self.status,
        }
    }
}

/// Sparse tabular action values over product states.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    num_actions: usize,
    default_value: f64,
    values: BTreeMap<(EnvStateId, StateId), Vec<f64>>,
}

impl QTable {
    pub fn new(num_actions: usize) -> Self {
        Self::with_default(num_actions, 0.0)
    }

    /// A table whose unseen entries start at `default_value`. A value above
    /// every achievable return makes greedy control systematically try
    /// untested actions (optimistic initialization).
    pub fn with_default(num_actions: usize, default_value: f64) -> Self {
        QTable {
            num_actions,
            default_value,
            values: BTreeMap::new(),
        }
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_entries(&self) -> usize {
        self.values.len()
    }

    pub fn value(&self, state: (EnvStateId, StateId), action: usize) -> f64 {
        self.values
            .get(&state)
            .map_or(self.default_value, |row| row[action])
    }

    /// Greedy action; ties break to the lowest action index, so unseen
    /// states yield action 0.
    pub fn greedy(&self, state: (EnvStateId, StateId)) -> usize {
        match self.values.get(&state) {
            None => 0,
            Some(row) => {
                let mut best = 0;
                for (a, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = a;
                    }
                }
                best
            }
        }
    }

    pub fn max_value(&self, state: (EnvStateId, StateId)) -> f64 {
        self.values.get(&state).map_or(self.default_value, |row| {
            row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
        })
    }

    pub fn update(&mut self, state: (EnvStateId, StateId), action: usize, target: f64, alpha: f64) {
        let default_value = self.default_value;
        let row = self
            .values
            .entry(state)
            .or_insert_with(|| alloc::vec![default_value; self.num_actions]);
        row[action] += alpha * (target - row[action]);
    }

    pub fn clear(&mut self) {
        self.values.clear();
    }
}

/// Q-learning step-size and exploration parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QConfig {
    pub alpha: f64,
    pub epsilon: f64,
    pub gamma: f64,
    /// Starting value for unseen Q-entries (optimistic when set above the
    /// best achievable return).
    pub q_init: f64,
    /// Drop the table when the reward context advances a round.
    pub reset_on_round: bool,
}

impl Default for QConfig {
    fn default() -> Self {
        QConfig {
            alpha: 0.1,
            epsilon: 0.1,
            gamma: 0.9,
            q_init: 0.0,
            reset_on_round: false,
        }
    }
}

/// When and how the trainer advances adaptive rounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveSchedule {
    /// Window length `N`: the success rate is checked every `N` episodes.
    pub interval: usize,
    /// Success-rate threshold below which a round advance triggers.
    pub lambda: f64,
    /// Greedy episodes used to estimate the best reached partition index.
    pub probe_episodes: usize,
}

impl Default for AdaptiveSchedule {
    fn default() -> Self {
        AdaptiveSchedule {
            interval: 500,
            lambda: 0.95,
            probe_episodes: 20,
        }
    }
}

/// Full trainer configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub qcfg: QConfig,
    pub schedule: AdaptiveSchedule,
    pub budget_episodes: usize,
    /// Evaluation cadence for the training log, in episodes.
    pub report_every: usize,
    /// Greedy episodes per logged evaluation.
    pub report_episodes: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            qcfg: QConfig::default(),
            schedule: AdaptiveSchedule::default(),
            budget_episodes: 5_000,
            report_every: 100,
            report_episodes: 5,
        }
    }
}

/// One logged greedy evaluation during training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalRecord {
    pub episodes: usize,
    pub training_steps: u64,
    pub round: u32,
    pub success_rate: f64,
    pub normalized_return: f64,
    /// Best partition index reached across the evaluation episodes.
    pub empirical_b: usize,
}

/// One adaptive round advance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRecord {
    pub episode: usize,
    /// Round number after the advance.
    pub round: u32,
    /// The probed best partition index that triggered the advance.
    pub b_k: usize,
    pub eta_k: f64,
    pub window_success_rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub evals: Vec<EvalRecord>,
    pub rounds: Vec<RoundRecord>,
    pub total_steps: u64,
}

#[derive(Debug)]
pub struct TrainResult {
    pub qtable: QTable,
    pub log: TrainingLog,
    /// Final reward context (round > 0 if any advances happened).
    pub ctx: RewardContext,
}

/// Greedy-policy summary over a batch of evaluation episodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSummary {
    pub episodes: usize,
    pub success_rate: f64,
    /// Mean sub-goal return, normalized per episode by its own start index.
    pub normalized_return: f64,
    /// Best partition index reached in any episode.
    pub empirical_b: usize,
}

/// Runs one greedy episode; returns (accepted, min partition index reached,
/// normalized sub-goal return).
fn greedy_episode<E: LabeledEnv + ?Sized>(
    env: &mut E,
    dfa: &Dfa,
    analysis: &DfaAnalysis,
    partition: &Partition,
    qtable: &QTable,
    ctx: &RewardContext,
    seed: u64,
) -> (bool, usize, f64) {
    let mut session = ProductSession::start(env, dfa, analysis, seed);
    let rewarder = SubgoalRewarder::new(partition, session.state().1);
    let mut min_index = partition.index(session.state().1);
    while !session.status().is_terminal() {
        let action = qtable.greedy(session.state());
        let step = session.step(action, ctx);
        min_index = min_index.min(partition.index(step.next.1));
    }
    let accepted = session.status() == SessionStatus::Accepted;
    (accepted, min_index, rewarder.normalized_return(min_index))
}

/// Evaluates a fixed table greedily over `episodes` fresh episodes.
pub fn evaluate<E: LabeledEnv + ?Sized>(
    env: &mut E,
    dfa: &Dfa,
    analysis: &DfaAnalysis,
    partition: &Partition,
    qtable: &QTable,
    ctx: &RewardContext,
    episodes: usize,
    seed: u64,
) -> EvalSummary {
    let mut successes = 0usize;
    let mut return_sum = 0.0;
    let mut best = usize::MAX;
    for e in 0..episodes {
        let (ok, min_index, norm) = greedy_episode(
            env,
            dfa,
            analysis,
            partition,
            qtable,
            ctx,
            derive_seed(seed, e as u64),
        );
        successes += ok as usize;
        return_sum += norm;
        best = best.min(min_index);
    }
    EvalSummary {
        episodes,
        success_rate: successes as f64 / episodes.max(1) as f64,
        normalized_return: return_sum / episodes.max(1) as f64,
        empirical_b: best,
    }
}

// Seed-stream tags: training episodes, probe episodes, report evaluations,
// and the exploration RNG each draw from a disjoint stream of the master
// seed, so changing the report cadence never perturbs training.
const STREAM_EXPLORE: u64 = 0;
const STREAM_TRAIN: u64 = 1 << 40;
const STREAM_PROBE: u64 = 2 << 40;
const STREAM_REPORT: u64 = 3 << 40;

/// Q-learning with ε-greedy exploration and adaptive round advances.
///
/// The reward context is taken by value: the result carries the final one.
/// The Q-table persists across round advances unless
/// [`QConfig::reset_on_round`] is set.
pub fn train<E: LabeledEnv + ?Sized>(
    env: &mut E,
    dfa: &Dfa,
    analysis: &DfaAnalysis,
    partition: &Partition,
    mut ctx: RewardContext,
    cfg: &TrainConfig,
    seed: u64,
) -> TrainResult {
    let mut qtable = QTable::with_default(env.num_actions(), cfg.qcfg.q_init);
    let mut log = TrainingLog::default();
    let mut explore = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_EXPLORE));
    let mut window_successes = 0usize;
    let num_actions = env.num_actions();

    for episode in 0..cfg.budget_episodes {
        if cfg.report_every > 0 && episode % cfg.report_every == 0 {
            let summary = evaluate(
                env,
                dfa,
                analysis,
                partition,
                &qtable,
                &ctx,
                cfg.report_episodes,
                derive_seed(seed, STREAM_REPORT + episode as u64),
            );
            log.evals.push(EvalRecord {
                episodes: episode,
                training_steps: log.total_steps,
                round: ctx.round(),
                success_rate: summary.success_rate,
                normalized_return: summary.normalized_return,
                empirical_b: summary.empirical_b,
            });
        }

        let mut session =
            ProductSession::start(env, dfa, analysis, derive_seed(seed, STREAM_TRAIN + episode as u64));
        while !session.status().is_terminal() {
            let state = session.state();
            let action = if next_f64(&mut explore) < cfg.qcfg.epsilon {
                (next_f64(&mut explore) * num_actions as f64) as usize % num_actions
            } else {
                qtable.greedy(state)
            };
            let step = session.step(action, &ctx);
            // natural terminals stop the return; a horizon cut only truncates
            // observation, so it still bootstraps
            let target = match step.status {
                SessionStatus::Accepted | SessionStatus::Trapped => step.reward,
                _ => step.reward + cfg.qcfg.gamma * qtable.max_value(step.next),
            };
            qtable.update(state, action, target, cfg.qcfg.alpha);
            log.total_steps += 1;
        }
        window_successes += (session.status() == SessionStatus::Accepted) as usize;

        let window_done = (episode + 1) % cfg.schedule.interval == 0;
        if window_done {
            let rate = window_successes as f64 / cfg.schedule.interval as f64;
            window_successes = 0;
            if ctx.kind().is_adaptive() && rate < cfg.schedule.lambda {
                let mut b_k = usize::MAX;
                for p in 0..cfg.schedule.probe_episodes {
                    let (_, min_index, _) = greedy_episode(
                        env,
                        dfa,
                        analysis,
                        partition,
                        &qtable,
                        &ctx,
                        derive_seed(seed, STREAM_PROBE + (episode as u64) * 1024 + p as u64),
                    );
                    b_k = b_k.min(min_index);
                }
                // b_k = 0 means the greedy policy already completes the
                // task sometimes; pushing θ below the accepting set is
                // never meaningful
                if b_k >= 1 && b_k < partition.len() {
                    ctx = ctx
                        .advance_round(b_k)
                        .expect("adaptive kind checked above");
                    if cfg.qcfg.reset_on_round {
                        qtable.clear();
                    }
                    log.rounds.push(RoundRecord {
                        episode: episode + 1,
                        round: ctx.round(),
                        b_k,
                        eta_k: ctx.eta_k(),
                        window_success_rate: rate,
                    });
                }
            }
        }
    }

    TrainResult { qtable, log, ctx }
}

fn next_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
