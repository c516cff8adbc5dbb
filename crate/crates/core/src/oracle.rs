//! Exact computations on enumerable products: finite-horizon value
//! iteration, policy evaluation, best possible task progression, symbolic
//! trajectory returns, and the adaptive-round convergence check.
//!
//! Everything here is pure over immutable inputs. Value iteration is
//! stage-indexed (episodes hard-stop at the horizon), and `b(π)` uses
//! positive-probability reachability, which makes it a graph property.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dfa::{Dfa, DfaAnalysis, StateId};
use crate::env::EnvModel;
use crate::metrics::Partition;
use crate::reward::{RewardContext, RewardError, RewardKind, TransitionView};

/// Explicit product of an enumerated environment and a DFA.
#[derive(Debug, Clone)]
pub struct EnumeratedProduct {
    pub num_actions: usize,
    pub horizon: usize,
    /// `(environment model index, DFA state)` per product state.
    pub states: Vec<(usize, StateId)>,
    /// Initial distribution over product states (label already consumed).
    pub initial: Vec<(usize, f64)>,
    /// `transitions[s][a]`: outcome distribution; terminal states absorb.
    pub transitions: Vec<Vec<Vec<(usize, f64)>>>,
    /// Accepting or trap in the DFA component: the episode ends here.
    pub terminal: Vec<bool>,
    pub accepting: Vec<bool>,
}

impl EnumeratedProduct {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn dfa_state(&self, s: usize) -> StateId {
        self.states[s].1
    }
}

/// Expands the reachable product of an exact environment model and a DFA.
/// The initial DFA component is `δ(q0, L(s0))` per the session convention.
pub fn enumerate_product(
    model: &EnvModel,
    dfa: &Dfa,
    analysis: &DfaAnalysis,
) -> EnumeratedProduct {
    let mut states: Vec<(usize, StateId)> = Vec::new();
    let mut index: BTreeMap<(usize, StateId), usize> = BTreeMap::new();
    let mut intern = |key: (usize, StateId), states: &mut Vec<(usize, StateId)>| -> usize {
        *index.entry(key).or_insert_with(|| {
            states.push(key);
            states.len() - 1
        })
    };

    let mut initial: Vec<(usize, f64)> = Vec::new();
    for &(env_idx, label, p) in &model.initial {
        let q = dfa.step(dfa.initial(), label);
        let s = intern((env_idx, q), &mut states);
        match initial.iter_mut().find(|e| e.0 == s) {
            Some(e) => e.1 += p,
            None => initial.push((s, p)),
        }
    }

    let mut transitions: Vec<Vec<Vec<(usize, f64)>>> = Vec::new();
    let mut terminal: Vec<bool> = Vec::new();
    let mut accepting: Vec<bool> = Vec::new();
    let mut next = 0usize;
    while next < states.len() {
        let (env_idx, q) = states[next];
        let is_terminal = dfa.is_accepting(q) || analysis.is_trap(q);
        terminal.push(is_terminal);
        accepting.push(dfa.is_accepting(q));
        let mut per_action = Vec::with_capacity(model.num_actions);
        for a in 0..model.num_actions {
            if is_terminal {
                per_action.push(vec![(next, 1.0)]);
                continue;
            }
            let mut outcomes: Vec<(usize, f64)> = Vec::new();
            for &(env_next, label, p) in &model.transitions[env_idx][a] {
                let q_next = dfa.step(q, label);
                let s = intern((env_next, q_next), &mut states);
                match outcomes.iter_mut().find(|o| o.0 == s) {
                    Some(o) => o.1 += p,
                    None => outcomes.push((s, p)),
                }
            }
            per_action.push(outcomes);
        }
        transitions.push(per_action);
        next += 1;
    }

    EnumeratedProduct {
        num_actions: model.num_actions,
        horizon: model.horizon,
        states,
        initial,
        transitions,
        terminal,
        accepting,
    }
}

/// A policy an oracle can evaluate: stage-indexed or stationary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OraclePolicy {
    /// `actions[t][s]`, one row per stage `0..H`.
    Staged(Vec<Vec<usize>>),
    Stationary(Vec<usize>),
}

impl OraclePolicy {
    pub fn action(&self, t: usize, s: usize) -> usize {
        match self {
            OraclePolicy::Staged(rows) => rows[t][s],
            OraclePolicy::Stationary(row) => {
                let _ = t;
                row[s]
            }
        }
    }
}

fn reward_of(p: &EnumeratedProduct, ctx: &RewardContext, s: usize, s2: usize) -> f64 {
    ctx.reward(TransitionView {
        source: p.dfa_state(s),
        target: p.dfa_state(s2),
    })
}

/// Finite-horizon backward induction. Returns the stage-indexed greedy
/// policy (lowest-index tie-break) and the exact value of the initial
/// distribution.
pub fn value_iteration(
    p: &EnumeratedProduct,
    ctx: &RewardContext,
    gamma: f64,
) -> (OraclePolicy, f64) {
    let n = p.num_states();
    let mut value = vec![0.0f64; n]; // V_H = 0
    let mut rows: Vec<Vec<usize>> = Vec::with_capacity(p.horizon);
    for _t in (0..p.horizon).rev() {
        let mut next_value = vec![0.0f64; n];
        let mut row = vec![0usize; n];
        for s in 0..n {
            if p.terminal[s] {
                continue;
            }
            let mut best_a = 0usize;
            let mut best_v = f64::NEG_INFINITY;
            for (a, outcomes) in p.transitions[s].iter().enumerate() {
                let q: f64 = outcomes
                    .iter()
                    .map(|&(s2, prob)| prob * (reward_of(p, ctx, s, s2) + gamma * value[s2]))
                    .sum();
                if q > best_v {
                    best_v = q;
                    best_a = a;
                }
            }
            next_value[s] = best_v;
            row[s] = best_a;
        }
        value = next_value;
        rows.push(row);
    }
    rows.reverse();
    let v0 = p
        .initial
        .iter()
        .map(|&(s, prob)| prob * value[s])
        .sum();
    (OraclePolicy::Staged(rows), v0)
}

/// Exact finite-horizon value of a fixed policy at the initial distribution.
pub fn policy_evaluation(
    p: &EnumeratedProduct,
    policy: &OraclePolicy,
    ctx: &RewardContext,
    gamma: f64,
) -> f64 {
    let n = p.num_states();
    let mut value = vec![0.0f64; n];
    for t in (0..p.horizon).rev() {
        let mut next_value = vec![0.0f64; n];
        for s in 0..n {
            if p.terminal[s] {
                continue;
            }
            let a = policy.action(t, s);
            next_value[s] = p.transitions[s][a]
                .iter()
                .map(|&(s2, prob)| prob * (reward_of(p, ctx, s, s2) + gamma * value[s2]))
                .sum();
        }
        value = next_value;
    }
    p.initial.iter().map(|&(s, prob)| prob * value[s]).sum()
}

/// Product states reachable with positive probability within the horizon,
/// under a fixed policy (`Some`) or under any action choice (`None`).
fn reachable_states(p: &EnumeratedProduct, policy: Option<&OraclePolicy>) -> Vec<bool> {
    let n = p.num_states();
    // stage-aware search: a staged policy can choose differently per stage
    let mut seen_at = vec![vec![false; n]; p.horizon + 1];
    let mut reached = vec![false; n];
    let mut frontier: Vec<(usize, usize)> = Vec::new();
    for &(s, prob) in &p.initial {
        if prob > 0.0 && !seen_at[0][s] {
            seen_at[0][s] = true;
            reached[s] = true;
            frontier.push((0, s));
        }
    }
    while let Some((t, s)) = frontier.pop() {
        if p.terminal[s] || t >= p.horizon {
            continue;
        }
        let actions: Vec<usize> = match policy {
            Some(pi) => vec![pi.action(t, s)],
            None => (0..p.num_actions).collect(),
        };
        for a in actions {
            for &(s2, prob) in &p.transitions[s][a] {
                if prob > 0.0 && !seen_at[t + 1][s2] {
                    seen_at[t + 1][s2] = true;
                    reached[s2] = true;
                    frontier.push((t + 1, s2));
                }
            }
        }
    }
    reached
}

/// `b(π)`: the lowest partition index among product states the policy
/// reaches with positive probability.
pub fn policy_progression(
    p: &EnumeratedProduct,
    partition: &Partition,
    policy: &OraclePolicy,
) -> usize {
    min_index(p, partition, &reachable_states(p, Some(policy)))
}

/// `b*`: the lowest partition index reachable under any action choice.
pub fn best_progression(p: &EnumeratedProduct, partition: &Partition) -> usize {
    min_index(p, partition, &reachable_states(p, None))
}

fn min_index(p: &EnumeratedProduct, partition: &Partition, reached: &[bool]) -> usize {
    (0..p.num_states())
        .filter(|&s| reached[s])
        .map(|s| partition.index(p.dfa_state(s)))
        .min()
        .expect("initial distribution is non-empty")
}

/// A policy built from environment events only: the automaton moves at the
/// listed timesteps (1-based) and self-loops everywhere else.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicTrajectory {
    pub start: StateId,
    /// `(timestep, source, target)`, timesteps strictly increasing from 1.
    pub events: Vec<(usize, StateId, StateId)>,
    /// Total steps taken (= horizon cut or the terminal-event step).
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrajectoryError {
    NonIncreasingTimesteps,
    EventPastLength,
    BrokenChain { timestep: usize },
    ContinuesPastTerminal { timestep: usize },
}

impl fmt::Display for TrajectoryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrajectoryError::NonIncreasingTimesteps => {
                write!(f, "event timesteps must be strictly increasing and start at 1")
            }
            TrajectoryError::EventPastLength => write!(f, "event beyond the trajectory length"),
            TrajectoryError::BrokenChain { timestep } => {
                write!(f, "event at step {timestep} does not start in the current state")
            }
            TrajectoryError::ContinuesPastTerminal { timestep } => write!(
                f,
                "trajectory continues past an accepting or trap state entered at step {timestep}"
            ),
        }
    }
}

impl core::error::Error for TrajectoryError {}

/// Discounted return `Σ_t γ^t · r_{t+1}` of a symbolic trajectory, with
/// accrual stopping at acceptance, trap, or the stated length.
pub fn trajectory_return(
    tr: &SymbolicTrajectory,
    ctx: &RewardContext,
    gamma: f64,
) -> Result<f64, TrajectoryError> {
    let mut last_t = 0usize;
    for &(t, _, _) in &tr.events {
        if t <= last_t {
            return Err(TrajectoryError::NonIncreasingTimesteps);
        }
        if t > tr.length {
            return Err(TrajectoryError::EventPastLength);
        }
        last_t = t;
    }
    let analysis = ctx.analysis();
    let mut q = tr.start;
    let mut events = tr.events.iter().peekable();
    let mut total = 0.0;
    let mut discount = 1.0;
    for t in 1..=tr.length {
        let target = match events.peek() {
            Some(&&(et, src, tgt)) if et == t => {
                if src != q {
                    return Err(TrajectoryError::BrokenChain { timestep: t });
                }
                events.next();
                tgt
            }
            _ => q,
        };
        total += discount
            * ctx.reward(TransitionView {
                source: q,
                target,
            });
        discount *= gamma;
        q = target;
        // the accepting block is B_0 by construction
        let terminal = analysis.is_trap(q) || ctx.partition().index(q) == 0;
        if terminal && t < tr.length {
            return Err(TrajectoryError::ContinuesPastTerminal { timestep: t });
        }
    }
    Ok(total)
}

/// One adaptive round of the convergence loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundStep {
    pub round: u32,
    /// Optimal value under the round-k context.
    pub value: f64,
    /// `b(π*_k)`.
    pub b_pi: usize,
    /// Previous round's optimal policy re-evaluated under this context.
    pub prev_under_new: Option<f64>,
    /// Its value under its own context, for the invariance comparison.
    pub prev_under_old: Option<f64>,
    /// Lemma-2 implication held at this step.
    pub lemma2_ok: bool,
    /// Exact return invariance held (checked for adaptive progression,
    /// where the telescoping argument applies verbatim).
    pub invariance_ok: Option<bool>,
}

/// Outcome of the Theorem-1 convergence loop.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoremReport {
    pub kind: RewardKind,
    pub theta: f64,
    pub b_star: usize,
    pub rounds: Vec<RoundStep>,
    pub converged: bool,
    pub final_b: usize,
    /// Lower bound `σ / (p · γ^{H-1})` suggested when θ appears too small.
    pub suggested_theta: Option<f64>,
}

impl TheoremReport {
    pub fn rounds_used(&self) -> usize {
        self.rounds.len()
    }

    pub fn lemma2_holds(&self) -> bool {
        self.rounds.iter().all(|r| r.lemma2_ok)
    }

    pub fn invariance_holds(&self) -> bool {
        self.rounds.iter().all(|r| r.invariance_ok.unwrap_or(true))
    }
}

const VALUE_TOL: f64 = 1e-9;

/// Runs the adaptive-round loop to convergence: compute the optimal policy,
/// read off its task progression, stop when it matches `b*`, otherwise
/// advance the reward context one round. Fails (converged = false) after
/// `|partition| + margin` rounds and reports a θ lower bound.
pub fn theorem_check(
    p: &EnumeratedProduct,
    partition: &Partition,
    ctx0: RewardContext,
    gamma: f64,
    margin: Option<usize>,
) -> Result<TheoremReport, RewardError> {
    if !ctx0.kind().is_adaptive() {
        return Err(RewardError::NotAdaptive(ctx0.kind()));
    }
    let b_star = best_progression(p, partition);
    let cap = partition.len() + margin.unwrap_or(2 * partition.len());
    let kind = ctx0.kind();
    let theta = ctx0.theta();
    let mut ctx = ctx0;
    let mut rounds: Vec<RoundStep> = Vec::new();
    let mut prev: Option<(OraclePolicy, f64, usize)> = None;
    let mut converged = false;
    let mut final_b = usize::MAX;

    while rounds.len() < cap {
        let (pi, value) = value_iteration(p, &ctx, gamma);
        let b_pi = policy_progression(p, partition, &pi);
        let (prev_under_new, prev_under_old, lemma2_ok, invariance_ok) = match &prev {
            None => (None, None, true, None),
            Some((prev_pi, prev_value, prev_b)) => {
                let under_new = policy_evaluation(p, prev_pi, &ctx, gamma);
                // Lemma 2: a strictly better optimum under the advanced
                // reward implies strictly better task progression
                let lemma2_ok = value <= under_new + VALUE_TOL || b_pi < *prev_b;
                let invariance_ok = (kind == RewardKind::AdaptiveProgression)
                    .then(|| (under_new - prev_value).abs() <= VALUE_TOL);
                (Some(under_new), Some(*prev_value), lemma2_ok, invariance_ok)
            }
        };
        rounds.push(RoundStep {
            round: ctx.round(),
            value,
            b_pi,
            prev_under_new,
            prev_under_old,
            lemma2_ok,
            invariance_ok,
        });
        final_b = b_pi;
        if b_pi == b_star {
            converged = true;
            break;
        }
        prev = Some((pi, value, b_pi));
        ctx = ctx.advance_round(b_pi)?;
    }

    let suggested_theta = if converged {
        None
    } else {
        theta_lower_bound(p, partition, &ctx, gamma, b_star)
    };
    Ok(TheoremReport {
        kind,
        theta,
        b_star,
        rounds,
        converged,
        final_b,
        suggested_theta,
    })
}

/// Appendix-style θ bound `σ / (p · γ^{H-1})`: σ is the return the current
/// optimum holds over the best `b*`-reaching policy, and p the highest
/// probability of actually reaching the `b*` set within the horizon.
fn theta_lower_bound(
    p: &EnumeratedProduct,
    partition: &Partition,
    ctx: &RewardContext,
    gamma: f64,
    b_star: usize,
) -> Option<f64> {
    let n = p.num_states();
    let in_target: Vec<bool> = (0..n)
        .map(|s| partition.index(p.dfa_state(s)) == b_star)
        .collect();
    // max-probability-of-reaching DP and its greedy policy
    let mut prob = vec![0.0f64; n];
    let mut rows: Vec<Vec<usize>> = Vec::with_capacity(p.horizon);
    for (s, &hit) in in_target.iter().enumerate() {
        prob[s] = hit as u8 as f64;
    }
    for _t in (0..p.horizon).rev() {
        let mut next = vec![0.0f64; n];
        let mut row = vec![0usize; n];
        for s in 0..n {
            if in_target[s] {
                next[s] = 1.0;
                continue;
            }
            if p.terminal[s] {
                continue;
            }
            let mut best_a = 0usize;
            let mut best_p = f64::NEG_INFINITY;
            for (a, outcomes) in p.transitions[s].iter().enumerate() {
                let reach: f64 = outcomes.iter().map(|&(s2, pr)| pr * prob[s2]).sum();
                if reach > best_p {
                    best_p = reach;
                    best_a = a;
                }
            }
            next[s] = best_p;
            row[s] = best_a;
        }
        prob = next;
        rows.push(row);
    }
    rows.reverse();
    let reach_prob: f64 = p.initial.iter().map(|&(s, pr)| pr * prob[s]).sum();
    if reach_prob <= 0.0 {
        return None; // b* genuinely unreachable: θ is not the problem
    }
    let reaching = OraclePolicy::Staged(rows);
    let (_, optimal) = value_iteration(p, ctx, gamma);
    let sigma = optimal - policy_evaluation(p, &reaching, ctx, gamma);
    if sigma <= 0.0 {
        return None;
    }
    let mut discount = 1.0;
    for _ in 1..p.horizon {
        discount *= gamma;
    }
    Some(sigma / (reach_prob * discount))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dfa::{analyze, compile, fixture_dfa, minimize};
    use crate::env::{
        example_grid, ExampleGridVariant, FlagGrid, GridMap, LabeledEnv, EXAMPLE_FORMULA,
    };
    use crate::letter::Alphabet;
    use crate::parse::parse;
    use crate::reward::{context_for, RewardKind};

    fn corridor_product() -> (EnumeratedProduct, RewardContext) {
        let map = GridMap::parse("A.b").unwrap();
        let ap = Alphabet::new(["b"]).unwrap();
        let env = FlagGrid::new(map, ap.clone(), 0.0, 6);
        let f = parse("F b", &ap).unwrap();
        let dfa = compile(&f, &ap).unwrap();
        let analysis = analyze(&dfa);
        let model = env.model().unwrap();
        let product = enumerate_product(&model, &dfa, &analysis);
        let ctx = context_for(&dfa, RewardKind::Progression, 0.1, None);
        (product, ctx)
    }

    #[test]
    fn corridor_product_stays_small_and_deterministic() {
        let (product, _) = corridor_product();
        assert!(product.num_states() <= 6);
        for (s, row) in product.transitions.iter().enumerate() {
            for outcomes in row {
                assert_eq!(outcomes.len(), 1, "state {s} not a point mass");
                assert_eq!(outcomes[0].1, 1.0);
            }
        }
    }

    #[test]
    fn probabilities_sum_to_one_under_noise() {
        let env = example_grid(ExampleGridVariant::Full, 0.1);
        let ap = env.alphabet().clone();
        let f = parse(EXAMPLE_FORMULA, &ap).unwrap();
        let dfa = minimize(&compile(&f, &ap).unwrap());
        let analysis = analyze(&dfa);
        let product = enumerate_product(&env.model().unwrap(), &dfa, &analysis);
        for row in &product.transitions {
            for outcomes in row {
                let total: f64 = outcomes.iter().map(|&(_, p)| p).sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn corridor_value_iteration_is_the_discounted_two_step_reach() {
        let (product, ctx) = corridor_product();
        let (pi, v) = value_iteration(&product, &ctx, 0.9);
        // two moves right; the single unit of progression lands on step 2
        assert!((v - 0.9).abs() < 1e-12, "v = {v}");
        assert!((policy_evaluation(&product, &pi, &ctx, 0.9) - v).abs() < 1e-15);
    }

    #[test]
    fn vi_dominates_random_policies() {
        let (product, ctx) = corridor_product();
        let (_, v) = value_iteration(&product, &ctx, 0.9);
        let n = product.num_states();
        let mut seed = 0x12345u64;
        for _ in 0..1000 {
            let actions: Vec<usize> = (0..n)
                .map(|_| {
                    seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    ((seed >> 33) % product.num_actions as u64) as usize
                })
                .collect();
            let pv = policy_evaluation(&product, &OraclePolicy::Stationary(actions), &ctx, 0.9);
            assert!(pv <= v + 1e-12);
        }
    }

    fn fixture_trajectories() -> [SymbolicTrajectory; 3] {
        [
            SymbolicTrajectory {
                start: 0,
                events: alloc::vec![(10, 0, 2)],
                length: 25,
            },
            SymbolicTrajectory {
                start: 0,
                events: alloc::vec![(16, 0, 1), (20, 1, 4)],
                length: 20,
            },
            SymbolicTrajectory {
                start: 0,
                events: alloc::vec![(5, 0, 3)],
                length: 5,
            },
        ]
    }

    #[test]
    fn progression_returns_match_the_worked_example() {
        let dfa = fixture_dfa();
        let ctx = context_for(&dfa, RewardKind::Progression, 0.1, Some(100.0));
        let [t1, t2, t3] = fixture_trajectories();
        let v1 = trajectory_return(&t1, &ctx, 0.9).unwrap();
        let v2 = trajectory_return(&t2, &ctx, 0.9).unwrap();
        let v3 = trajectory_return(&t3, &ctx, 0.9).unwrap();
        assert!((v1 - 0.9f64.powi(9)).abs() < 1e-12);
        assert!((v2 - (0.9f64.powi(15) + 0.9f64.powi(19))).abs() < 1e-12);
        assert_eq!(v3, 0.0);
        assert!(v1 > v2, "the shortcut must dominate under plain progression");
    }

    #[test]
    fn adaptive_round_one_flips_the_preference() {
        let dfa = fixture_dfa();
        let ctx = context_for(&dfa, RewardKind::AdaptiveProgression, 0.1, Some(100.0))
            .advance_round(1)
            .unwrap();
        let [t1, t2, _] = fixture_trajectories();
        let v1 = trajectory_return(&t1, &ctx, 0.9).unwrap();
        let v2 = trajectory_return(&t2, &ctx, 0.9).unwrap();
        assert!((v1 - 0.387).abs() < 0.01);
        assert!((v2 - 13.85).abs() < 0.01);
        assert!(v2 > v1);
    }

    #[test]
    fn trajectory_validation_rejects_inconsistencies() {
        let dfa = fixture_dfa();
        let ctx = context_for(&dfa, RewardKind::Progression, 0.1, Some(100.0));
        let broken = SymbolicTrajectory {
            start: 0,
            events: alloc::vec![(3, 1, 4)],
            length: 10,
        };
        assert_eq!(
            trajectory_return(&broken, &ctx, 0.9),
            Err(TrajectoryError::BrokenChain { timestep: 3 })
        );
        let continues = SymbolicTrajectory {
            start: 0,
            events: alloc::vec![(2, 0, 3)],
            length: 10,
        };
        assert_eq!(
            trajectory_return(&continues, &ctx, 0.9),
            Err(TrajectoryError::ContinuesPastTerminal { timestep: 2 })
        );
        let unordered = SymbolicTrajectory {
            start: 0,
            events: alloc::vec![(5, 0, 1), (5, 1, 4)],
            length: 10,
        };
        assert_eq!(
            trajectory_return(&unordered, &ctx, 0.9),
            Err(TrajectoryError::NonIncreasingTimesteps)
        );
    }

    fn grid_setup(
        variant: ExampleGridVariant,
    ) -> (EnumeratedProduct, Partition, crate::dfa::Dfa) {
        let env = example_grid(variant, 0.0);
        let ap = env.alphabet().clone();
        let f = parse(EXAMPLE_FORMULA, &ap).unwrap();
        let dfa = minimize(&compile(&f, &ap).unwrap());
        let analysis = analyze(&dfa);
        let product = enumerate_product(&env.model().unwrap(), &dfa, &analysis);
        let d0 = crate::metrics::distances(&dfa, &analysis);
        let partition = crate::metrics::partition(&dfa, &d0);
        (product, partition, dfa)
    }

    #[test]
    fn best_progression_on_the_example_grids() {
        let (product, partition, _) = grid_setup(ExampleGridVariant::Full);
        assert_eq!(best_progression(&product, &partition), 0);
        let (product, partition, _) = grid_setup(ExampleGridVariant::NoBlue);
        assert_eq!(best_progression(&product, &partition), 1);
        let (product, partition, _) = grid_setup(ExampleGridVariant::NoOrange);
        assert_eq!(best_progression(&product, &partition), 1);
    }

    #[test]
    fn theorem_loop_converges_on_the_feasible_grid() {
        let (product, partition, dfa) = grid_setup(ExampleGridVariant::Full);
        let ctx = context_for(&dfa, RewardKind::AdaptiveProgression, 0.1, Some(100.0));
        let report = theorem_check(&product, &partition, ctx, 0.9, None).unwrap();
        assert!(report.converged);
        assert_eq!(report.final_b, 0);
        assert_eq!(report.b_star, 0);
        assert!(report.rounds_used() <= partition.len());
        assert!(report.lemma2_holds());
        assert!(report.invariance_holds());
        // round 0 is fooled by the shortcut, so at least one advance happens
        assert!(report.rounds_used() >= 2);
    }

    #[test]
    fn theorem_loop_accepts_round_zero_when_unfoolable() {
        let map = GridMap::parse("A.b").unwrap();
        let ap = Alphabet::new(["b"]).unwrap();
        let env = FlagGrid::new(map, ap.clone(), 0.0, 6);
        let dfa = compile(&parse("F b", &ap).unwrap(), &ap).unwrap();
        let analysis = analyze(&dfa);
        let product = enumerate_product(&env.model().unwrap(), &dfa, &analysis);
        let d0 = crate::metrics::distances(&dfa, &analysis);
        let partition = crate::metrics::partition(&dfa, &d0);
        let ctx = context_for(&dfa, RewardKind::AdaptiveProgression, 0.1, Some(100.0));
        let report = theorem_check(&product, &partition, ctx, 0.9, None).unwrap();
        assert!(report.converged);
        assert_eq!(report.rounds_used(), 1);
    }

    #[test]
    fn too_small_theta_reports_a_bound() {
        let (product, partition, dfa) = grid_setup(ExampleGridVariant::Full);
        let ctx = context_for(&dfa, RewardKind::AdaptiveProgression, 0.1, Some(1.01));
        let report = theorem_check(&product, &partition, ctx, 0.9, Some(1)).unwrap();
        if !report.converged {
            let bound = report.suggested_theta.expect("bound reported");
            assert!(bound > 1.01);
        }
    }
}
