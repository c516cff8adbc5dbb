//! The five reward functions over product-MDP transitions and the per-round
//! adaptive state.
//!
//! All rewards depend only on the DFA component of a transition; environment
//! state and action are carried by the caller but unused. A [`RewardContext`]
//! is an immutable value per adaptive round; [`RewardContext::advance_round`]
//! produces the next round's context.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::dfa::{DfaAnalysis, StateId};
use crate::metrics::{self, DistanceTable, MetricsError, Partition};

/// Which reward function is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardKind {
    Progression,
    Hybrid,
    AdaptiveProgression,
    AdaptiveHybrid,
    /// Baseline: reward 1 for any transition that decreases the round-0
    /// distance from a state that can still reach acceptance.
    Naive,
}

impl RewardKind {
    pub fn is_adaptive(&self) -> bool {
        matches!(
            self,
            RewardKind::AdaptiveProgression | RewardKind::AdaptiveHybrid
        )
    }
}

/// A DFA-side view of one product transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransitionView {
    pub source: StateId,
    pub target: StateId,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RewardError {
    NotAdaptive(RewardKind),
    Metrics(MetricsError),
}

impl fmt::Display for RewardError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RewardError::NotAdaptive(kind) => {
                write!(f, "advance_round called on non-adaptive reward kind {kind:?}")
            }
            RewardError::Metrics(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for RewardError {}

impl From<MetricsError> for RewardError {
    fn from(e: MetricsError) -> Self {
        RewardError::Metrics(e)
    }
}

/// Immutable per-round reward state.
#[derive(Debug, Clone)]
pub struct RewardContext {
    kind: RewardKind,
    round: u32,
    d0: DistanceTable,
    dk: DistanceTable,
    partition: Partition,
    analysis: Arc<DfaAnalysis>,
    eta0: f64,
    eta_k: f64,
    theta: f64,
}

impl RewardContext {
    /// Builds a round-0 context. `eta0` is used by the hybrid kinds only;
    /// `theta` must exceed 1 for the adaptive kinds.
    pub fn new(
        kind: RewardKind,
        d0: DistanceTable,
        partition: Partition,
        analysis: Arc<DfaAnalysis>,
        eta0: f64,
        theta: f64,
    ) -> Self {
        debug_assert_eq!(d0.round(), 0);
        debug_assert!((0.0..=1.0).contains(&eta0));
        RewardContext {
            kind,
            round: 0,
            dk: d0.clone(),
            d0,
            partition,
            analysis,
            eta0,
            eta_k: eta0,
            theta,
        }
    }

    pub fn kind(&self) -> RewardKind {
        self.kind
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn eta0(&self) -> f64 {
        self.eta0
    }

    pub fn eta_k(&self) -> f64 {
        self.eta_k
    }

    pub fn d0(&self) -> &DistanceTable {
        &self.d0
    }

    pub fn dk(&self) -> &DistanceTable {
        &self.dk
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn analysis(&self) -> &DfaAnalysis {
        &self.analysis
    }

    /// Evaluates the active reward function on one product transition.
    /// Pure: repeated evaluation is bit-identical.
    pub fn reward(&self, tv: TransitionView) -> f64 {
        let (q, q2) = (tv.source, tv.target);
        match self.kind {
            RewardKind::Progression => metrics::progression(&self.d0, &self.analysis, q, q2),
            RewardKind::Hybrid => {
                if q == q2 {
                    self.eta0 * -self.d0.value(q)
                } else {
                    (1.0 - self.eta0) * metrics::progression(&self.d0, &self.analysis, q, q2)
                }
            }
            RewardKind::AdaptiveProgression => self.adaptive_progression(q, q2),
            RewardKind::AdaptiveHybrid => {
                if q == q2 {
                    self.eta_k * -self.dk.value(q)
                } else {
                    (1.0 - self.eta_k) * self.adaptive_progression(q, q2)
                }
            }
            RewardKind::Naive => {
                if self.d0.value(q) > self.d0.value(q2) && self.analysis.reaches_accepting(q) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `max{ρ⁰(q,q'), ρᵏ(q,q')}`. The max is kept as written even though the
    /// update rule makes ρᵏ ≥ ρ⁰ pointwise; the redundancy is asserted by a
    /// property test rather than assumed.
    fn adaptive_progression(&self, q: StateId, q2: StateId) -> f64 {
        let r0 = metrics::progression(&self.d0, &self.analysis, q, q2);
        let rk = metrics::progression(&self.dk, &self.analysis, q, q2);
        if rk > r0 {
            rk
        } else {
            r0
        }
    }

    /// Advances to round k+1: distances updated from partition index `b_k`
    /// upward, `η` divided by θ. Round-0 values are untouched.
    pub fn advance_round(&self, b_k: usize) -> Result<RewardContext, RewardError> {
        if !self.kind.is_adaptive() {
            return Err(RewardError::NotAdaptive(self.kind));
        }
        let dk = metrics::update_distances(&self.dk, &self.partition, b_k, self.theta)?;
        let round = self.round + 1;
        Ok(RewardContext {
            kind: self.kind,
            round,
            d0: self.d0.clone(),
            dk,
            partition: self.partition.clone(),
            analysis: Arc::clone(&self.analysis),
            eta0: self.eta0,
            // η_k = η₀ / θᵏ exactly; recomputed from η₀ so rounding does not drift
            eta_k: self.eta0 / theta_pow(self.theta, round),
            theta: self.theta,
        })
    }
}

fn theta_pow(theta: f64, k: u32) -> f64 {
    let mut p = 1.0;
    for _ in 0..k {
        p *= theta;
    }
    p
}

/// Heuristic default for θ: the sum of all round-0 progression
/// values, floored at 2 to respect θ > 1.
pub fn default_theta(d0: &DistanceTable, analysis: &DfaAnalysis) -> f64 {
    let n = d0.num_states();
    let mut sum = 0.0;
    for q in 0..n {
        for q2 in 0..n {
            sum += metrics::progression(d0, analysis, q, q2);
        }
    }
    if sum < 2.0 {
        2.0
    } else {
        sum
    }
}

/// Convenience bundle for setting up reward contexts from a DFA.
pub fn context_for(
    dfa: &crate::dfa::Dfa,
    kind: RewardKind,
    eta0: f64,
    theta: Option<f64>,
) -> RewardContext {
    let analysis = Arc::new(crate::dfa::analyze(dfa));
    let d0 = metrics::distances(dfa, &analysis);
    let part = metrics::partition(dfa, &d0);
    let theta = theta.unwrap_or_else(|| default_theta(&d0, &analysis));
    RewardContext::new(kind, d0, part, analysis, eta0, theta)
}

/// All (source, target) DFA pairs, for exhaustive reward sweeps in tests and
/// oracle checks.
pub fn all_transition_views(num_states: usize) -> Vec<TransitionView> {
    let mut v = Vec::with_capacity(num_states * num_states);
    for q in 0..num_states {
        for q2 in 0..num_states {
            v.push(TransitionView {
                source: q,
                target: q2,
            });
        }
    }
    v
}
