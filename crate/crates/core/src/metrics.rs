//! Distance-to-acceptance values, state partitions, and the progression
//! function over DFA states.
//!
//! The distance recursion is a shortest-path problem with non-negative edge
//! weights `h(q,q') = |AP| - log2(|δ_{q,q'}|)`, solved by Dijkstra relaxation
//! from the accepting set over reversed edges. Summation order is therefore
//! fixed as path order from the accepting side, which keeps the values
//! bit-for-bit reproducible and lets the partition group by exact equality.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dfa::{Dfa, DfaAnalysis, StateId};

/// Distance-to-acceptance values for one adaptive round.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTable {
    round: u32,
    values: Vec<f64>,
}

impl DistanceTable {
    /// The adaptive round this table belongs to (0 for the base values).
    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn value(&self, q: StateId) -> f64 {
        self.values[q]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn num_states(&self) -> usize {
        self.values.len()
    }
}

/// Ordered partition `B_0, B_1, ...` of the DFA state space: `B_0 = Q_F`,
/// the rest grouped by ascending distinct round-0 distance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    sets: Vec<Vec<StateId>>,
    index_of: Vec<usize>,
}

impl Partition {
    /// Number of sets.
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn set(&self, i: usize) -> &[StateId] {
        &self.sets[i]
    }

    pub fn sets(&self) -> &[Vec<StateId>] {
        &self.sets
    }

    /// Partition index of a state.
    pub fn index(&self, q: StateId) -> usize {
        self.index_of[q]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricsError {
    /// The update rule requires θ > 1.
    ThetaTooSmall(f64),
    BadPartitionIndex { given: usize, len: usize },
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::ThetaTooSmall(t) => write!(f, "theta must be > 1, got {t}"),
            MetricsError::BadPartitionIndex { given, len } => {
                write!(f, "partition index {given} out of range (partition has {len} sets)")
            }
        }
    }
}

impl core::error::Error for MetricsError {}

/// Difficulty of moving from `q` to `q'`: `|AP| - log2(|δ_{q,q'}|)`.
/// Undefined when `|δ_{q,q'}| = 0`; callers must not ask.
pub fn difficulty(analysis: &DfaAnalysis, ap_size: usize, q: StateId, q2: StateId) -> f64 {
    let count = analysis.count(q, q2);
    debug_assert!(count >= 1, "difficulty undefined for non-successors");
    ap_size as f64 - libm::log2(count as f64)
}

/// Round-0 distance-to-acceptance values: Dijkstra over reversed edges from
/// the accepting set; states that cannot reach acceptance get `|AP|·|Q|`.
pub fn distances(dfa: &Dfa, analysis: &DfaAnalysis) -> DistanceTable {
    let n = dfa.num_states();
    let ap_size = dfa.alphabet().len();
    let unreachable_value = (ap_size * n) as f64;
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    for &q in dfa.accepting() {
        dist[q] = 0.0;
    }
    // Dijkstra without a heap: state counts are small
    loop {
        let mut best: Option<StateId> = None;
        for q in 0..n {
            if !done[q] && dist[q].is_finite() {
                if best.map_or(true, |b| dist[q] < dist[b]) {
                    best = Some(q);
                }
            }
        }
        let Some(u) = best else { break };
        done[u] = true;
        // relax reversed edges: predecessors q with an edge q -> u
        for q in 0..n {
            if done[q] || q == u || analysis.count(q, u) == 0 || dfa.is_accepting(q) {
                continue;
            }
            let candidate = dist[u] + difficulty(analysis, ap_size, q, u);
            if candidate < dist[q] {
                dist[q] = candidate;
            }
        }
    }
    let values = (0..n)
        .map(|q| {
            if dfa.is_accepting(q) {
                0.0
            } else if dist[q].is_finite() {
                dist[q]
            } else {
                unreachable_value
            }
        })
        .collect();
    DistanceTable { round: 0, values }
}

/// Groups states into `B_0 = Q_F` and, for the remaining states, one set per
/// distinct round-0 distance in ascending order.
pub fn partition(dfa: &Dfa, table: &DistanceTable) -> Partition {
    debug_assert_eq!(table.round(), 0, "partition is defined on round-0 values");
    let n = dfa.num_states();
    let b0: Vec<StateId> = dfa.accepting().iter().copied().collect();
    let mut rest: Vec<StateId> = (0..n).filter(|q| !dfa.is_accepting(*q)).collect();
    // distances are reproducible bit-for-bit, so exact comparison groups them
    rest.sort_by(|&a, &b| {
        table
            .value(a)
            .partial_cmp(&table.value(b))
            .expect("distances are finite")
            .then(a.cmp(&b))
    });
    let mut sets = vec![b0];
    for q in rest {
        let start_new = match sets.last() {
            Some(last) if sets.len() > 1 => {
                table.value(*last.last().expect("non-empty set")) != table.value(q)
            }
            _ => true,
        };
        if start_new {
            sets.push(vec![q]);
        } else {
            sets.last_mut().expect("non-empty").push(q);
        }
    }
    let mut index_of = vec![0usize; n];
    for (i, set) in sets.iter().enumerate() {
        for &q in set {
            index_of[q] = i;
        }
    }
    Partition { sets, index_of }
}

/// The progression function `ρ(q,q')` under the given distance table:
/// `max{0, d(q) - d(q')}` when `q'` is a successor and cannot reach back to
/// `q`; zero otherwise (self-loops, backward edges, cycles).
pub fn progression(
    table: &DistanceTable,
    analysis: &DfaAnalysis,
    q: StateId,
    q2: StateId,
) -> f64 {
    if analysis.count(q, q2) == 0 || analysis.reaches(q2, q) {
        return 0.0;
    }
    let drop = table.value(q) - table.value(q2);
    if drop > 0.0 {
        drop
    } else {
        0.0
    }
}

/// The round-k update rule: add θ to every state in `B_i` with `i ≥ b_k`.
/// `b_k = partition.len()` selects no set and leaves values unchanged.
pub fn update_distances(
    table: &DistanceTable,
    partition: &Partition,
    b_k: usize,
    theta: f64,
) -> Result<DistanceTable, MetricsError> {
    if !(theta > 1.0) {
        return Err(MetricsError::ThetaTooSmall(theta));
    }
    if b_k > partition.len() {
        return Err(MetricsError::BadPartitionIndex {
            given: b_k,
            len: partition.len(),
        });
    }
    let values = table
        .values
        .iter()
        .enumerate()
        .map(|(q, &d)| if partition.index(q) >= b_k { d + theta } else { d })
        .collect();
    Ok(DistanceTable {
        round: table.round + 1,
        values,
    })
}
