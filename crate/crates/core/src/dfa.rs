//! Good-prefix DFA construction, minimization, and structural analysis.
//!
//! The automaton is built by letter-by-letter formula progression: states are
//! distinct canonical residuals, which directly yields a deterministic,
//! complete automaton over the alphabet `2^AP`. Minimization merges residual
//! states that canonicalization misses. Guard storage is explicit (one
//! successor per letter), so transition multiplicities `|δ_{q,q'}|` are exact.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::formula::Formula;
use crate::letter::{Alphabet, Letter};

/// Index of a DFA state.
pub type StateId = usize;

/// Default cap on explicit state construction.
pub const DEFAULT_STATE_LIMIT: usize = 10_000;

/// Cap on the syntax-tree size of any single residual produced during
/// compilation. Formulas whose progression closure keeps growing past
/// this are rejected rather than chased forever.
pub const RESIDUAL_NODE_LIMIT: usize = 1_000;

/// A complete deterministic finite automaton over the alphabet `2^AP`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dfa {
    ap: Alphabet,
    initial: StateId,
    accepting: BTreeSet<StateId>,
    /// `trans[q][letter_bits]` is the successor of `q` on that letter.
    trans: Vec<Vec<StateId>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DfaError {
    StateLimitExceeded(usize),
    /// A residual formula outgrew [`RESIDUAL_NODE_LIMIT`]; the formula's
    /// progression closure is not representable compactly.
    ResidualTooLarge(usize),
    /// Import-side violation: a state is missing a successor for some letter.
    NotTotal { state: StateId, letter_bits: u32 },
    InvalidState(StateId),
}

impl fmt::Display for DfaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DfaError::StateLimitExceeded(cap) => {
                write!(f, "state count exceeds the construction cap of {cap}")
            }
            DfaError::ResidualTooLarge(cap) => {
                write!(f, "a residual formula exceeds the size cap of {cap} nodes")
            }
            DfaError::NotTotal { state, letter_bits } => write!(
                f,
                "transition function is not total: state {state} has no successor for letter {letter_bits:#b}"
            ),
            DfaError::InvalidState(q) => write!(f, "state index {q} out of range"),
        }
    }
}

impl core::error::Error for DfaError {}

impl Dfa {
    /// Assembles a DFA from explicit parts, checking totality and ranges.
    pub fn from_parts(
        ap: Alphabet,
        initial: StateId,
        accepting: BTreeSet<StateId>,
        trans: Vec<Vec<StateId>>,
    ) -> Result<Self, DfaError> {
        let n = trans.len();
        if initial >= n {
            return Err(DfaError::InvalidState(initial));
        }
        if let Some(&q) = accepting.iter().find(|&&q| q >= n) {
            return Err(DfaError::InvalidState(q));
        }
        for (q, row) in trans.iter().enumerate() {
            if row.len() != ap.num_letters() {
                return Err(DfaError::NotTotal {
                    state: q,
                    letter_bits: row.len() as u32,
                });
            }
            if let Some(&bad) = row.iter().find(|&&s| s >= n) {
                return Err(DfaError::InvalidState(bad));
            }
        }
        Ok(Dfa {
            ap,
            initial,
            accepting,
            trans,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.ap
    }

    pub fn num_states(&self) -> usize {
        self.trans.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn accepting(&self) -> &BTreeSet<StateId> {
        &self.accepting
    }

    pub fn is_accepting(&self, q: StateId) -> bool {
        self.accepting.contains(&q)
    }

    /// The transition function `δ(q, ℓ)`.
    pub fn step(&self, q: StateId, letter: Letter) -> StateId {
        self.trans[q][letter.bits() as usize]
    }

    /// Runs the automaton on a trace from the initial state.
    pub fn run<I: IntoIterator<Item = Letter>>(&self, trace: I) -> StateId {
        trace
            .into_iter()
            .fold(self.initial, |q, l| self.step(q, l))
    }

    /// Whether the automaton accepts the given finite trace.
    pub fn accepts<I: IntoIterator<Item = Letter>>(&self, trace: I) -> bool {
        self.is_accepting(self.run(trace))
    }

    /// Per-state guard groups: successor state to the letters that reach it.
    pub fn guards(&self, q: StateId) -> BTreeMap<StateId, Vec<Letter>> {
        let mut groups: BTreeMap<StateId, Vec<Letter>> = BTreeMap::new();
        for letter in self.ap.letters() {
            groups
                .entry(self.step(q, letter))
                .or_default()
                .push(letter);
        }
        groups
    }

    pub fn transitions(&self) -> &[Vec<StateId>] {
        &self.trans
    }
}

/// Compiles a co-safe formula into its good-prefix DFA by iterated
/// progression over all letters, with the default state cap.
pub fn compile(formula: &Formula, ap: &Alphabet) -> Result<Dfa, DfaError> {
    compile_with_limit(formula, ap, DEFAULT_STATE_LIMIT)
}

/// Compiles with an explicit cap on the number of residual states.
pub fn compile_with_limit(
    formula: &Formula,
    ap: &Alphabet,
    limit: usize,
) -> Result<Dfa, DfaError> {
    let root = formula.simplify();
    let mut index: BTreeMap<Formula, StateId> = BTreeMap::new();
    let mut residuals: Vec<Formula> = Vec::new();
    let mut trans: Vec<Vec<StateId>> = Vec::new();
    let mut queue: VecDeque<StateId> = VecDeque::new();

    index.insert(root.clone(), 0);
    residuals.push(root);
    queue.push_back(0);

    while let Some(q) = queue.pop_front() {
        let current = residuals[q].clone();
        let mut row = Vec::with_capacity(ap.num_letters());
        for letter in ap.letters() {
            let next = current.progress(letter);
            let id = match index.get(&next) {
                Some(&id) => id,
                None => {
                    let id = residuals.len();
                    if id >= limit {
                        return Err(DfaError::StateLimitExceeded(limit));
                    }
                    if next.size() > RESIDUAL_NODE_LIMIT {
                        return Err(DfaError::ResidualTooLarge(RESIDUAL_NODE_LIMIT));
                    }
                    index.insert(next.clone(), id);
                    residuals.push(next);
                    queue.push_back(id);
                    id
                }
            };
            row.push(id);
        }
        trans.push(row);
    }

    let accepting = valid_residual_states(&residuals, &trans, &index);
    Ok(Dfa {
        ap: ap.clone(),
        initial: 0,
        accepting,
        trans,
    })
}

/// States whose residual obligation is already discharged on every infinite
/// continuation. The residual `true` qualifies outright; beyond it, a state
/// is accepting iff no infinite path from it avoids the `true` residual,
/// which covers residuals that are valid but not syntactically `true`
/// (e.g. disjunctions of complementary eventualities).
fn valid_residual_states(
    residuals: &[Formula],
    trans: &[Vec<StateId>],
    index: &BTreeMap<Formula, StateId>,
) -> BTreeSet<StateId> {
    let n = residuals.len();
    let true_state = index.get(&Formula::True).copied();
    // A state can "dodge" acceptance if, avoiding the true-state, it reaches a
    // cycle. Iteratively remove states all of whose non-true successors are
    // already known valid; the fixpoint is the valid set.
    let mut valid = vec![false; n];
    if let Some(t) = true_state {
        valid[t] = true;
    }
    loop {
        let mut changed = false;
        for q in 0..n {
            if valid[q] {
                continue;
            }
            if trans[q].iter().all(|&s| valid[s]) {
                valid[q] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    valid
        .iter()
        .enumerate()
        .filter_map(|(q, &v)| if v { Some(q) } else { None })
        .collect()
}

/// Hopcroft-style partition refinement. Returns a language-equivalent DFA
/// with the minimal number of reachable states; accepting, trap, and initial
/// roles are preserved under the induced state mapping.
pub fn minimize(dfa: &Dfa) -> Dfa {
    // restrict to states reachable from the initial state
    let n = dfa.num_states();
    let mut reachable = vec![false; n];
    let mut stack = vec![dfa.initial];
    reachable[dfa.initial] = true;
    while let Some(q) = stack.pop() {
        for &s in &dfa.trans[q] {
            if !reachable[s] {
                reachable[s] = true;
                stack.push(s);
            }
        }
    }

    // initial partition: accepting vs non-accepting (reachable only)
    let mut class: Vec<usize> = (0..n)
        .map(|q| if dfa.is_accepting(q) { 1 } else { 0 })
        .collect();
    let num_letters = dfa.ap.num_letters();
    loop {
        // signature: own class + successor classes per letter
        let mut sig_index: BTreeMap<(usize, Vec<usize>), usize> = BTreeMap::new();
        let mut next_class = vec![0usize; n];
        for q in 0..n {
            if !reachable[q] {
                continue;
            }
            let sig: (usize, Vec<usize>) = (
                class[q],
                (0..num_letters).map(|l| class[dfa.trans[q][l]]).collect(),
            );
            let next_id = sig_index.len();
            let id = *sig_index.entry(sig).or_insert(next_id);
            next_class[q] = id;
        }
        let stable = (0..n)
            .filter(|&q| reachable[q])
            .all(|q| {
                (0..n)
                    .filter(|&p| reachable[p])
                    .all(|p| (class[p] == class[q]) == (next_class[p] == next_class[q]))
            });
        class = next_class;
        if stable {
            break;
        }
    }

    // renumber classes in order of first reachable occurrence for determinism
    let mut renumber: BTreeMap<usize, usize> = BTreeMap::new();
    let mut order: Vec<StateId> = Vec::new();
    for q in 0..n {
        if reachable[q] && !renumber.contains_key(&class[q]) {
            renumber.insert(class[q], order.len());
            order.push(q);
        }
    }
    let m = order.len();
    let mut trans = Vec::with_capacity(m);
    let mut accepting = BTreeSet::new();
    for &rep in &order {
        let row: Vec<StateId> = (0..num_letters)
            .map(|l| renumber[&class[dfa.trans[rep][l]]])
            .collect();
        trans.push(row);
        if dfa.is_accepting(rep) {
            accepting.insert(renumber[&class[rep]]);
        }
    }
    Dfa {
        ap: dfa.ap.clone(),
        initial: renumber[&class[dfa.initial]],
        accepting,
        trans,
    }
}

/// Reachability facts and transition multiplicities for a DFA.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DfaAnalysis {
    /// `counts[q][q']` is `|δ_{q,q'}|`, the number of letters moving q to q'.
    counts: Vec<Vec<u32>>,
    /// Reflexive-transitive reachability `q →* q'`.
    reach: Vec<Vec<bool>>,
    reaches_accepting: Vec<bool>,
    is_trap: Vec<bool>,
}

impl DfaAnalysis {
    pub fn num_states(&self) -> usize {
        self.counts.len()
    }

    /// `|δ_{q,q'}|`.
    pub fn count(&self, q: StateId, q2: StateId) -> u32 {
        self.counts[q][q2]
    }

    /// `q →* q'` (reflexive).
    pub fn reaches(&self, q: StateId, q2: StateId) -> bool {
        self.reach[q][q2]
    }

    pub fn reaches_accepting(&self, q: StateId) -> bool {
        self.reaches_accepting[q]
    }

    pub fn is_trap(&self, q: StateId) -> bool {
        self.is_trap[q]
    }

    /// Successor set `Suc_q` as an iterator of states with `|δ_{q,q'}| > 0`.
    pub fn successors(&self, q: StateId) -> impl Iterator<Item = StateId> + '_ {
        self.counts[q]
            .iter()
            .enumerate()
            .filter_map(|(s, &c)| if c > 0 { Some(s) } else { None })
    }
}

/// Computes reachability (graph search on the quotient graph) and exact
/// per-pair letter counts for a DFA.
pub fn analyze(dfa: &Dfa) -> DfaAnalysis {
    let n = dfa.num_states();
    let mut counts = vec![vec![0u32; n]; n];
    for q in 0..n {
        for letter in dfa.ap.letters() {
            counts[q][dfa.step(q, letter)] += 1;
        }
    }

    // reflexive-transitive closure via BFS per state
    let mut reach = vec![vec![false; n]; n];
    for q in 0..n {
        let mut stack = vec![q];
        reach[q][q] = true;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if counts[u][v] > 0 && !reach[q][v] {
                    reach[q][v] = true;
                    stack.push(v);
                }
            }
        }
    }

    let reaches_accepting: Vec<bool> = (0..n)
        .map(|q| dfa.accepting().iter().any(|&f| reach[q][f]))
        .collect();
    let is_trap: Vec<bool> = (0..n)
        .map(|q| !dfa.is_accepting(q) && !reaches_accepting[q])
        .collect();

    DfaAnalysis {
        counts,
        reach,
        reaches_accepting,
        is_trap,
    }
}

/// The hand-specified five-state automaton for the two-flags-avoid-one task
/// over AP `[o, b, y]`. Guard partition, by source state:
///
/// * q0: any letter containing `o` goes to q1 (4 letters); `y` without `o`
///   to q3 (2); exactly `{b}` to q2 (1); the empty letter self-loops (1).
/// * q1: any letter containing `b` to q4 (4); `y` without `b` to q3 (2);
///   otherwise self-loop (2).
/// * q2: symmetric to q1 with `o` and `b` swapped.
/// * q3 (trap) and q4 (accepting) absorb all 8 letters.
///
/// This is the normative input for the distance, partition, and reward
/// golden tests; it is deliberately not compiler output.
pub fn fixture_dfa() -> Dfa {
    let ap = Alphabet::new(["o", "b", "y"]).expect("fixed alphabet");
    let (o, b, y) = (0u8, 1u8, 2u8);
    let mut trans = vec![vec![0; 8]; 5];
    for letter in ap.letters() {
        let bits = letter.bits() as usize;
        trans[0][bits] = if letter.contains(o) {
            1
        } else if letter.contains(y) {
            3
        } else if letter.contains(b) {
            2
        } else {
            0
        };
        trans[1][bits] = if letter.contains(b) {
            4
        } else if letter.contains(y) {
            3
        } else {
            1
        };
        trans[2][bits] = if letter.contains(o) {
            4
        } else if letter.contains(y) {
            3
        } else {
            2
        };
        trans[3][bits] = 3;
        trans[4][bits] = 4;
    }
    Dfa {
        ap,
        initial: 0,
        accepting: BTreeSet::from([4]),
        trans,
    }
}
