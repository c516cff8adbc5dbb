//! Shared helpers for integration tests: an independent brute-force
//! good-prefix oracle, a seeded formula generator, and a reference
//! fixpoint for reachability distances.
//!
//! Nothing here goes through the compiler or the Dijkstra pass under test;
//! the oracle works straight off the trace semantics so a bug in the
//! library cannot hide itself.

#![allow(dead_code)]

use rand_chacha::ChaCha8Rng;
use rand_core::RngCore;

use shaper_core::{Alphabet, Formula, Letter};

// ---------------------------------------------------------------------------
// finite-trace semantics
// ---------------------------------------------------------------------------

/// Pessimistic finite-trace satisfaction: true only if every infinite
/// word extending `trace` satisfies `f` by virtue of the prefix alone.
pub fn holds_strong(f: &Formula, trace: &[Letter]) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(a) => trace.first().is_some_and(|l| l.contains(*a)),
        Formula::NegAtom(a) => trace.first().is_some_and(|l| !l.contains(*a)),
        Formula::And(xs) => xs.iter().all(|x| holds_strong(x, trace)),
        Formula::Or(xs) => xs.iter().any(|x| holds_strong(x, trace)),
        Formula::Next(g) => !trace.is_empty() && holds_strong(g, &trace[1..]),
        Formula::Eventually(g) => (0..=trace.len()).any(|i| holds_strong(g, &trace[i..])),
        Formula::Until(g, h) => (0..=trace.len()).any(|i| {
            holds_strong(h, &trace[i..]) && (0..i).all(|j| holds_strong(g, &trace[j..]))
        }),
    }
}

/// Optimistic finite-trace satisfaction: false only if no infinite
/// extension of `trace` can satisfy `f`.
pub fn holds_weak(f: &Formula, trace: &[Letter]) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(a) => trace.first().is_none_or(|l| l.contains(*a)),
        Formula::NegAtom(a) => trace.first().is_none_or(|l| !l.contains(*a)),
        Formula::And(xs) => xs.iter().all(|x| holds_weak(x, trace)),
        Formula::Or(xs) => xs.iter().any(|x| holds_weak(x, trace)),
        Formula::Next(g) => trace.is_empty() || holds_weak(g, &trace[1..]),
        Formula::Eventually(g) => (0..=trace.len()).any(|i| holds_weak(g, &trace[i..])),
        Formula::Until(g, h) => (0..=trace.len()).any(|i| {
            holds_weak(h, &trace[i..]) && (0..i).all(|j| holds_weak(g, &trace[j..]))
        }),
    }
}

// ---------------------------------------------------------------------------
// good-prefix oracle
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Good,
    NotGood,
    Unknown,
}

const MEMO_UNSET: u8 = 2;

/// Brute-force good-prefix decider for a single formula.
///
/// The strong semantics certifies `Good`; a single ultimately periodic
/// counterexample word certifies `NotGood`; when neither settles it, the
/// trace is extended one letter at a time in every direction. `Unknown`
/// only appears when `fuel` or `budget` runs out, and callers skip the
/// comparison for those traces (counted, and required to be rare).
pub struct GoodOracle<'f> {
    f: &'f Formula,
    letters: Vec<Letter>,
    /// subterm index by address; repeated structure gets repeated entries,
    /// which costs memo sharing but nothing else
    subs: Vec<&'f Formula>,
    /// scratch table for lasso evaluation: subs x positions
    memo: Vec<u8>,
    max_positions: usize,
    tails_short: Vec<[Letter; 1]>,
    tails_long: Vec<[Letter; 2]>,
}

impl<'f> GoodOracle<'f> {
    pub fn new(f: &'f Formula, ap: &Alphabet, max_trace: usize) -> Self {
        fn collect<'f>(f: &'f Formula, out: &mut Vec<&'f Formula>) {
            out.push(f);
            match f {
                Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|x| collect(x, out)),
                Formula::Next(g) | Formula::Eventually(g) => collect(g, out),
                Formula::Until(g, h) => {
                    collect(g, out);
                    collect(h, out);
                }
                _ => {}
            }
        }
        let mut subs = Vec::new();
        collect(f, &mut subs);
        let letters: Vec<Letter> = ap.letters().collect();
        let tails_short: Vec<[Letter; 1]> = letters.iter().map(|&l| [l]).collect();
        let mut tails_long = Vec::new();
        for &l1 in &letters {
            for &l2 in &letters {
                if l1 != l2 {
                    tails_long.push([l1, l2]);
                }
            }
        }
        let max_positions = max_trace + 2;
        let memo = vec![MEMO_UNSET; subs.len() * max_positions];
        GoodOracle {
            f,
            letters,
            subs,
            memo,
            max_positions,
            tails_short,
            tails_long,
        }
    }

    fn sub_id(&self, f: &Formula) -> usize {
        self.subs
            .iter()
            .position(|g| core::ptr::eq(*g as *const Formula, f as *const Formula))
            .expect("subterm indexed at construction")
    }

    /// Exact satisfaction of `prefix · tail^ω`. Positions at or past the
    /// prefix with equal offsets modulo the tail length have identical
    /// futures, so evaluation lives on the finite domain
    /// `0 .. prefix.len() + tail.len()` with the last `tail.len()`
    /// positions forming a cycle.
    pub fn holds_on_lasso(&mut self, prefix: &[Letter], tail: &[Letter]) -> bool {
        assert!(!tail.is_empty());
        assert!(prefix.len() + tail.len() <= self.max_positions);
        self.memo.fill(MEMO_UNSET);
        self.sat(self.f, prefix, tail, 0)
    }

    fn sat(&mut self, f: &Formula, prefix: &[Letter], tail: &[Letter], i: usize) -> bool {
        let len = prefix.len() + tail.len();
        let slot = self.sub_id(f) * self.max_positions + i;
        if self.memo[slot] != MEMO_UNSET {
            return self.memo[slot] == 1;
        }
        let letter = |j: usize| {
            if j < prefix.len() {
                prefix[j]
            } else {
                tail[j - prefix.len()]
            }
        };
        // successor position, wrapping back to the start of the tail
        let next = |j: usize| if j + 1 < len { j + 1 } else { prefix.len() };
        let v = match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => letter(i).contains(*a),
            Formula::NegAtom(a) => !letter(i).contains(*a),
            Formula::And(xs) => xs.iter().all(|x| self.sat(x, prefix, tail, i)),
            Formula::Or(xs) => xs.iter().any(|x| self.sat(x, prefix, tail, i)),
            Formula::Next(g) => self.sat(g, prefix, tail, next(i)),
            Formula::Eventually(g) => {
                // forward orbit of i: everything from i onward plus the cycle
                (i..len)
                    .chain(prefix.len()..len)
                    .any(|j| self.sat(g, prefix, tail, j))
            }
            Formula::Until(g, h) => {
                // walk the path; after len + tail.len() steps the orbit repeats
                let mut pos = i;
                let mut out = false;
                for _ in 0..len + tail.len() {
                    if self.sat(h, prefix, tail, pos) {
                        out = true;
                        break;
                    }
                    if !self.sat(g, prefix, tail, pos) {
                        break;
                    }
                    pos = next(pos);
                }
                out
            }
        };
        self.memo[slot] = v as u8;
        v
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    /// Verdict from the trace alone, without looking at extensions: the
    /// strong semantics certifies `Good`, and an unsatisfiable residual or
    /// a single falsifying periodic tail certifies `NotGood`. `None`
    /// means the caller has to consult one-letter extensions.
    pub fn local_verdict(&mut self, trace: &[Letter]) -> Option<Verdict> {
        if holds_strong(self.f, trace) {
            return Some(Verdict::Good);
        }
        if !holds_weak(self.f, trace) {
            return Some(Verdict::NotGood);
        }
        for i in 0..self.tails_short.len() {
            let tail = self.tails_short[i];
            if !self.holds_on_lasso(trace, &tail) {
                return Some(Verdict::NotGood);
            }
        }
        for i in 0..self.tails_long.len() {
            let tail = self.tails_long[i];
            if !self.holds_on_lasso(trace, &tail) {
                return Some(Verdict::NotGood);
            }
        }
        None
    }

    /// Combines child verdicts: a trace is good exactly when every
    /// one-letter extension is good, and any bad extension of a child is
    /// a bad extension here too.
    pub fn combine(children: impl IntoIterator<Item = Verdict>) -> Verdict {
        let mut out = Verdict::Good;
        for v in children {
            match v {
                Verdict::NotGood => return Verdict::NotGood,
                Verdict::Unknown => out = Verdict::Unknown,
                Verdict::Good => {}
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// formula generation
// ---------------------------------------------------------------------------

/// Draws a random canonical formula over atoms `0..num_atoms` with
/// operator nesting at most `depth`. Smart constructors keep the result
/// in canonical form, so constants can fold away whole subtrees.
pub fn random_formula(rng: &mut ChaCha8Rng, num_atoms: u8, depth: u32) -> Formula {
    let leaf = |rng: &mut ChaCha8Rng| {
        let a = (rng.next_u32() % num_atoms as u32) as u8;
        match rng.next_u32() % 8 {
            0..=3 => Formula::Atom(a),
            4..=6 => Formula::NegAtom(a),
            _ => {
                if rng.next_u32() % 2 == 0 {
                    Formula::True
                } else {
                    Formula::False
                }
            }
        }
    };
    if depth == 0 || rng.next_u32() % 5 == 0 {
        return leaf(rng);
    }
    match rng.next_u32() % 10 {
        0 | 1 => Formula::and(vec![
            random_formula(rng, num_atoms, depth - 1),
            random_formula(rng, num_atoms, depth - 1),
        ]),
        2 | 3 => Formula::or(vec![
            random_formula(rng, num_atoms, depth - 1),
            random_formula(rng, num_atoms, depth - 1),
        ]),
        4 | 5 => Formula::next(random_formula(rng, num_atoms, depth - 1)),
        6..=8 => Formula::until(
            random_formula(rng, num_atoms, depth - 1),
            random_formula(rng, num_atoms, depth - 1),
        ),
        _ => Formula::eventually(random_formula(rng, num_atoms, depth - 1)),
    }
}

/// Atom names `a`, `b`, `c`, ... for generated formulas.
pub fn test_alphabet(num_atoms: u8) -> Alphabet {
    let names: Vec<String> = (0..num_atoms)
        .map(|i| ((b'a' + i) as char).to_string())
        .collect();
    Alphabet::new(names).expect("valid test alphabet")
}

// ---------------------------------------------------------------------------
// reference distance fixpoint
// ---------------------------------------------------------------------------

/// Reference shortest-distance computation by naive Bellman iteration:
/// accepting states sit at zero, everything else relaxes over its
/// outgoing difficulty-weighted edges until nothing changes. States that
/// never reach an accepting state keep the sentinel `|AP| * |Q|`.
pub fn bellman_distances(dfa: &shaper_core::Dfa) -> Vec<f64> {
    let n = dfa.num_states();
    let ap = dfa.alphabet().len();
    let sentinel = (ap * n) as f64;
    let analysis = shaper_core::dfa::analyze(dfa);
    let mut d = vec![f64::INFINITY; n];
    for q in 0..n {
        if dfa.is_accepting(q) {
            d[q] = 0.0;
        }
    }
    loop {
        let mut changed = false;
        for q in 0..n {
            if dfa.is_accepting(q) {
                continue;
            }
            let mut best = d[q];
            for (&succ, _) in dfa.guards(q).iter() {
                if succ == q {
                    continue;
                }
                let h = shaper_core::metrics::difficulty(&analysis, ap, q, succ);
                if d[succ].is_finite() && d[succ] + h < best {
                    best = d[succ] + h;
                }
            }
            if best < d[q] {
                d[q] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    d.into_iter()
        .map(|v| if v.is_finite() { v } else { sentinel })
        .collect()
}

/// Random small automaton over a fresh alphabet: every state gets a
/// transition for every letter, a nonempty accepting set is made
/// absorbing, and the initial state is 0.
pub fn random_dfa(rng: &mut ChaCha8Rng, max_states: usize, num_atoms: u8) -> shaper_core::Dfa {
    let ap = test_alphabet(num_atoms);
    let n = 2 + (rng.next_u32() as usize % (max_states - 1));
    let num_letters = ap.num_letters();
    let num_accepting = 1 + rng.next_u32() as usize % 2;
    let accepting: std::collections::BTreeSet<usize> = (0..num_accepting)
        .map(|_| rng.next_u32() as usize % n)
        .collect();
    let mut transitions = Vec::with_capacity(n);
    for q in 0..n {
        let row: Vec<usize> = (0..num_letters)
            .map(|_| {
                if accepting.contains(&q) {
                    q
                } else {
                    rng.next_u32() as usize % n
                }
            })
            .collect();
        transitions.push(row);
    }
    shaper_core::Dfa::from_parts(ap, 0, accepting, transitions)
        .expect("random automaton is well formed")
}

// ---------------------------------------------------------------------------
// soundness walk
// ---------------------------------------------------------------------------

use shaper_core::dfa::{analyze, compile_with_limit};
use shaper_core::{Dfa, DfaAnalysis};

pub struct WalkStats {
    pub checked: usize,
    pub skipped: usize,
}

/// Compares DFA acceptance with the oracle verdict on every trace up to
/// `max_len` in a single shared tree walk.
///
/// Verdicts that the trace alone cannot settle are resolved through the
/// children (a trace is good exactly when all its one-letter extensions
/// are), extending past `max_len` up to `hard_len` where needed, so each
/// trace's verdict is computed once. Subtrees where both sides are
/// pinned get pruned: acceptance and goodness are both monotone once
/// established, and a trap state with an unsatisfiable residual can
/// never disagree again.
#[allow(clippy::too_many_arguments)]
fn walk(
    dfa: &Dfa,
    analysis: &DfaAnalysis,
    f: &Formula,
    ap: &Alphabet,
    oracle: &mut GoodOracle<'_>,
    trace: &mut Vec<Letter>,
    q: usize,
    max_len: usize,
    hard_len: usize,
    budget: &mut u64,
    stats: &mut WalkStats,
) -> Verdict {
    assert!(*budget > 0, "verdict search exhausted for {}", f.display(ap));
    *budget -= 1;

    let local = oracle.local_verdict(trace);
    let mut descended = false;
    let verdict = match local {
        Some(v) => v,
        None if trace.len() >= hard_len => Verdict::Unknown,
        None => {
            descended = true;
            // children of assertable nodes must all be visited anyway, so
            // only break early past the assertion frontier
            let may_break = trace.len() >= max_len;
            let mut out = Verdict::Good;
            for l in ap.letters() {
                trace.push(l);
                let cv = walk(
                    dfa, analysis, f, ap, oracle, trace,
                    dfa.step(q, l), max_len, hard_len, budget, stats,
                );
                trace.pop();
                match cv {
                    Verdict::NotGood => {
                        out = Verdict::NotGood;
                        if may_break {
                            break;
                        }
                    }
                    Verdict::Unknown => {
                        if out == Verdict::Good {
                            out = Verdict::Unknown;
                        }
                    }
                    Verdict::Good => {}
                }
            }
            out
        }
    };

    if trace.len() <= max_len {
        stats.checked += 1;
        match verdict {
            Verdict::Good => assert!(
                dfa.is_accepting(q),
                "automaton rejects a good prefix of {} (trace {:?})",
                f.display(ap),
                trace.iter().map(Letter::bits).collect::<Vec<_>>(),
            ),
            Verdict::NotGood => assert!(
                !dfa.is_accepting(q),
                "automaton accepts a non-good prefix of {} (trace {:?})",
                f.display(ap),
                trace.iter().map(Letter::bits).collect::<Vec<_>>(),
            ),
            Verdict::Unknown => stats.skipped += 1,
        }
    }

    if !descended && trace.len() < max_len {
        let prune = (verdict == Verdict::Good && dfa.is_accepting(q))
            || (analysis.is_trap(q) && !holds_weak(f, trace));
        if !prune {
            for l in ap.letters() {
                trace.push(l);
                walk(
                    dfa, analysis, f, ap, oracle, trace,
                    dfa.step(q, l), max_len, hard_len, budget, stats,
                );
                trace.pop();
            }
        }
    }

    verdict
}

/// Returns false when the formula's residual closure blows past the
/// construction caps; such formulas are skipped and counted.
pub fn check_formula(f: &Formula, ap: &Alphabet, max_len: usize, stats: &mut WalkStats) -> bool {
    let Ok(dfa) = compile_with_limit(f, ap, 2_000) else {
        return false;
    };
    let analysis = analyze(&dfa);
    let hard_len = max_len + 4;
    let mut oracle = GoodOracle::new(f, ap, hard_len);
    let mut trace = Vec::new();
    let mut budget = 4_000_000u64;
    walk(
        &dfa,
        &analysis,
        f,
        ap,
        &mut oracle,
        &mut trace,
        dfa.initial(),
        max_len,
        hard_len,
        &mut budget,
        stats,
    );
    true
}

/// The full generated-formula soundness sweep shared by the integration
/// suites: draws canonical formulas until `target` of them compile inside
/// the cap and checks each against the brute-force evaluator on every
/// trace of length at most `max_len`.
pub fn soundness_sweep(seed: u64, target: usize, max_len: usize) -> (usize, WalkStats, usize) {
    use rand_core::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = WalkStats { checked: 0, skipped: 0 };
    let mut formulas = 0usize;
    let mut rejected = 0usize;
    while formulas < target {
        // weight toward small alphabets; trace trees grow as (2^k)^6
        let num_atoms = match rng.next_u32() % 6 {
            0..=2 => 1u8,
            3 | 4 => 2,
            _ => 3,
        };
        let depth = 2 + rng.next_u32() % 3;
        let f = random_formula(&mut rng, num_atoms, depth);
        if matches!(f, Formula::True | Formula::False) {
            continue;
        }
        let ap = test_alphabet(num_atoms);
        if check_formula(&f, &ap, max_len, &mut stats) {
            formulas += 1;
        } else {
            rejected += 1;
        }
    }
    (formulas, stats, rejected)
}
