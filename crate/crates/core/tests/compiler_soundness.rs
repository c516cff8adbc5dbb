//! End-to-end checks that compiled automata accept exactly the good
//! prefixes of their formulas, measured against a brute-force trace
//! semantics that shares no code with the compiler.

mod support;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use shaper_core::dfa::{compile, compile_with_limit, fixture_dfa, minimize};
use shaper_core::env::EXAMPLE_FORMULA;
use shaper_core::parse::parse;
use shaper_core::{Alphabet, Letter};
use support::{random_formula, test_alphabet};
use support::soundness_sweep;

#[test]
fn compiled_automata_accept_exactly_the_good_prefixes() {
    let (formulas, stats, rejected) = soundness_sweep(0x600d_90ef, 520, 6);
    assert!(
        stats.skipped * 50 < stats.checked,
        "too many undecided traces: {} of {}",
        stats.skipped,
        stats.checked,
    );
    assert!(
        rejected * 10 < formulas,
        "generator rejected too often: {rejected} of {formulas}",
    );
    eprintln!(
        "checked {} traces over {formulas} formulas ({} undecided, {rejected} rejected)",
        stats.checked, stats.skipped,
    );
}

#[test]
fn minimization_preserves_the_accepted_language() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xb15e_c7ed);
    for _ in 0..120 {
        let num_atoms = 1 + (rng.next_u32() % 2) as u8;
        let f = random_formula(&mut rng, num_atoms, 4);
        let ap = test_alphabet(num_atoms);
        let Ok(dfa) = compile_with_limit(&f, &ap, 2_000) else {
            continue;
        };
        let small = minimize(&dfa);
        assert!(small.num_states() <= dfa.num_states());
        // exhaustive agreement on every trace up to length 6
        let letters: Vec<Letter> = ap.letters().collect();
        let base = letters.len();
        let mut stack = vec![(dfa.initial(), small.initial(), 0usize)];
        while let Some((q1, q2, len)) = stack.pop() {
            assert_eq!(
                dfa.is_accepting(q1),
                small.is_accepting(q2),
                "minimized automaton diverges for {}",
                f.display(&ap),
            );
            if len < 6 {
                for i in 0..base {
                    stack.push((dfa.step(q1, letters[i]), small.step(q2, letters[i]), len + 1));
                }
            }
        }
    }
}

#[test]
fn compiled_example_formula_matches_the_fixture_on_singleton_traces() {
    let ap = Alphabet::new(["o", "b", "y"]).expect("three flags");
    let f = parse(EXAMPLE_FORMULA, &ap).expect("example formula parses");
    let compiled = compile(&f, &ap).expect("example formula compiles");
    let fixture = fixture_dfa();

    // grid worlds only ever emit one flag at a time, so the comparison is
    // over the empty letter and the three singletons
    let letters: Vec<Letter> = ap
        .letters()
        .filter(|l| l.count() <= 1)
        .collect();
    let mut stack = vec![(compiled.initial(), fixture.initial(), 0usize)];
    while let Some((qc, qf, len)) = stack.pop() {
        assert_eq!(
            compiled.is_accepting(qc),
            fixture.is_accepting(qf),
            "compiled and fixture automata disagree at depth {len}",
        );
        if len < 8 {
            for &l in &letters {
                stack.push((compiled.step(qc, l), fixture.step(qf, l), len + 1));
            }
        }
    }
}

#[test]
fn minimized_example_automaton_has_five_singleton_reachable_states() {
    let ap = Alphabet::new(["o", "b", "y"]).expect("three flags");
    let f = parse(EXAMPLE_FORMULA, &ap).expect("example formula parses");
    let small = minimize(&compile(&f, &ap).expect("compiles"));

    let letters: Vec<Letter> = ap.letters().filter(|l| l.count() <= 1).collect();
    let mut seen = std::collections::BTreeSet::new();
    let mut frontier = vec![small.initial()];
    while let Some(q) = frontier.pop() {
        if !seen.insert(q) {
            continue;
        }
        for &l in &letters {
            frontier.push(small.step(q, l));
        }
    }
    assert_eq!(seen.len(), 5);
}
