//! Co-safe LTL formula trees.
//!
//! Negation appears only directly on atoms; `True`/`False` are first-class
//! constants because letter-by-letter progression produces them as residuals.
//! Conjunction and disjunction are n-ary with sorted, deduplicated children,
//! which makes structural equality a canonical-form check: two residuals that
//! compare equal are handled as the same automaton state.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use crate::letter::{Alphabet, AtomId, Letter};

/// A co-safe LTL formula in canonical form.
///
/// Build instances through [`Formula::simplify`] or the smart constructors
/// ([`Formula::and`], [`Formula::or`], ...); pattern matching is free-form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Atom(AtomId),
    NegAtom(AtomId),
    /// n-ary conjunction; children sorted, unique, at least two, no constants.
    And(Vec<Formula>),
    /// n-ary disjunction; same canonical shape as `And`.
    Or(Vec<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Eventually(Box<Formula>),
}

impl Formula {
    /// Canonical conjunction: flattens nested `And`s, folds constants,
    /// removes duplicates, and applies absorption (`x & (x | y) = x`).
    pub fn and(items: Vec<Formula>) -> Formula {
        let mut flat: Vec<Formula> = Vec::new();
        for item in items {
            match item {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(children) => flat.extend(children),
                other => flat.push(other),
            }
        }
        flat.sort();
        flat.dedup();
        // absorption: drop any disjunction that contains another conjunct
        let mut keep: Vec<Formula> = flat
            .iter()
            .filter(|f| match f {
                Formula::Or(ys) => !flat.iter().any(|x| !matches!(x, Formula::Or(_)) && ys.contains(x)),
                _ => true,
            })
            .cloned()
            .collect();
        // temporal subsumption: x & F x = x, x & (y U x) = x
        let snapshot = keep.clone();
        keep.retain(|f| match f {
            Formula::Eventually(y) | Formula::Until(_, y) => !snapshot.contains(y),
            _ => true,
        });
        match keep.len() {
            0 => Formula::True,
            1 => keep.into_iter().next().unwrap(),
            _ => Formula::And(keep),
        }
    }

    /// Canonical disjunction, dual of [`Formula::and`].
    pub fn or(items: Vec<Formula>) -> Formula {
        let mut flat: Vec<Formula> = Vec::new();
        for item in items {
            match item {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(children) => flat.extend(children),
                other => flat.push(other),
            }
        }
        flat.sort();
        flat.dedup();
        let mut keep: Vec<Formula> = flat
            .iter()
            .filter(|f| match f {
                Formula::And(ys) => !flat.iter().any(|x| !matches!(x, Formula::And(_)) && ys.contains(x)),
                _ => true,
            })
            .cloned()
            .collect();
        // guarded-unfolding fixpoint: C | (D & (C | (D & w))) = C | (D & w),
        // since D & C already implies C. Progression of nested temporal
        // operators produces exactly this nesting, one level deeper per
        // step; collapsing it keeps the residual space finite.
        'unfold: loop {
            for idx in 0..keep.len() {
                let Formula::And(ts) = &keep[idx] else { continue };
                for (j, inner) in ts.iter().enumerate() {
                    let Formula::Or(es) = inner else { continue };
                    let ds: Vec<&Formula> = ts
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| *k != j)
                        .map(|(_, t)| t)
                        .collect();
                    let outer_covered = keep
                        .iter()
                        .enumerate()
                        .all(|(k, c)| k == idx || es.contains(c));
                    if !outer_covered {
                        continue;
                    }
                    let extras_guarded = es
                        .iter()
                        .filter(|e| {
                            !keep
                                .iter()
                                .enumerate()
                                .any(|(k, c)| k != idx && c == *e)
                        })
                        .all(|e| match e {
                            Formula::And(fs) => ds.iter().all(|d| fs.contains(d)),
                            _ => false,
                        });
                    if extras_guarded {
                        keep = es.clone();
                        continue 'unfold;
                    }
                }
            }
            break;
        }
        // expansion law, folded back: b | (a & (a U b)) = a U b. Without
        // this, progression of nested untils builds ever-deeper copies of
        // the same unfolding and the residual space never closes.
        'rewrite: loop {
            for idx in 0..keep.len() {
                let Formula::And(ts) = &keep[idx] else { continue };
                for (j, u) in ts.iter().enumerate() {
                    let Formula::Until(a, b) = u else { continue };
                    let rest: Vec<Formula> =
                        ts.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, t)| t.clone()).collect();
                    if Formula::and(rest) == **a && keep.contains(b) {
                        let until = u.clone();
                        let target = (**b).clone();
                        keep.remove(idx);
                        keep.retain(|f| *f != target);
                        if !keep.contains(&until) {
                            keep.push(until);
                        }
                        keep.sort();
                        continue 'rewrite;
                    }
                }
            }
            break;
        }
        // temporal subsumption: x | F x = F x, x | (y U x) = y U x
        let snapshot = keep.clone();
        keep.retain(|f| {
            !snapshot.iter().any(|g| match g {
                Formula::Eventually(y) | Formula::Until(_, y) => **y == *f,
                _ => false,
            })
        });
        match keep.len() {
            0 => Formula::False,
            1 => keep.into_iter().next().unwrap(),
            _ => Formula::Or(keep),
        }
    }

    pub fn next(sub: Formula) -> Formula {
        match sub {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            other => Formula::Next(Box::new(other)),
        }
    }

    pub fn until(lhs: Formula, rhs: Formula) -> Formula {
        match (&lhs, &rhs) {
            (_, Formula::True) => Formula::True,
            (_, Formula::False) => Formula::False,
            (Formula::False, _) => rhs,
            (Formula::True, _) => Formula::eventually(rhs),
            _ if lhs == rhs => rhs,
            _ => Formula::Until(Box::new(lhs), Box::new(rhs)),
        }
    }

    pub fn eventually(sub: Formula) -> Formula {
        match sub {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Eventually(inner) => Formula::Eventually(inner),
            other => Formula::Eventually(Box::new(other)),
        }
    }

    /// Number of nodes in the syntax tree.
    pub fn size(&self) -> usize {
        1 + match self {
            Formula::And(xs) | Formula::Or(xs) => xs.iter().map(Formula::size).sum(),
            Formula::Next(g) | Formula::Eventually(g) => g.size(),
            Formula::Until(g, h) => g.size() + h.size(),
            _ => 0,
        }
    }

    /// Whether the formula contains no temporal operator.
    pub fn is_temporal_free(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) | Formula::NegAtom(_) => true,
            Formula::And(xs) | Formula::Or(xs) => xs.iter().all(Formula::is_temporal_free),
            Formula::Next(_) | Formula::Until(_, _) | Formula::Eventually(_) => false,
        }
    }

    /// The set of atoms occurring in the formula.
    pub fn atoms(&self) -> BTreeSet<AtomId> {
        let mut set = BTreeSet::new();
        self.collect_atoms(&mut set);
        set
    }

    fn collect_atoms(&self, set: &mut BTreeSet<AtomId>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) | Formula::NegAtom(a) => {
                set.insert(*a);
            }
            Formula::And(xs) | Formula::Or(xs) => {
                for x in xs {
                    x.collect_atoms(set);
                }
            }
            Formula::Next(g) | Formula::Eventually(g) => g.collect_atoms(set),
            Formula::Until(g, h) => {
                g.collect_atoms(set);
                h.collect_atoms(set);
            }
        }
    }

    /// Propositional evaluation under an assignment given as an atom bitmask.
    /// Only meaningful on temporal-free formulas.
    fn eval_prop(&self, assignment: u32) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => assignment & (1 << a) != 0,
            Formula::NegAtom(a) => assignment & (1 << a) == 0,
            Formula::And(xs) => xs.iter().all(|x| x.eval_prop(assignment)),
            Formula::Or(xs) => xs.iter().any(|x| x.eval_prop(assignment)),
            _ => unreachable!("eval_prop on temporal formula"),
        }
    }

    /// Canonical simplification: constant folding, idempotence, absorption,
    /// sorted-children normalization, and exhaustive truth-table collapse of
    /// temporal-free results to `True`/`False`.
    pub fn simplify(&self) -> Formula {
        let rebuilt = match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom(a) => Formula::Atom(*a),
            Formula::NegAtom(a) => Formula::NegAtom(*a),
            Formula::And(xs) => Formula::and(xs.iter().map(Formula::simplify).collect()),
            Formula::Or(xs) => Formula::or(xs.iter().map(Formula::simplify).collect()),
            Formula::Next(g) => Formula::next(g.simplify()),
            Formula::Until(g, h) => Formula::until(g.simplify(), h.simplify()),
            Formula::Eventually(g) => Formula::eventually(g.simplify()),
        };
        if matches!(rebuilt, Formula::True | Formula::False) || !rebuilt.is_temporal_free() {
            return rebuilt;
        }
        // temporal-free residual: decide truth by exhaustive evaluation
        let atoms: Vec<AtomId> = rebuilt.atoms().into_iter().collect();
        let mut always = true;
        let mut never = true;
        for bits in 0..(1u32 << atoms.len()) {
            let mut assignment = 0u32;
            for (i, a) in atoms.iter().enumerate() {
                if bits & (1 << i) != 0 {
                    assignment |= 1 << a;
                }
            }
            if rebuilt.eval_prop(assignment) {
                never = false;
            } else {
                always = false;
            }
        }
        if always {
            Formula::True
        } else if never {
            Formula::False
        } else {
            rebuilt
        }
    }

    /// Formula progression: the residual obligation after consuming one
    /// letter. Total on valid inputs; the result is simplified.
    pub fn progress(&self, letter: Letter) -> Formula {
        self.progress_raw(letter).simplify()
    }

    fn progress_raw(&self, letter: Letter) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom(a) => {
                if letter.contains(*a) {
                    Formula::True
                } else {
                    Formula::False
                }
            }
            Formula::NegAtom(a) => {
                if letter.contains(*a) {
                    Formula::False
                } else {
                    Formula::True
                }
            }
            Formula::And(xs) => Formula::and(xs.iter().map(|x| x.progress_raw(letter)).collect()),
            Formula::Or(xs) => Formula::or(xs.iter().map(|x| x.progress_raw(letter)).collect()),
            Formula::Next(g) => (**g).clone(),
            Formula::Until(g, h) => Formula::or(alloc::vec![
                h.progress_raw(letter),
                Formula::and(alloc::vec![g.progress_raw(letter), self.clone()]),
            ]),
            Formula::Eventually(g) => {
                Formula::or(alloc::vec![g.progress_raw(letter), self.clone()])
            }
        }
    }

    /// Renders the formula in the concrete surface syntax over the given
    /// alphabet (`!`, `&`, `|`, `X`, `U`, `F`).
    pub fn display<'a>(&'a self, ap: &'a Alphabet) -> FormulaDisplay<'a> {
        FormulaDisplay { formula: self, ap }
    }
}

/// Binding strength used to decide parenthesization when printing.
fn precedence(f: &Formula) -> u8 {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) | Formula::NegAtom(_) => 5,
        Formula::Next(_) | Formula::Eventually(_) => 4,
        Formula::Until(_, _) => 3,
        Formula::And(_) => 2,
        Formula::Or(_) => 1,
    }
}

#[derive(Debug)]
pub struct FormulaDisplay<'a> {
    formula: &'a Formula,
    ap: &'a Alphabet,
}

impl fmt::Display for FormulaDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(self.formula, self.ap, f)
    }
}

fn write_child(
    child: &Formula,
    parent_prec: u8,
    ap: &Alphabet,
    f: &mut fmt::Formatter<'_>,
) -> fmt::Result {
    if precedence(child) <= parent_prec {
        write!(f, "(")?;
        write_formula(child, ap, f)?;
        write!(f, ")")
    } else {
        write_formula(child, ap, f)
    }
}

fn write_formula(formula: &Formula, ap: &Alphabet, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match formula {
        Formula::True => write!(f, "true"),
        Formula::False => write!(f, "false"),
        Formula::Atom(a) => write!(f, "{}", ap.name(*a)),
        Formula::NegAtom(a) => write!(f, "!{}", ap.name(*a)),
        Formula::And(xs) => {
            let prec = precedence(formula);
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    write!(f, " & ")?;
                }
                write_child(x, prec, ap, f)?;
            }
            Ok(())
        }
        Formula::Or(xs) => {
            let prec = precedence(formula);
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    write!(f, " | ")?;
                }
                write_child(x, prec, ap, f)?;
            }
            Ok(())
        }
        Formula::Next(g) => {
            write!(f, "X ")?;
            write_child(g, precedence(formula) - 1, ap, f)
        }
        Formula::Eventually(g) => {
            write!(f, "F ")?;
            write_child(g, precedence(formula) - 1, ap, f)
        }
        Formula::Until(g, h) => {
            let prec = precedence(formula);
            write_child(g, prec, ap, f)?;
            write!(f, " U ")?;
            // right-associative: the right child may be another Until
            if precedence(h) < prec {
                write!(f, "(")?;
                write_formula(h, ap, f)?;
                write!(f, ")")
            } else {
                write_formula(h, ap, f)
            }
        }
    }
}
