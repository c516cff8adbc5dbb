//! Automaton file formats: a JSON interchange schema and DOT export.
//!
//! The JSON schema keeps letters as lists of proposition names so automata
//! stay readable and diffable:
//!
//! ```json
//! {
//!   "ap": ["o", "b", "y"],
//!   "states": 5,
//!   "initial": 0,
//!   "accepting": [4],
//!   "edges": [ { "from": 0, "letters": [[], ["b"]], "to": 0 }, ... ]
//! }
//! ```
//!
//! Every (state, letter) pair must be covered by exactly one edge; imports
//! re-check totality through [`Dfa::from_parts`].

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use shaper_core::{Alphabet, Dfa, Letter, StateId};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DfaFile {
    pub ap: Vec<String>,
    pub states: usize,
    pub initial: StateId,
    pub accepting: Vec<StateId>,
    pub edges: Vec<EdgeFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeFile {
    pub from: StateId,
    /// Each letter is the list of propositions true in it.
    pub letters: Vec<Vec<String>>,
    pub to: StateId,
}

fn letter_names(ap: &Alphabet, letter: Letter) -> Vec<String> {
    (0..ap.len() as u8)
        .filter(|&atom| letter.contains(atom))
        .map(|atom| ap.name(atom).to_string())
        .collect()
}

pub fn to_file(dfa: &Dfa) -> DfaFile {
    let ap = dfa.alphabet();
    let mut edges = Vec::new();
    for q in 0..dfa.num_states() {
        for (to, letters) in dfa.guards(q) {
            edges.push(EdgeFile {
                from: q,
                letters: letters.iter().map(|&l| letter_names(ap, l)).collect(),
                to,
            });
        }
    }
    DfaFile {
        ap: ap.names().to_vec(),
        states: dfa.num_states(),
        initial: dfa.initial(),
        accepting: dfa.accepting().iter().copied().collect(),
        edges,
    }
}

pub fn from_file(file: &DfaFile) -> Result<Dfa, CliError> {
    let ap = Alphabet::new(file.ap.iter().map(String::as_str))
        .map_err(|e| CliError::config(format!("automaton alphabet: {e}")))?;
    let unset = file.states; // sentinel: one past the last valid state
    let mut trans = vec![vec![unset; ap.num_letters()]; file.states];
    for edge in &file.edges {
        if edge.from >= file.states {
            return Err(CliError::config(format!(
                "automaton edge from undeclared state {}",
                edge.from
            )));
        }
        for names in &edge.letters {
            let mut atoms = Vec::with_capacity(names.len());
            for name in names {
                let atom = ap.index_of(name).ok_or_else(|| {
                    CliError::config(format!("automaton letter uses unknown proposition `{name}`"))
                })?;
                atoms.push(atom);
            }
            let letter = ap.letter(atoms);
            let slot = &mut trans[edge.from][letter.bits() as usize];
            if *slot != unset {
                return Err(CliError::config(format!(
                    "automaton has two edges from state {} on the same letter",
                    edge.from
                )));
            }
            *slot = edge.to;
        }
    }
    for (q, row) in trans.iter().enumerate() {
        if row.contains(&unset) {
            return Err(CliError::config(format!(
                "automaton is not total: state {q} misses a letter"
            )));
        }
    }
    let accepting: BTreeSet<StateId> = file.accepting.iter().copied().collect();
    Dfa::from_parts(ap, file.initial, accepting, trans)
        .map_err(|e| CliError::config(format!("automaton: {e}")))
}

pub fn read_json(path: &Path) -> Result<Dfa, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read automaton {}: {e}", path.display())))?;
    let file: DfaFile = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("automaton {}: {e}", path.display())))?;
    from_file(&file)
}

pub fn write_json(dfa: &Dfa, path: &Path) -> Result<(), CliError> {
    let file = to_file(dfa);
    let mut text = serde_json::to_string_pretty(&file).expect("automaton serializes");
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Graphviz rendering with one edge per (source, target) pair, labeled by
/// its letters; `{}` is the empty letter.
pub fn to_dot(dfa: &Dfa) -> String {
    let ap = dfa.alphabet();
    let mut out = String::from("digraph dfa {\n  rankdir=LR;\n  node [shape=circle];\n");
    for q in 0..dfa.num_states() {
        if dfa.is_accepting(q) {
            let _ = writeln!(out, "  q{q} [shape=doublecircle];");
        }
    }
    let _ = writeln!(out, "  init [shape=point];\n  init -> q{};", dfa.initial());
    for q in 0..dfa.num_states() {
        for (to, letters) in dfa.guards(q) {
            let label: Vec<String> = letters
                .iter()
                .map(|&l| {
                    let names = letter_names(ap, l);
                    format!("{{{}}}", names.join(","))
                })
                .collect();
            let _ = writeln!(out, "  q{q} -> q{to} [label=\"{}\"];", label.join(" "));
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use shaper_core::dfa::fixture_dfa;

    fn assert_same_language(a: &Dfa, b: &Dfa) {
        assert_eq!(a.num_states(), b.num_states());
        for q in 0..a.num_states() {
            assert_eq!(a.is_accepting(q), b.is_accepting(q));
            for l in a.alphabet().letters() {
                assert_eq!(a.step(q, l), b.step(q, l), "state {q} letter {:#b}", l.bits());
            }
        }
    }

    #[test]
    fn fixture_round_trips_through_json() {
        let dfa = fixture_dfa();
        let back = from_file(&to_file(&dfa)).unwrap();
        assert_same_language(&dfa, &back);
    }

    #[test]
    fn bundled_fixture_file_matches_the_fixture_automaton() {
        let text = include_str!("../assets/fixture_automaton.json");
        let file: DfaFile = serde_json::from_str(text).unwrap();
        let loaded = from_file(&file).unwrap();
        assert_same_language(&fixture_dfa(), &loaded);
    }

    #[test]
    fn duplicate_letters_are_rejected() {
        let mut file = to_file(&fixture_dfa());
        let dup = file.edges[0].clone();
        file.edges.push(dup);
        assert!(from_file(&file).is_err());
    }

    #[test]
    fn dot_output_marks_accepting_states() {
        let dot = to_dot(&fixture_dfa());
        assert!(dot.contains("q4 [shape=doublecircle]"));
        assert!(dot.contains("init -> q0"));
    }
}
