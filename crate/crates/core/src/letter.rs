//! Atomic propositions and alphabet letters.
//!
//! A [`Letter`] is one symbol of the alphabet `2^AP`: the subset of atomic
//! propositions that hold at a single step, stored as a bitmask over an
//! ordered proposition list. The ordering is fixed by the [`Alphabet`] and
//! recorded with every automaton built from it.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Maximum number of atomic propositions. Letters are enumerated explicitly
/// (`2^|AP|` of them), so the bound keeps every construction tractable.
pub const MAX_PROPS: usize = 16;

/// Index of an atomic proposition within an [`Alphabet`].
pub type AtomId = u8;

/// An ordered, duplicate-free list of atomic proposition names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    names: Vec<String>,
}

/// Errors raised when declaring an alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AlphabetError {
    Empty,
    Duplicate(String),
    TooLarge(usize),
}

impl fmt::Display for AlphabetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphabetError::Empty => write!(f, "proposition list is empty"),
            AlphabetError::Duplicate(name) => write!(f, "duplicate proposition `{name}`"),
            AlphabetError::TooLarge(n) => {
                write!(f, "{n} propositions exceed the limit of {MAX_PROPS}")
            }
        }
    }
}

impl core::error::Error for AlphabetError {}

impl Alphabet {
    pub fn new<I, S>(names: I) -> Result<Self, AlphabetError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(AlphabetError::Empty);
        }
        if names.len() > MAX_PROPS {
            return Err(AlphabetError::TooLarge(names.len()));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(AlphabetError::Duplicate(n.clone()));
            }
        }
        Ok(Alphabet { names })
    }

    /// Number of atomic propositions `|AP|`.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Number of letters `2^|AP|`.
    pub fn num_letters(&self) -> usize {
        1usize << self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, atom: AtomId) -> &str {
        &self.names[atom as usize]
    }

    pub fn index_of(&self, name: &str) -> Option<AtomId> {
        self.names.iter().position(|n| n == name).map(|i| i as AtomId)
    }

    /// All letters of the alphabet, in bitmask order.
    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..self.num_letters() as u32).map(|bits| Letter {
            bits,
            width: self.names.len() as u8,
        })
    }

    /// The letter containing exactly the given atoms.
    pub fn letter<I: IntoIterator<Item = AtomId>>(&self, atoms: I) -> Letter {
        let mut bits = 0u32;
        for a in atoms {
            debug_assert!((a as usize) < self.names.len());
            bits |= 1 << a;
        }
        Letter {
            bits,
            width: self.names.len() as u8,
        }
    }

    /// The empty letter (no proposition holds).
    pub fn empty_letter(&self) -> Letter {
        Letter {
            bits: 0,
            width: self.names.len() as u8,
        }
    }

    /// Reconstructs a letter from its bitmask.
    pub fn letter_from_bits(&self, bits: u32) -> Letter {
        debug_assert!(bits < self.num_letters() as u32);
        Letter {
            bits,
            width: self.names.len() as u8,
        }
    }
}

/// A subset of AP: one symbol of the alphabet `2^AP`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    bits: u32,
    width: u8,
}

impl Letter {
    pub fn contains(&self, atom: AtomId) -> bool {
        self.bits & (1 << atom) != 0
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn width(&self) -> u8 {
        self.width
    }

    /// Number of propositions that hold.
    pub fn count(&self) -> u32 {
        self.bits.count_ones()
    }
}
