//! Surface-syntax parser for co-safe LTL specifications.
//!
//! Concrete syntax: `!` (negation, atoms only), `&`, `|`, `X` (next),
//! `U` (until, right-associative), `F` (eventually), parentheses, and the
//! constants `true`/`false`. Operator precedence, strongest first:
//! `!` > `X`,`F` > `U` > `&` > `|`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::formula::Formula;
use crate::letter::Alphabet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset into the specification text.
    pub position: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    EmptyInput,
    UnexpectedChar(char),
    /// `found` is the offending token text; `expected` describes what would
    /// have been accepted at this position.
    UnexpectedToken { found: String, expected: &'static str },
    UnknownAtom(String),
    /// The co-safe grammar permits negation only directly on atoms.
    NegationOfNonAtom,
    TrailingInput(String),
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at position {}: ", self.position)?;
        match &self.kind {
            ParseErrorKind::EmptyInput => write!(f, "empty specification"),
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character `{c}`"),
            ParseErrorKind::UnexpectedToken { found, expected } => {
                write!(f, "unexpected `{found}`, expected {expected}")
            }
            ParseErrorKind::UnknownAtom(name) => {
                write!(f, "atom `{name}` is not in the declared proposition set")
            }
            ParseErrorKind::NegationOfNonAtom => {
                write!(f, "negation may only be applied to an atom")
            }
            ParseErrorKind::TrailingInput(tok) => write!(f, "trailing input starting at `{tok}`"),
        }
    }
}

impl core::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Ident(String),
    True,
    False,
    Not,
    And,
    Or,
    Next,
    Until,
    Eventually,
    LParen,
    RParen,
}

impl Token {
    fn text(&self) -> String {
        match self {
            Token::Ident(s) => s.clone(),
            Token::True => "true".to_string(),
            Token::False => "false".to_string(),
            Token::Not => "!".to_string(),
            Token::And => "&".to_string(),
            Token::Or => "|".to_string(),
            Token::Next => "X".to_string(),
            Token::Until => "U".to_string(),
            Token::Eventually => "F".to_string(),
            Token::LParen => "(".to_string(),
            Token::RParen => ")".to_string(),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let mut tokens = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '!' => {
                tokens.push((i, Token::Not));
                i += 1;
            }
            '&' => {
                tokens.push((i, Token::And));
                i += 1;
            }
            '|' => {
                tokens.push((i, Token::Or));
                i += 1;
            }
            '(' => {
                tokens.push((i, Token::LParen));
                i += 1;
            }
            ')' => {
                tokens.push((i, Token::RParen));
                i += 1;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                let word = &text[start..i];
                let tok = match word {
                    "X" => Token::Next,
                    "U" => Token::Until,
                    "F" => Token::Eventually,
                    "true" => Token::True,
                    "false" => Token::False,
                    _ => Token::Ident(word.to_string()),
                };
                tokens.push((start, tok));
            }
            other => {
                return Err(ParseError {
                    position: i,
                    kind: ParseErrorKind::UnexpectedChar(other),
                })
            }
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    ap: &'a Alphabet,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&(usize, Token)> {
        self.tokens.get(self.pos)
    }

    fn advance(&mut self) -> Option<(usize, Token)> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, expected: &'static str) -> ParseError {
        match self.peek() {
            Some((p, t)) => ParseError {
                position: *p,
                kind: ParseErrorKind::UnexpectedToken {
                    found: t.text(),
                    expected,
                },
            },
            None => ParseError {
                position: self.end,
                kind: ParseErrorKind::UnexpectedToken {
                    found: "end of input".to_string(),
                    expected,
                },
            },
        }
    }

    // or_expr := and_expr ('|' and_expr)*
    fn or_expr(&mut self) -> Result<Formula, ParseError> {
        let mut items = alloc::vec![self.and_expr()?];
        while matches!(self.peek(), Some((_, Token::Or))) {
            self.advance();
            items.push(self.and_expr()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Formula::Or(items)
        })
    }

    // and_expr := until_expr ('&' until_expr)*
    fn and_expr(&mut self) -> Result<Formula, ParseError> {
        let mut items = alloc::vec![self.until_expr()?];
        while matches!(self.peek(), Some((_, Token::And))) {
            self.advance();
            items.push(self.until_expr()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Formula::And(items)
        })
    }

    // until_expr := unary ('U' until_expr)?   (right-associative)
    fn until_expr(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.unary()?;
        if matches!(self.peek(), Some((_, Token::Until))) {
            self.advance();
            let rhs = self.until_expr()?;
            Ok(Formula::Until(alloc::boxed::Box::new(lhs), alloc::boxed::Box::new(rhs)))
        } else {
            Ok(lhs)
        }
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some((_, Token::Not)) => {
                let (not_pos, _) = self.advance().unwrap();
                match self.advance() {
                    Some((_, Token::Ident(name))) => {
                        let atom = self.ap.index_of(&name).ok_or(ParseError {
                            position: not_pos + 1,
                            kind: ParseErrorKind::UnknownAtom(name),
                        })?;
                        Ok(Formula::NegAtom(atom))
                    }
                    Some((p, _)) => Err(ParseError {
                        position: p,
                        kind: ParseErrorKind::NegationOfNonAtom,
                    }),
                    None => Err(ParseError {
                        position: self.end,
                        kind: ParseErrorKind::NegationOfNonAtom,
                    }),
                }
            }
            Some((_, Token::Next)) => {
                self.advance();
                Ok(Formula::Next(alloc::boxed::Box::new(self.unary()?)))
            }
            Some((_, Token::Eventually)) => {
                self.advance();
                Ok(Formula::Eventually(alloc::boxed::Box::new(self.unary()?)))
            }
            Some((_, Token::LParen)) => {
                self.advance();
                let inner = self.or_expr()?;
                if matches!(self.peek(), Some((_, Token::RParen))) {
                    self.advance();
                    Ok(inner)
                } else {
                    Err(self.error_here("`)`"))
                }
            }
            Some((_, Token::True)) => {
                self.advance();
                Ok(Formula::True)
            }
            Some((_, Token::False)) => {
                self.advance();
                Ok(Formula::False)
            }
            Some((p, Token::Ident(name))) => {
                let (p, name) = (*p, name.clone());
                let atom = self.ap.index_of(&name).ok_or(ParseError {
                    position: p,
                    kind: ParseErrorKind::UnknownAtom(name),
                })?;
                self.advance();
                Ok(Formula::Atom(atom))
            }
            _ => Err(self.error_here("an atom, `!`, `X`, `F`, `(`, `true`, or `false`")),
        }
    }
}

/// Parses a specification string over the declared proposition set.
pub fn parse(text: &str, ap: &Alphabet) -> Result<Formula, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError {
            position: 0,
            kind: ParseErrorKind::EmptyInput,
        });
    }
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        ap,
        end: text.len(),
    };
    let formula = parser.or_expr()?;
    if let Some((p, t)) = parser.peek() {
        return Err(ParseError {
            position: *p,
            kind: ParseErrorKind::TrailingInput(t.text()),
        });
    }
    Ok(formula)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::boxed::Box;
    use alloc::vec;

    fn ap_oby() -> Alphabet {
        Alphabet::new(vec!["o", "b", "y"]).unwrap()
    }

    #[test]
    fn parses_the_flag_collection_task() {
        // (!y) U ((o & ((!y) U b)) | (b & ((!y) U o)))
        let ap = ap_oby();
        let f = parse("(!y) U ((o & ((!y) U b)) | (b & ((!y) U o)))", &ap).unwrap();
        let not_y = Formula::NegAtom(2);
        let expected = Formula::Until(
            Box::new(not_y.clone()),
            Box::new(Formula::Or(vec![
                Formula::And(vec![
                    Formula::Atom(0),
                    Formula::Until(Box::new(not_y.clone()), Box::new(Formula::Atom(1))),
                ]),
                Formula::And(vec![
                    Formula::Atom(1),
                    Formula::Until(Box::new(not_y), Box::new(Formula::Atom(0))),
                ]),
            ])),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn single_atom() {
        let ap = Alphabet::new(vec!["a"]).unwrap();
        assert_eq!(parse("a", &ap).unwrap(), Formula::Atom(0));
    }

    #[test]
    fn rejects_negated_temporal_formula() {
        let ap = Alphabet::new(vec!["a", "b"]).unwrap();
        let err = parse("!(a U b)", &ap).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::NegationOfNonAtom);
    }

    #[test]
    fn rejects_unknown_atom_with_position() {
        let ap = Alphabet::new(vec!["a"]).unwrap();
        let err = parse("a & z", &ap).unwrap_err();
        assert_eq!(err.position, 4);
        assert_eq!(err.kind, ParseErrorKind::UnknownAtom("z".into()));
    }

    #[test]
    fn until_is_right_associative() {
        let ap = Alphabet::new(vec!["a", "b", "c"]).unwrap();
        let f = parse("a U b U c", &ap).unwrap();
        assert_eq!(
            f,
            Formula::Until(
                Box::new(Formula::Atom(0)),
                Box::new(Formula::Until(
                    Box::new(Formula::Atom(1)),
                    Box::new(Formula::Atom(2))
                ))
            )
        );
    }

    #[test]
    fn precedence_order() {
        let ap = Alphabet::new(vec!["a", "b", "c"]).unwrap();
        // X binds tighter than U, U tighter than &, & tighter than |
        let f = parse("X a U b & c | a", &ap).unwrap();
        assert_eq!(
            f,
            Formula::Or(vec![
                Formula::And(vec![
                    Formula::Until(
                        Box::new(Formula::Next(Box::new(Formula::Atom(0)))),
                        Box::new(Formula::Atom(1))
                    ),
                    Formula::Atom(2),
                ]),
                Formula::Atom(0),
            ])
        );
    }

    #[test]
    fn empty_and_trailing() {
        let ap = Alphabet::new(vec!["a"]).unwrap();
        assert_eq!(parse("  ", &ap).unwrap_err().kind, ParseErrorKind::EmptyInput);
        assert!(matches!(
            parse("a a", &ap).unwrap_err().kind,
            ParseErrorKind::TrailingInput(_)
        ));
    }
}
