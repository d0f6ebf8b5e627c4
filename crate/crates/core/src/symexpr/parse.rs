//! Recursive-descent parser for the scalar expression syntax: identifiers,
//! integer literals, rationals `p/q`, operators `+ - * / ^`, parentheses.
//!
//! Jet variables are spelled `u_txy` (direction letters sorted t < x < y < z),
//! covering variables `q_i_j`. The parser itself is permissive about names;
//! contexts validate membership where it matters.

use std::fmt;

use num_bigint::BigInt;

use super::{ArithError, Scalar, Var};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parse error at byte {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Int(BigInt),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                toks.push((i, Tok::Plus));
                i += 1;
            }
            '-' => {
                toks.push((i, Tok::Minus));
                i += 1;
            }
            '*' => {
                toks.push((i, Tok::Star));
                i += 1;
            }
            '/' => {
                toks.push((i, Tok::Slash));
                i += 1;
            }
            '^' => {
                toks.push((i, Tok::Caret));
                i += 1;
            }
            '(' => {
                toks.push((i, Tok::LParen));
                i += 1;
            }
            ')' => {
                toks.push((i, Tok::RParen));
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let n: BigInt = text[start..i].parse().expect("digits");
                toks.push((start, Tok::Int(n)));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((start, Tok::Ident(text[start..i].to_string())));
            }
            other => {
                return Err(ParseError {
                    pos: i,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            pos: self.here(),
            msg: msg.into(),
        })
    }

    fn arith(&self, r: Result<Scalar, ArithError>) -> Result<Scalar, ParseError> {
        r.map_err(|e| ParseError {
            pos: self.here(),
            msg: e.to_string(),
        })
    }

    fn expr(&mut self) -> Result<Scalar, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    acc = acc.add(&self.term()?);
                }
                Some(Tok::Minus) => {
                    self.bump();
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Scalar, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    acc = acc.mul(&self.unary()?);
                }
                Some(Tok::Slash) => {
                    self.bump();
                    let rhs = self.unary()?;
                    acc = self.arith(acc.div(&rhs))?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Scalar, ParseError> {
        if let Some(Tok::Minus) = self.peek() {
            self.bump();
            return Ok(self.unary()?.neg());
        }
        self.power()
    }

    fn power(&mut self) -> Result<Scalar, ParseError> {
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.bump();
            let neg = if let Some(Tok::Minus) = self.peek() {
                self.bump();
                true
            } else {
                false
            };
            match self.bump() {
                Some(Tok::Int(n)) => {
                    let e: i64 = match n.try_into() {
                        Ok(e) => e,
                        Err(_) => return self.err("exponent out of range"),
                    };
                    let e = if neg { -e } else { e };
                    self.arith(base.pow(e))
                }
                _ => self.err("expected integer exponent after `^`"),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Scalar, ParseError> {
        match self.bump() {
            Some(Tok::Ident(name)) => Ok(Scalar::var(Var::new(&name))),
            Some(Tok::Int(n)) => Ok(Scalar::from_rational(n.into())),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => self.err("expected `)`"),
                }
            }
            _ => self.err("expected identifier, number or `(`"),
        }
    }
}

/// Parses a scalar expression.
pub fn parse_scalar(text: &str) -> Result<Scalar, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let out = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(out)
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Int(n) => write!(f, "{n}"),
            Tok::Plus => f.write_str("+"),
            Tok::Minus => f.write_str("-"),
            Tok::Star => f.write_str("*"),
            Tok::Slash => f.write_str("/"),
            Tok::Caret => f.write_str("^"),
            Tok::LParen => f.write_str("("),
            Tok::RParen => f.write_str(")"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rationals_and_powers() {
        let a = parse_scalar("3/4 * u_xy^2 - 1").unwrap();
        let b = parse_scalar("-(1 - 3*u_xy*u_xy/4)").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn negative_exponent_is_inverse() {
        let a = parse_scalar("lambda*u_xy^-1").unwrap();
        let b = parse_scalar("lambda/u_xy").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn roundtrip_through_display() {
        for text in [
            "u_xy^2 - 2*lambda*u_xy + lambda^2",
            "(u_tt + 1/3)/(b11*b44 - b14*b41)",
            "0",
            "-5/7",
        ] {
            let s = parse_scalar(text).unwrap();
            let again = parse_scalar(&s.to_string()).unwrap();
            assert_eq!(s, again, "roundtrip of {text}");
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_scalar("u_xy +").is_err());
        assert!(parse_scalar("u_xy ? 2").is_err());
        assert!(parse_scalar("(u_xy").is_err());
    }

    #[test]
    fn division_by_zero_reported() {
        assert!(parse_scalar("1/0").is_err());
        assert!(parse_scalar("1/(u - u)").is_err());
    }
}
