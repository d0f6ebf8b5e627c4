//! Exact arithmetic kernel: interned variables, sparse multivariate
//! polynomials over the rationals, and normalized rational functions.

mod parse;
mod poly;
mod scalar;

pub use parse::{parse_scalar, ParseError};
pub(crate) use parse::{tokenize, Tok};
pub use poly::{poly_gcd, Mono, Poly};
pub use scalar::Scalar;

use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

/// An interned symbol name.
///
/// Variables are ordered by their names, so canonical forms do not depend on
/// interning order. Interning is injective: equal names yield pointer-equal
/// `Var`s.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(&'static str);

static INTERNER: Mutex<Option<HashMap<&'static str, Var>>> = Mutex::new(None);

impl Var {
    /// Interns `name` and returns the associated variable.
    pub fn new(name: &str) -> Var {
        let mut guard = INTERNER.lock().expect("interner poisoned");
        let table = guard.get_or_insert_with(HashMap::new);
        if let Some(v) = table.get(name) {
            return *v;
        }
        let leaked: &'static str = Box::leak(name.to_owned().into_boxed_str());
        let v = Var(leaked);
        table.insert(leaked, v);
        v
    }

    pub fn name(&self) -> &'static str {
        self.0
    }
}

impl PartialOrd for Var {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Var {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        if std::ptr::eq(self.0, other.0) {
            std::cmp::Ordering::Equal
        } else {
            self.0.cmp(other.0)
        }
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Var({})", self.0)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0)
    }
}

/// Errors from exact scalar arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ArithError {
    #[error("division by zero polynomial")]
    DivisionByZero,
    #[error("substitution creates zero denominator in factor `{factor}`")]
    ZeroDenominator { factor: String },
}
