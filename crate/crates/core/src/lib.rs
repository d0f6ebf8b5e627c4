//! Exact symbolic exterior calculus for the covering and contact symmetry
//! pseudo-group of Plebański's second heavenly equation.
//!
//! Everything is computed over exact rational-function coefficients; there is
//! no floating point anywhere. The crate is organized bottom-up:
//!
//! * [`symexpr`] — sparse multivariate polynomials and normalized rational
//!   functions over the rationals,
//! * [`forms`] — the exterior algebra of differential forms over those
//!   coefficients, with wedge, exterior derivative, substitution and linear
//!   solving for unknown 1-forms,
//! * [`jets`] — jet-space bookkeeping, total derivatives and reduction modulo
//!   the second heavenly equation,
//! * [`covering`] — the one-parameter covering of the equation, its prolonged
//!   total derivatives and Wahlquist–Estabrook forms,
//! * [`pseudogroup`] — the lifted coframe of the contact pseudo-group, the
//!   reduced Maurer–Cartan forms and the derivation of the generating
//!   Wahlquist–Estabrook form from them,
//! * [`abstract_eds`] — formal exterior calculus on the abstract
//!   Maurer–Cartan generators of the involutive structure-equation system,
//! * [`checks`] — the named verification checks exposed by the CLI.

pub mod abstract_eds;
pub mod checks;
pub mod covering;
pub mod forms;
pub mod jets;
pub mod pseudogroup;
pub mod report;
pub mod symexpr;

pub use report::{Report, Status};
