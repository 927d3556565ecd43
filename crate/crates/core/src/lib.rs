//! Inversion and optimization of oversampled FIR filter banks.
//!
//! Given a complex analysis bank with `M` channels decimated by `N < M`, this
//! crate can:
//!
//! - decide whether its polyphase matrix admits an FIR left inverse
//!   ([`invertibility`]),
//! - compute the minimum-order pseudo-inverse synthesis bank, optionally with
//!   Hermitian symmetry ([`inverse_solver`]),
//! - parameterize every FIR inverse of a given order as an affine set
//!   ([`paramspace`]),
//! - optimize the synthesis filters for time or frequency localization while
//!   keeping perfect reconstruction exact ([`objective`], [`optimizer`]).
//!
//! Data-parallel inner loops run on rayon when the `parallel` feature is on
//! (default). Reductions are always performed in a fixed order, so results
//! are bit-identical with and without the feature.

pub mod bank_gen;
pub mod diagnostics;
pub mod error;
pub mod filterbank;
pub mod invertibility;
pub mod inverse_solver;
pub mod io;
pub mod laurent;
pub mod objective;
pub mod optimizer;
pub mod par;
pub mod paramspace;
pub mod tol;

pub use error::{Error, Result};
pub use num_complex::Complex64;

#[cfg(test)]
pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
