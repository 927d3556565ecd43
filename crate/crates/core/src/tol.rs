//! Numerical tolerances shared across modules.
//!
//! Every field can be overridden through an `OBFB_TOL_<NAME>` environment
//! variable (for instance `OBFB_TOL_PR=1e-10`), see [`Tolerances::from_env`].

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Absolute magnitude below which edge coefficients of a Laurent
    /// polynomial are stripped.
    pub zero: f64,
    /// Two roots `r1`, `r2` are equal when `|r1 - r2| <= root_match * max(1, |r1|)`.
    pub root_match: f64,
    /// A root survives a minor determinant `d` when its scaled residual is at
    /// most `root_survival * max|coeff(d)| * width(d)`.
    pub root_survival: f64,
    /// Relative Frobenius residual accepting a pseudo-inverse solution.
    pub pr: f64,
    /// Multiplier of `max(rows, cols) * eps * sigma_max` for numerical rank.
    pub rank_factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            zero: 1e-12,
            root_match: 1e-7,
            root_survival: 1e-8,
            pr: 1e-9,
            rank_factor: 1.0,
        }
    }
}

impl Tolerances {
    /// Defaults, with any `OBFB_TOL_*` environment overrides applied.
    pub fn from_env() -> Self {
        Self::default().with_env()
    }

    /// `self` with any `OBFB_TOL_*` environment overrides applied.
    pub fn with_env(self) -> Self {
        let mut tol = self;
        let read = |name: &str| -> Option<f64> {
            std::env::var(format!("OBFB_TOL_{name}"))
                .ok()
                .and_then(|v| v.trim().parse().ok())
        };
        if let Some(v) = read("ZERO") {
            tol.zero = v;
        }
        if let Some(v) = read("ROOT_MATCH") {
            tol.root_match = v;
        }
        if let Some(v) = read("ROOT_SURVIVAL") {
            tol.root_survival = v;
        }
        if let Some(v) = read("PR") {
            tol.pr = v;
        }
        if let Some(v) = read("RANK_FACTOR") {
            tol.rank_factor = v;
        }
        tol
    }
}
