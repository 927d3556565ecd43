//! Optional JSON configuration merged underneath command-line flags.
//!
//! ```json
//! {
//!   "hs": true,
//!   "p_max": 12,
//!   "order": [3, 0],
//!   "criterion": "freq",
//!   "alpha": 2.0,
//!   "weights": null,
//!   "centers": null,
//!   "eps": 1e-13,
//!   "max_iter": 100000,
//!   "grid": 8192,
//!   "trials": 10,
//!   "len": 1024,
//!   "seed": 0,
//!   "tolerances": {"root_survival": 1e-8}
//! }
//! ```
//!
//! Every key is optional. A flag given on the command line always wins, and
//! `OBFB_TOL_*` environment variables override the `tolerances` section.

use std::path::Path;

use anyhow::{Context, Result};
use obfb::objective::Criterion;
use obfb::tol::Tolerances;
use serde::Deserialize;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub hs: Option<bool>,
    pub p_max: Option<usize>,
    pub order: Option<[usize; 2]>,
    pub criterion: Option<Criterion>,
    pub alpha: Option<f64>,
    pub weights: Option<Vec<f64>>,
    pub centers: Option<Vec<f64>>,
    pub eps: Option<f64>,
    pub max_iter: Option<usize>,
    pub min_step: Option<f64>,
    pub max_rejections: Option<usize>,
    pub grid: Option<usize>,
    pub trials: Option<usize>,
    pub len: Option<usize>,
    pub seed: Option<u64>,
    pub tolerances: Option<Tolerances>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Tolerances from the config file, then `OBFB_TOL_*` overrides.
    pub fn tolerances(&self) -> Tolerances {
        self.tolerances.unwrap_or_default().with_env()
    }
}

/// `flag` if given, else the config value, else `default`.
pub fn pick<T>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}
