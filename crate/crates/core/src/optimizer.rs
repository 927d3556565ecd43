//! Gradient descent with a harmonic backtracking step.
//!
//! Each outer iteration starts from `mu = 1`; after `t` rejected trials the
//! step is `mu = 1 / (t + 1)`. A trial is accepted only when it strictly
//! lowers the cost, so the recorded cost sequence is strictly decreasing.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::{AnalysisBank, SynthesisBank};
use crate::inverse_solver::{
    build_hs_system, build_system, solve_min_order, solve_min_order_hs, InverseSolution, SolverOptions,
};
use crate::objective::{CostConfig, CostFunction, Kernel, LocalizationCost};
use crate::paramspace::{build_paramspace, build_paramspace_hs, ParamSpace};

/// Most iteration records kept in [`OptimResult::history`].
pub const HISTORY_CAP: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimOptions {
    /// Stop once `||C_{n+1} - C_n||_F <= eps`.
    pub eps: f64,
    pub max_iter: usize,
    /// Smallest step tried before declaring the point stationary.
    pub min_step: f64,
    /// Rejected trials allowed in one outer iteration.
    pub max_rejections: usize,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            eps: 1e-13,
            max_iter: 100_000,
            min_step: 1e-16,
            max_rejections: 10_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iteration: usize,
    pub cost: f64,
    /// Accepted `mu` (0 for the initial point).
    pub step: f64,
    /// `||grad J||_F` at the iterate.
    pub gradient_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The accepted update was below `eps`.
    Converged,
    /// No trial step lowered the cost.
    Stationary,
    MaxIterations,
    /// The solution set is a single point.
    EmptyParameter,
}

#[derive(Clone, Debug)]
pub struct OptimResult {
    pub c: DMatrix<Complex64>,
    pub cost: f64,
    pub iterations: usize,
    pub stop: StopReason,
    pub history: Vec<IterRecord>,
}

fn gradient_norm(g: &DMatrix<Complex64>) -> f64 {
    g.norm()
}

/// Minimizes `f` from `c0`.
pub fn minimize(f: &dyn CostFunction, c0: DMatrix<Complex64>, opts: &OptimOptions) -> Result<OptimResult> {
    if c0.shape() != f.param_shape() {
        return Err(Error::DimensionMismatch("initial point has the wrong shape".into()));
    }
    if !(opts.eps > 0.0) || !(opts.min_step > 0.0) {
        return Err(Error::InvalidConfig("eps and min_step must be positive".into()));
    }

    let mut c = c0;
    let mut cost = f.cost(&c)?;
    if c.nrows() == 0 {
        return Ok(OptimResult {
            history: vec![IterRecord {
                iteration: 0,
                cost,
                step: 0.0,
                gradient_norm: 0.0,
            }],
            c,
            cost,
            iterations: 0,
            stop: StopReason::EmptyParameter,
        });
    }
    let mut grad = f.gradient(&c)?;
    let mut history = vec![IterRecord {
        iteration: 0,
        cost,
        step: 0.0,
        gradient_norm: gradient_norm(&grad),
    }];
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;

    'outer: for iteration in 1..=opts.max_iter {
        let gnorm = grad.norm();
        if gnorm == 0.0 {
            stop = StopReason::Stationary;
            break;
        }
        let mut rejections = 0usize;
        loop {
            let mu = 1.0 / (rejections + 1) as f64;
            if mu < opts.min_step || mu * gnorm <= opts.eps || rejections > opts.max_rejections {
                stop = StopReason::Stationary;
                break 'outer;
            }
            let trial = &c - &grad * Complex64::new(mu, 0.0);
            match f.cost(&trial) {
                Ok(value) if value < cost => {
                    let moved = mu * gnorm;
                    c = trial;
                    cost = value;
                    grad = f.gradient(&c)?;
                    iterations = iteration;
                    if history.len() < HISTORY_CAP {
                        history.push(IterRecord {
                            iteration,
                            cost,
                            step: mu,
                            gradient_norm: gradient_norm(&grad),
                        });
                    }
                    if moved <= opts.eps {
                        stop = StopReason::Converged;
                        break 'outer;
                    }
                    break;
                }
                _ => rejections += 1,
            }
        }
    }
    if stop == StopReason::MaxIterations {
        log::warn!(
            "optimizer stopped after {} iterations without meeting eps = {:e}",
            opts.max_iter,
            opts.eps
        );
    }
    Ok(OptimResult {
        iterations,
        c,
        cost,
        stop,
        history,
    })
}

/// Optimized synthesis bank together with the optimizer trace.
#[derive(Clone, Debug)]
pub struct Optimized {
    pub bank: SynthesisBank,
    pub result: OptimResult,
}

/// Minimizes the localization cost over `ps` starting from the pseudo-inverse.
pub fn optimize(ps: &ParamSpace, kernels: Vec<Kernel>, opts: &OptimOptions) -> Result<Optimized> {
    let cost = LocalizationCost::new(ps, kernels)?;
    let result = minimize(&cost, ps.zero_param(), opts)?;
    let bank = ps.assemble(&result.c)?;
    Ok(Optimized { bank, result })
}

/// Order used for optimization when none is given: one block beyond the
/// minimal order on the anticausal side.
///
/// At the minimal order the pseudo-inverse is often already a stationary
/// point of the localization costs.
pub fn default_order(min_p1: usize, min_p2: usize) -> (usize, usize) {
    (min_p1 + 1, min_p2)
}

/// Everything produced by [`design`].
#[derive(Clone, Debug)]
pub struct Design {
    /// Minimal-order pseudo-inverse (general or HS).
    pub minimal: InverseSolution,
    pub param_space: ParamSpace,
    /// Pseudo-inverse at the optimization order (`C = 0`).
    pub start: SynthesisBank,
    pub optimized: Optimized,
}

/// Minimal-order inverse, parameterization at `order` (or [`default_order`])
/// and cost minimization from the pseudo-inverse.
pub fn design(
    analysis: &AnalysisBank,
    config: &CostConfig,
    hermitian: bool,
    order: Option<(usize, usize)>,
    opts: &OptimOptions,
    solver: &SolverOptions,
) -> Result<Design> {
    let pp = analysis.polyphase();
    let minimal = if hermitian {
        solve_min_order_hs(&pp, solver)?
    } else {
        solve_min_order(&pp, solver)?
    };
    let (p1, p2) = order.unwrap_or_else(|| default_order(minimal.p1, minimal.p2));
    let param_space = if hermitian {
        build_paramspace_hs(&build_hs_system(&pp, p1, p2)?, &solver.tol)?
    } else {
        build_paramspace(&build_system(&pp, p1, p2), &solver.tol)?
    };
    let kernels = config.kernels(&param_space, analysis)?;
    let start = param_space.assemble(&param_space.zero_param())?;
    let optimized = optimize(&param_space, kernels, opts)?;
    Ok(Design {
        minimal,
        param_space,
        start,
        optimized,
    })
}

/// Writes `iteration,cost,step,gradient_norm` rows.
pub fn write_history_csv<W: Write>(history: &[IterRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "iteration,cost,step,gradient_norm")?;
    for r in history {
        writeln!(out, "{},{:.17e},{:.17e},{:.17e}", r.iteration, r.cost, r.step, r.gradient_norm)?;
    }
    Ok(())
}
