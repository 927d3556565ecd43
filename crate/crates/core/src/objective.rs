//! Localization costs over the free matrix of a [`ParamSpace`].
//!
//! Every cost has the form
//!
//! ```text
//! J(C) = sum_j ||A_j||_{K_j}^2 / ||A_j||_Lambda^2,   A_j = V_j C + H0_j
//! ```
//!
//! where `||A||_K^2 = sum A(i,l) conj(A(i',l')) K(i,i',l,l')` and `Lambda` is
//! the identity kernel (Frobenius norm). The time kernel is diagonal, the
//! frequency kernel depends only on the time lag `d = N(l - l') - (i - i')`.
//!
//! Tap matrices are `p x N` and indexed `(l, i)`; the flattened index used by
//! kernels is `u = i + l N`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::{AnalysisBank, ImpulseResponses};
use crate::par;
use crate::paramspace::ParamSpace;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const PSD_SLACK: f64 = 1e-10;
const MIN_ENERGY: f64 = 1e-14;
const QUADRATURE_TOL: f64 = 1e-10;

/// A differentiable cost over a complex (or real) parameter matrix.
///
/// The gradient follows the convention `dJ/dRe(C) + i dJ/dIm(C)`; for real
/// parameterizations it is real.
pub trait CostFunction {
    fn param_shape(&self) -> (usize, usize);
    fn cost(&self, c: &DMatrix<Complex64>) -> Result<f64>;
    fn gradient(&self, c: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Time,
    Freq,
}

/// Weighted-ratio kernel `K(i, i', l, l')` over `N x p` tap arrays.
#[derive(Clone, Debug, PartialEq)]
pub enum Kernel {
    /// `K'[u][u] = gamma[u]`, zero off the diagonal.
    Diagonal { n: usize, p: usize, gamma: Vec<f64> },
    /// `K'[u][u'] = lag[(m_u - m_u') + p N - 1]` with `m_u = l N - i`.
    Lag { n: usize, p: usize, lag: Vec<Complex64> },
    /// Explicit `K'`, `pN x pN`.
    Dense { n: usize, p: usize, matrix: DMatrix<Complex64> },
}

impl Kernel {
    /// The identity kernel `Lambda`.
    pub fn lambda(n: usize, p: usize) -> Self {
        Kernel::Diagonal {
            n,
            p,
            gamma: vec![1.0; n * p],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        match self {
            Kernel::Diagonal { n, p, .. } | Kernel::Lag { n, p, .. } | Kernel::Dense { n, p, .. } => (*n, *p),
        }
    }

    /// `K'[u][u']` with `u = i + l N`.
    pub fn flat_entry(&self, u: usize, v: usize) -> Complex64 {
        match self {
            Kernel::Diagonal { gamma, .. } => {
                if u == v {
                    Complex64::new(gamma[u], 0.0)
                } else {
                    ZERO
                }
            }
            Kernel::Lag { n, p, lag } => {
                let d = time_index(u, *n) - time_index(v, *n);
                lag[(d + (*p * *n) as i64 - 1) as usize]
            }
            Kernel::Dense { matrix, .. } => matrix[(u, v)],
        }
    }

    /// `K(i, i', l, l')`.
    pub fn entry(&self, i: usize, i2: usize, l: usize, l2: usize) -> Complex64 {
        let (n, _) = self.dims();
        self.flat_entry(i + l * n, i2 + l2 * n)
    }

    /// The flattened `pN x pN` matrix `K'`.
    pub fn dense(&self) -> DMatrix<Complex64> {
        let (n, p) = self.dims();
        DMatrix::from_fn(n * p, n * p, |u, v| self.flat_entry(u, v))
    }

    /// `G[u'] = sum_u K'[u][u'] a[u]` for taps laid out `(l, i)`.
    fn contract(&self, taps: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let (n, p) = self.dims();
        match self {
            Kernel::Diagonal { gamma, .. } => {
                DMatrix::from_fn(p, n, |l, i| taps[(l, i)] * gamma[i + l * n])
            }
            _ => {
                let total = n * p;
                let flat: Vec<Complex64> = (0..total).map(|u| taps[(u / n, u % n)]).collect();
                DMatrix::from_fn(p, n, |l, i| {
                    let v = i + l * n;
                    flat.iter()
                        .enumerate()
                        .fold(ZERO, |acc, (u, &a)| acc + self.flat_entry(u, v) * a)
                })
            }
        }
    }
}

/// Relative time index `l N - i` of flattened position `u = i + l N`.
fn time_index(u: usize, n: usize) -> i64 {
    ((u / n) * n) as i64 - (u % n) as i64
}

/// `sum A(i,l) conj(A(i',l')) K(i,i',l,l')` for taps laid out `(l, i)`.
pub fn seminorm_sq(taps: &DMatrix<Complex64>, kernel: &Kernel) -> Result<f64> {
    let g = kernel.contract(taps);
    quadratic_value(taps, &g)
}

fn quadratic_value(taps: &DMatrix<Complex64>, g: &DMatrix<Complex64>) -> Result<f64> {
    let mut acc = ZERO;
    let mut scale = 0.0;
    for (a, gv) in taps.iter().zip(g.iter()) {
        acc += a.conj() * gv;
        scale += a.norm() * gv.norm();
    }
    if acc.im.abs() > PSD_SLACK * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::KernelNotHermitian { imag: acc.im });
    }
    if acc.re < -PSD_SLACK {
        return Err(Error::KernelNotPsd { value: acc.re });
    }
    Ok(acc.re.max(0.0))
}

/// Diagonal time kernel `w |l N - i - center|^alpha` for `l` in `-p1..=p2`.
pub fn kernel_time(weight: f64, alpha: f64, center: f64, n: usize, p1: usize, p2: usize) -> Kernel {
    let p = p1 + p2 + 1;
    let gamma = (0..n * p)
        .map(|u| {
            let l = (u / n) as i64 - p1 as i64;
            let i = (u % n) as i64;
            let m = (l * n as i64 - i) as f64;
            weight * (m - center).abs().powf(alpha)
        })
        .collect();
    Kernel::Diagonal { n, p, gamma }
}

/// Frequency kernel `w * int_{-1/2}^{1/2} |nu|^alpha exp(-2 i pi d (nu + f)) dnu`
/// tabulated over all lags of a `p x N` tap array.
pub fn kernel_freq(weight: f64, alpha: f64, center: f64, n: usize, p: usize) -> Kernel {
    let span = (p * n) as i64 - 1;
    let lag = (-span..=span)
        .map(|d| freq_kernel_value(weight, alpha, center, d))
        .collect();
    Kernel::Lag { n, p, lag }
}

/// One lag of the frequency kernel: closed form for `alpha = 2`, adaptive
/// Simpson quadrature otherwise.
pub fn freq_kernel_value(weight: f64, alpha: f64, center: f64, d: i64) -> Complex64 {
    let moment = if alpha == 2.0 {
        if d == 0 {
            1.0 / 12.0
        } else {
            let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
            sign / (2.0 * PI * PI * (d * d) as f64)
        }
    } else {
        power_cosine_moment(alpha, d)
    };
    Complex64::from_polar(weight * moment, -2.0 * PI * d as f64 * center)
}

/// `int_{-1/2}^{1/2} |nu|^alpha cos(2 pi d nu) dnu` by adaptive Simpson.
pub fn power_cosine_moment(alpha: f64, d: i64) -> f64 {
    if d == 0 {
        return 2.0 * 0.5_f64.powf(alpha + 1.0) / (alpha + 1.0);
    }
    let f = |nu: f64| nu.powf(alpha) * (2.0 * PI * d as f64 * nu).cos();
    // Split at the cosine's zero crossings so each piece is smooth and short.
    let pieces = (2 * d.unsigned_abs() as usize).max(1);
    let h = 0.5 / pieces as f64;
    let tol = QUADRATURE_TOL / pieces as f64;
    2.0 * (0..pieces)
        .map(|s| adaptive_simpson(&f, s as f64 * h, (s + 1) as f64 * h, tol))
        .sum::<f64>()
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// User-facing cost configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostConfig {
    pub criterion: Criterion,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Per-channel weights summing to one; `None` means `1/M` each.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    /// Time centers (time criterion) or frequency centers (frequency
    /// criterion); `None` picks the defaults described on [`CostConfig::kernels`].
    #[serde(default)]
    pub centers: Option<Vec<f64>>,
}

fn default_alpha() -> f64 {
    2.0
}

impl CostConfig {
    pub fn new(criterion: Criterion) -> Self {
        Self {
            criterion,
            alpha: 2.0,
            weights: None,
            centers: None,
        }
    }

    fn resolved_weights(&self, m: usize) -> Result<Vec<f64>> {
        match &self.weights {
            None => Ok(vec![1.0 / m as f64; m]),
            Some(w) => {
                if w.len() != m {
                    return Err(Error::InvalidConfig(format!("expected {m} weights, got {}", w.len())));
                }
                if w.iter().any(|&x| !(x >= 0.0)) {
                    return Err(Error::InvalidConfig("weights must be non-negative".into()));
                }
                let sum: f64 = w.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidConfig(format!("weights sum to {sum}, expected 1")));
                }
                Ok(w.clone())
            }
        }
    }

    /// One kernel per channel for the order of `ps`.
    ///
    /// Default time center: the middle of the synthesis support,
    /// `(p2 N + 1 - p1 N - N) / 2`. Default frequency center: the circular
    /// power centroid of the matching analysis filter.
    pub fn kernels(&self, ps: &ParamSpace, analysis: &AnalysisBank) -> Result<Vec<Kernel>> {
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidConfig("alpha must be positive".into()));
        }
        let m = ps.m();
        if analysis.m() != m || analysis.n() != ps.n() {
            return Err(Error::DimensionMismatch("analysis bank does not match the parameter space".into()));
        }
        let weights = self.resolved_weights(m)?;
        let centers = match &self.centers {
            Some(c) if c.len() != m => {
                return Err(Error::InvalidConfig(format!("expected {m} centers, got {}", c.len())))
            }
            Some(c) => c.clone(),
            None => match self.criterion {
                Criterion::Time => vec![default_time_center(ps.n(), ps.p1(), ps.p2()); m],
                Criterion::Freq => default_freq_centers(analysis),
            },
        };
        let (n, p) = (ps.n(), ps.p());
        Ok((0..m)
            .map(|j| match self.criterion {
                Criterion::Time => kernel_time(weights[j], self.alpha, centers[j], n, ps.p1(), ps.p2()),
                Criterion::Freq => kernel_freq(weights[j], self.alpha, centers[j], n, p),
            })
            .collect())
    }
}

/// Middle of the synthesis support `{-p1 N - N + 1, ..., p2 N}`.
pub fn default_time_center(n: usize, p1: usize, p2: usize) -> f64 {
    let (n, p1, p2) = (n as f64, p1 as f64, p2 as f64);
    (p2 * n + 1.0 - p1 * n - n) / 2.0
}

/// Circular centroid of `|h_j[nu]|^2` on a 4096-point grid, folded into `[-1/2, 1/2)`.
pub fn default_freq_centers(analysis: &AnalysisBank) -> Vec<f64> {
    const GRID: usize = 4096;
    (0..analysis.m())
        .map(|j| {
            let resp = analysis.frequency_response(j, GRID);
            let mut acc = ZERO;
            for (g, h) in resp.iter().enumerate() {
                let nu = -0.5 + g as f64 / GRID as f64;
                acc += Complex64::from_polar(h.norm_sqr(), 2.0 * PI * nu);
            }
            let f = acc.arg() / (2.0 * PI);
            if f >= 0.5 {
                f - 1.0
            } else {
                f
            }
        })
        .collect()
}

/// The ratio cost of a parameter space under per-channel kernels.
pub struct LocalizationCost<'a> {
    ps: &'a ParamSpace,
    kernels: Vec<Kernel>,
    /// Transposed `K'` for non-diagonal kernels, so that `G = K'^T a` is one product.
    dense_t: Vec<Option<DMatrix<Complex64>>>,
}

/// Numerator and denominator of one channel's ratio.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelTerm {
    pub weighted: f64,
    pub energy: f64,
}

impl ChannelTerm {
    pub fn ratio(&self) -> f64 {
        self.weighted / self.energy
    }
}

impl<'a> LocalizationCost<'a> {
    pub fn new(ps: &'a ParamSpace, kernels: Vec<Kernel>) -> Result<Self> {
        if kernels.len() != ps.m() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} kernels, got {}",
                ps.m(),
                kernels.len()
            )));
        }
        if kernels.iter().any(|k| k.dims() != (ps.n(), ps.p())) {
            return Err(Error::DimensionMismatch("kernel dimensions do not match the order".into()));
        }
        let dense_t = kernels
            .iter()
            .map(|k| match k {
                Kernel::Diagonal { .. } => None,
                _ => Some(k.dense().transpose()),
            })
            .collect();
        Ok(Self { ps, kernels, dense_t })
    }

    pub fn param_space(&self) -> &ParamSpace {
        self.ps
    }

    pub fn kernels(&self) -> &[Kernel] {
        &self.kernels
    }

    fn channel(&self, j: usize, c: &DMatrix<Complex64>) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>, ChannelTerm)> {
        let taps = self.ps.channel_taps(j, c)?;
        let g = match &self.dense_t[j] {
            None => self.kernels[j].contract(&taps),
            Some(kt) => {
                // Row-major flattening of a p x N matrix is exactly u = i + l N.
                let (p, n) = taps.shape();
                let flat = DVector::from_iterator(p * n, taps.transpose().iter().copied());
                let g = kt * flat;
                DMatrix::from_fn(p, n, |l, i| g[i + l * n])
            }
        };
        let weighted = quadratic_value(&taps, &g)?;
        let energy = taps.norm_squared();
        if energy < MIN_ENERGY {
            return Err(Error::DegenerateChannel { channel: j, energy });
        }
        Ok((taps, g, ChannelTerm { weighted, energy }))
    }

    /// Per-channel numerators and denominators at `c`.
    pub fn channel_terms(&self, c: &DMatrix<Complex64>) -> Result<Vec<ChannelTerm>> {
        par::map_range(self.ps.m(), |j| self.channel(j, c).map(|(_, _, t)| t))
            .into_iter()
            .collect()
    }
}

impl CostFunction for LocalizationCost<'_> {
    fn param_shape(&self) -> (usize, usize) {
        (self.ps.dim(), self.ps.n())
    }

    fn cost(&self, c: &DMatrix<Complex64>) -> Result<f64> {
        let terms = self.channel_terms(c)?;
        Ok(terms.iter().map(ChannelTerm::ratio).sum())
    }

    fn gradient(&self, c: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        // grad = 2 sum_j V_j^* (beta_j G_j - alpha_j A_j) / beta_j^2
        let parts = par::map_range(self.ps.m(), |j| -> Result<DMatrix<Complex64>> {
            let (taps, g, term) = self.channel(j, c)?;
            let beta = term.energy;
            let inner = (g * Complex64::new(beta, 0.0) - taps * Complex64::new(term.weighted, 0.0)) / Complex64::new(beta * beta, 0.0);
            Ok(self.ps.slice(j).adjoint() * inner * Complex64::new(2.0, 0.0))
        });
        let mut grad = DMatrix::zeros(self.ps.dim(), self.ps.n());
        for part in parts {
            grad += part?;
        }
        if self.ps.is_hermitian() {
            grad.iter_mut().for_each(|v| v.im = 0.0);
        }
        Ok(grad)
    }
}
