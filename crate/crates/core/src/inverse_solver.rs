//! Minimum-order FIR synthesis banks through the block-convolution system.
//!
//! The perfect-reconstruction identity `H~[z] H[z] = I_N`, restricted to
//! synthesis orders `-p1..=p2`, is the linear system `Hcal * Hcal~ = Ucal`
//! where
//!
//! - `Hcal` is `(k+p-1)N x pM`, block `(m + p1, l + p1)` equal to `H(m - l)^T`,
//! - `Hcal~` stacks `H~(-p1)^T, ..., H~(p2)^T` (`pM x N`),
//! - `Ucal` is zero except for `I_N` at block row `p1`.
//!
//! The Hermitian-symmetric variant solves an equally sized real system and
//! lifts the solution back with the block-diagonal matrix `P_rc`.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::{PolyphaseBlocks, SynthesisBank};
use crate::par;
use crate::tol::Tolerances;

const HS_TOL: f64 = 1e-12;

/// Complex block-convolution system for a fixed `(p1, p2)`.
#[derive(Clone, Debug)]
pub struct PrSystem {
    pub hcal: DMatrix<Complex64>,
    pub ucal: DMatrix<Complex64>,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub p1: usize,
    pub p2: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    /// `M = 2M'`
    Even,
    /// `M = 2M' + 1`, with a real middle channel.
    Odd,
}

/// Real system of the Hermitian-symmetric construction.
#[derive(Clone, Debug)]
pub struct HsSystem {
    pub hcal: DMatrix<f64>,
    pub ucal: DMatrix<f64>,
    pub parity: Parity,
    /// `M'`, the number of mirrored channel pairs.
    pub half: usize,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub p1: usize,
    pub p2: usize,
}

/// Residual and rank for one `(p1, p2)` candidate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderAttempt {
    pub p1: usize,
    pub p2: usize,
    pub residual: f64,
    pub rank: usize,
}

#[derive(Clone, Debug)]
pub struct InverseSolution {
    pub bank: SynthesisBank,
    pub p1: usize,
    pub p2: usize,
    /// `||Hcal Hcal~ - Ucal||_F / ||Ucal||_F`.
    pub residual: f64,
    pub rank: usize,
    pub hermitian: bool,
    /// Every candidate of strictly smaller order, all above tolerance.
    pub rejected: Vec<OrderAttempt>,
}

impl InverseSolution {
    pub fn metadata(&self) -> SolveMetadata {
        SolveMetadata {
            p1: self.p1,
            p2: self.p2,
            residual: self.residual,
            rank: self.rank,
            hermitian: self.hermitian,
        }
    }
}

/// Metadata written next to a synthesis bank.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveMetadata {
    pub p1: usize,
    pub p2: usize,
    pub residual: f64,
    pub rank: usize,
    #[serde(default)]
    pub hermitian: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    /// Largest `p = p1 + p2 + 1` tried; `None` means `4k`.
    pub p_max: Option<usize>,
    pub tol: Tolerances,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            p_max: None,
            tol: Tolerances::default(),
        }
    }
}

/// Pseudo-inverse solution and null space of a (possibly wide) matrix.
#[derive(Clone, Debug)]
pub(crate) struct Decomposition<T: ComplexField> {
    pub rank: usize,
    pub particular: DMatrix<T>,
    /// Orthonormal basis of `Ker(A)`, `cols x (cols - rank)`.
    pub null_basis: DMatrix<T>,
}

/// SVD-based `A^# * rhs` and null-space basis. The numerical rank counts
/// singular values above `rank_factor * max(rows, cols) * eps * sigma_max`.
pub(crate) fn decompose<T>(a: &DMatrix<T>, rhs: &DMatrix<T>, rank_factor: f64) -> Decomposition<T>
where
    T: ComplexField<RealField = f64>,
{
    let (rows, cols) = a.shape();
    // Pad wide matrices with zero rows so that V comes out complete.
    let padded_rows = rows.max(cols);
    let mut work = DMatrix::<T>::zeros(padded_rows, cols);
    work.view_mut((0, 0), (rows, cols)).copy_from(a);
    let svd = work.svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma = svd.singular_values;

    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap_or(std::cmp::Ordering::Equal));
    let sigma_max = order.first().map(|&i| sigma[i]).unwrap_or(0.0);
    let threshold = rank_factor * (rows.max(cols) as f64) * f64::EPSILON * sigma_max;
    let rank = order.iter().filter(|&&i| sigma[i] > threshold).count();

    let mut particular = DMatrix::<T>::zeros(cols, rhs.ncols());
    for &s in order.iter().take(rank) {
        let inv = T::from_real(1.0 / sigma[s]);
        for c in 0..rhs.ncols() {
            // u_s^* rhs[:, c]
            let mut proj = T::zero();
            for r in 0..rows {
                proj += u[(r, s)].clone().conjugate() * rhs[(r, c)].clone();
            }
            let coef = proj * inv.clone();
            for i in 0..cols {
                particular[(i, c)] += v_t[(s, i)].clone().conjugate() * coef.clone();
            }
        }
    }
    let null_basis = DMatrix::from_fn(cols, cols - rank, |i, c| {
        v_t[(order[rank + c], i)].clone().conjugate()
    });
    Decomposition {
        rank,
        particular,
        null_basis,
    }
}

fn relative_residual<T>(a: &DMatrix<T>, x: &DMatrix<T>, rhs: &DMatrix<T>) -> f64
where
    T: ComplexField<RealField = f64>,
{
    (a * x - rhs).norm() / rhs.norm()
}

/// Block-Toeplitz layout shared by both systems: block `(r, c)` is
/// `lag_blocks[r - c]` when that lag exists.
fn block_toeplitz<T>(lag_blocks: &[DMatrix<T>], p: usize) -> DMatrix<T>
where
    T: ComplexField,
{
    let k = lag_blocks.len();
    let (bh, bw) = lag_blocks[0].shape();
    let mut out = DMatrix::<T>::zeros((k + p - 1) * bh, p * bw);
    for c in 0..p {
        for (q, blk) in lag_blocks.iter().enumerate() {
            let r = c + q;
            out.view_mut((r * bh, c * bw), (bh, bw)).copy_from(blk);
        }
    }
    out
}

fn selector<T: ComplexField>(n: usize, k: usize, p1: usize, p2: usize, value: T) -> DMatrix<T> {
    let p = p1 + p2 + 1;
    let mut u = DMatrix::<T>::zeros((k + p - 1) * n, n);
    for i in 0..n {
        u[(p1 * n + i, i)] = value.clone();
    }
    u
}

pub fn build_system(pp: &PolyphaseBlocks, p1: usize, p2: usize) -> PrSystem {
    let p = p1 + p2 + 1;
    let lags: Vec<DMatrix<Complex64>> = pp.blocks().iter().map(|b| b.transpose()).collect();
    PrSystem {
        hcal: block_toeplitz(&lags, p),
        ucal: selector(pp.n(), pp.k(), p1, p2, Complex64::new(1.0, 0.0)),
        n: pp.n(),
        m: pp.m(),
        k: pp.k(),
        p1,
        p2,
    }
}

/// True iff `H(l) = J_M conj(H(l))` for every block, within `1e-12`.
pub fn check_hs_analysis(pp: &PolyphaseBlocks) -> bool {
    hs_defect(pp) <= HS_TOL
}

/// `max |H(l)[i][j] - conj(H(l)[M-1-i][j])|`.
pub fn hs_defect(pp: &PolyphaseBlocks) -> f64 {
    let m = pp.m();
    pp.blocks()
        .iter()
        .flat_map(|b| {
            (0..m).flat_map(move |i| (0..b.ncols()).map(move |j| (b[(i, j)] - b[(m - 1 - i, j)].conj()).norm()))
        })
        .fold(0.0, f64::max)
}

fn parity_of(m: usize) -> (Parity, usize) {
    if m % 2 == 0 {
        (Parity::Even, m / 2)
    } else {
        (Parity::Odd, (m - 1) / 2)
    }
}

pub fn build_hs_system(pp: &PolyphaseBlocks, p1: usize, p2: usize) -> Result<HsSystem> {
    if !check_hs_analysis(pp) {
        return Err(Error::NotHermitianSymmetric);
    }
    let (m, n) = (pp.m(), pp.n());
    let (parity, half) = parity_of(m);
    let sqrt_half = std::f64::consts::FRAC_1_SQRT_2;
    // Per lag, the real M x N stack [H1^R; c2^T / sqrt2; H1^I], transposed.
    let lags: Vec<DMatrix<f64>> = pp
        .blocks()
        .iter()
        .map(|b| {
            DMatrix::from_fn(n, m, |j, col| {
                if col < half {
                    b[(col, j)].re
                } else if parity == Parity::Odd && col == half {
                    b[(half, j)].re * sqrt_half
                } else {
                    let r = col - (m - half);
                    b[(r, j)].im
                }
            })
        })
        .collect();
    let p = p1 + p2 + 1;
    Ok(HsSystem {
        hcal: block_toeplitz(&lags, p),
        ucal: selector(n, pp.k(), p1, p2, 0.5),
        parity,
        half,
        n,
        m,
        k: pp.k(),
        p1,
        p2,
    })
}

/// Block-diagonal `P_rc` (`pM x pM`) mapping the real HS unknowns to the
/// stacked complex synthesis matrix.
pub fn lift_matrix(m: usize, p: usize) -> DMatrix<Complex64> {
    let (parity, half) = parity_of(m);
    let one = Complex64::new(1.0, 0.0);
    let i_unit = Complex64::new(0.0, 1.0);
    let mut block = DMatrix::<Complex64>::zeros(m, m);
    let tail = m - half;
    for r in 0..half {
        // top rows: [I, 0, -i I]
        block[(r, r)] = one;
        block[(r, tail + r)] = -i_unit;
        // bottom rows: [J, 0, i J]
        let br = tail + r;
        block[(br, half - 1 - r)] = one;
        block[(br, m - 1 - r)] = i_unit;
    }
    if parity == Parity::Odd {
        block[(half, half)] = Complex64::new(std::f64::consts::SQRT_2, 0.0);
    }
    let mut out = DMatrix::<Complex64>::zeros(p * m, p * m);
    for b in 0..p {
        out.view_mut((b * m, b * m), (m, m)).copy_from(&block);
    }
    out
}

/// Reads synthesis blocks out of a stacked `pM x N` matrix.
pub(crate) fn bank_from_stacked(
    stacked: &DMatrix<Complex64>,
    n: usize,
    m: usize,
    p1: usize,
    p2: usize,
) -> Result<SynthesisBank> {
    let p = p1 + p2 + 1;
    let blocks = (0..p)
        .map(|b| DMatrix::from_fn(n, m, |i, j| stacked[(b * m + j, i)]))
        .collect();
    SynthesisBank::new(n, m, p1, p2, blocks)
}

/// Order candidates for a given `p`: `(p-1, 0), (p-2, 1), ..., (0, p-1)`.
pub fn order_candidates(p: usize) -> Vec<(usize, usize)> {
    (0..p).map(|p2| (p - 1 - p2, p2)).collect()
}

fn solve_general_at(pp: &PolyphaseBlocks, p1: usize, p2: usize, tol: &Tolerances) -> Result<(OrderAttempt, SynthesisBank)> {
    let sys = build_system(pp, p1, p2);
    let dec = decompose(&sys.hcal, &sys.ucal, tol.rank_factor);
    let residual = relative_residual(&sys.hcal, &dec.particular, &sys.ucal);
    let bank = bank_from_stacked(&dec.particular, sys.n, sys.m, p1, p2)?;
    Ok((
        OrderAttempt {
            p1,
            p2,
            residual,
            rank: dec.rank,
        },
        bank,
    ))
}

fn solve_hs_at(pp: &PolyphaseBlocks, p1: usize, p2: usize, tol: &Tolerances) -> Result<(OrderAttempt, SynthesisBank)> {
    let sys = build_hs_system(pp, p1, p2)?;
    let dec = decompose(&sys.hcal, &sys.ucal, tol.rank_factor);
    let residual = relative_residual(&sys.hcal, &dec.particular, &sys.ucal);
    let p = p1 + p2 + 1;
    let stacked = lift_matrix(sys.m, p) * dec.particular.map(|v| Complex64::new(v, 0.0));
    let bank = bank_from_stacked(&stacked, sys.n, sys.m, p1, p2)?;
    Ok((
        OrderAttempt {
            p1,
            p2,
            residual,
            rank: dec.rank,
        },
        bank,
    ))
}

type Attempt = fn(&PolyphaseBlocks, usize, usize, &Tolerances) -> Result<(OrderAttempt, SynthesisBank)>;

fn search(pp: &PolyphaseBlocks, opts: &SolverOptions, attempt: Attempt, hermitian: bool) -> Result<InverseSolution> {
    let p_max = opts.p_max.unwrap_or(4 * pp.k());
    let mut rejected = Vec::new();
    for p in 1..=p_max {
        let candidates = order_candidates(p);
        // Candidates are solved concurrently; the first in order wins.
        let results = par::map_slice(&candidates, |&(p1, p2)| attempt(pp, p1, p2, &opts.tol));
        for result in results {
            let (info, bank) = result?;
            if info.residual <= opts.tol.pr {
                return Ok(InverseSolution {
                    bank,
                    p1: info.p1,
                    p2: info.p2,
                    residual: info.residual,
                    rank: info.rank,
                    hermitian,
                    rejected,
                });
            }
            rejected.push(info);
        }
    }
    Err(Error::OrderBudgetExceeded { p_max })
}

/// Smallest-order pseudo-inverse synthesis bank.
pub fn solve_min_order(pp: &PolyphaseBlocks, opts: &SolverOptions) -> Result<InverseSolution> {
    search(pp, opts, solve_general_at, false)
}

/// Smallest-order Hermitian-symmetric synthesis bank (requires an HS analysis bank).
pub fn solve_min_order_hs(pp: &PolyphaseBlocks, opts: &SolverOptions) -> Result<InverseSolution> {
    if !check_hs_analysis(pp) {
        return Err(Error::NotHermitianSymmetric);
    }
    search(pp, opts, solve_hs_at, true)
}

/// Pseudo-inverse at a prescribed order; fails when the system has no exact solution.
pub fn solve_at_order(pp: &PolyphaseBlocks, p1: usize, p2: usize, hermitian: bool, tol: &Tolerances) -> Result<InverseSolution> {
    let (info, bank) = if hermitian {
        if !check_hs_analysis(pp) {
            return Err(Error::NotHermitianSymmetric);
        }
        solve_hs_at(pp, p1, p2, tol)?
    } else {
        solve_general_at(pp, p1, p2, tol)?
    };
    if info.residual > tol.pr {
        return Err(Error::NotSolvableAtOrder {
            p1,
            p2,
            residual: info.residual,
        });
    }
    Ok(InverseSolution {
        bank,
        p1,
        p2,
        residual: info.residual,
        rank: info.rank,
        hermitian,
        rejected: Vec::new(),
    })
}
