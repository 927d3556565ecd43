//! Laurent polynomials and polynomial matrices over the complex field.
//!
//! A [`LaurentPoly`] stores the coefficient of `z^-(lo + t)` at index `t`,
//! i.e. it is an ordinary polynomial in `w = z^-1` shifted by `w^lo`. The
//! support is kept tight: after normalization the first and last stored
//! coefficients are nonzero and the zero polynomial has no coefficients.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default absolute tolerance for stripping edge coefficients.
pub const DEFAULT_ZERO_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct LaurentPoly {
    lo: i64,
    coeffs: Vec<Complex64>,
}

impl Default for LaurentPoly {
    fn default() -> Self {
        Self::zero()
    }
}

impl LaurentPoly {
    pub fn zero() -> Self {
        Self {
            lo: 0,
            coeffs: Vec::new(),
        }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(0, vec![c])
    }

    /// `c * z^-power`.
    pub fn monomial(power: i64, c: Complex64) -> Self {
        Self::new(power, vec![c])
    }

    /// Builds and normalizes with [`DEFAULT_ZERO_TOL`].
    pub fn new(lo: i64, coeffs: Vec<Complex64>) -> Self {
        Self { lo, coeffs }.normalize(DEFAULT_ZERO_TOL)
    }

    /// Builds without touching the coefficients.
    pub fn from_raw(lo: i64, coeffs: Vec<Complex64>) -> Self {
        Self { lo, coeffs }
    }

    /// From real coefficients, normalized.
    pub fn from_real(lo: i64, coeffs: &[f64]) -> Self {
        Self::new(lo, coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lowest power of `z^-1` in the support.
    pub fn lo(&self) -> i64 {
        self.lo
    }

    /// Highest power of `z^-1` in the support.
    pub fn hi(&self) -> i64 {
        self.lo + self.coeffs.len() as i64 - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Number of stored coefficients.
    pub fn width(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient of `z^-power`.
    pub fn coeff(&self, power: i64) -> Complex64 {
        let t = power - self.lo;
        if t < 0 || t >= self.coeffs.len() as i64 {
            ZERO
        } else {
            self.coeffs[t as usize]
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Strips edge coefficients of magnitude `<= tol`.
    pub fn normalize(mut self, tol: f64) -> Self {
        let first = self.coeffs.iter().position(|c| c.norm() > tol);
        match first {
            None => Self::zero(),
            Some(first) => {
                let last = self.coeffs.iter().rposition(|c| c.norm() > tol).unwrap();
                self.coeffs.truncate(last + 1);
                self.coeffs.drain(..first);
                self.lo += first as i64;
                self
            }
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.lo, self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Value at `z` (which must be nonzero when negative powers of `z^-1` occur).
    pub fn eval(&self, z: Complex64) -> Complex64 {
        if self.is_zero() {
            return ZERO;
        }
        let w = z.inv();
        horner(&self.coeffs, w) * w.powi(self.lo as i32)
    }

    /// Value at `z` multiplied by the unit `z^s` that brings the dominant
    /// monomial of the support to modulus one. Zeros of the result coincide
    /// with zeros of the polynomial, and `|result| <= max|coeff| * width`.
    pub fn eval_unit_scaled(&self, z: Complex64) -> Complex64 {
        if self.is_zero() {
            return ZERO;
        }
        let w = z.inv();
        if w.norm() <= 1.0 {
            horner(&self.coeffs, w)
        } else {
            let rev: Vec<Complex64> = self.coeffs.iter().rev().copied().collect();
            horner(&rev, z)
        }
    }

    /// Finite nonzero roots in `z`, with multiplicity.
    ///
    /// Monomials are units of the Laurent ring, so `z = 0` (and infinity) is
    /// never reported. Roots come from the eigenvalues of a balanced companion
    /// matrix followed by a guarded Newton polish.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let degree = self.coeffs.len() - 1;
        if degree == 0 {
            return Ok(Vec::new());
        }
        // p(z) * z^(lo + degree) = sum_t c_t z^(degree - t); leading coefficient c_0.
        let lead = self.coeffs[0];
        let mut comp = DMatrix::<Complex64>::zeros(degree, degree);
        for i in 1..degree {
            comp[(i, i - 1)] = ONE;
        }
        for s in 0..degree {
            // coefficient of z^s in the monic polynomial
            comp[(s, degree - 1)] = -self.coeffs[degree - s] / lead;
        }
        balance(&mut comp);
        let schur = Schur::try_new(comp, f64::EPSILON, 100_000)
            .ok_or(Error::RootFinding { degree })?;
        let (_, t) = schur.unpack();
        let mut roots: Vec<Complex64> = (0..degree).map(|i| t[(i, i)]).collect();
        for r in roots.iter_mut() {
            *r = self.polish(*r);
        }
        if roots.iter().any(|r| !r.re.is_finite() || !r.im.is_finite()) {
            return Err(Error::RootFinding { degree });
        }
        Ok(roots)
    }

    fn polish(&self, mut z: Complex64) -> Complex64 {
        // Ordinary polynomial in z: coefficients c_0 z^d + ... + c_d.
        let eval = |z: Complex64| -> (Complex64, Complex64) {
            let mut p = ZERO;
            let mut dp = ZERO;
            for &c in &self.coeffs {
                dp = dp * z + p;
                p = p * z + c;
            }
            (p, dp)
        };
        let mut best = self.eval_unit_scaled(z).norm();
        for _ in 0..3 {
            let (p, dp) = eval(z);
            if dp.norm() == 0.0 {
                break;
            }
            let candidate = z - p / dp;
            let res = self.eval_unit_scaled(candidate).norm();
            if res < best && candidate.re.is_finite() && candidate.im.is_finite() {
                best = res;
                z = candidate;
            } else {
                break;
            }
        }
        z
    }
}

fn horner(coeffs: &[Complex64], x: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(ZERO, |acc, &c| acc * x + c)
}

/// Parlett–Reinsch diagonal similarity balancing with powers of two.
fn balance(a: &mut DMatrix<Complex64>) {
    let n = a.nrows();
    let radix = 2.0_f64;
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut col = 0.0;
            let mut row = 0.0;
            for j in 0..n {
                if j != i {
                    col += a[(j, i)].l1_norm();
                    row += a[(i, j)].l1_norm();
                }
            }
            if col == 0.0 || row == 0.0 {
                continue;
            }
            let sum = col + row;
            let mut f = 1.0;
            let mut g = row / radix;
            while col < g {
                f *= radix;
                col *= radix * radix;
            }
            g = row * radix;
            while col > g {
                f /= radix;
                col /= radix * radix;
            }
            if (col + row) / f < 0.95 * sum {
                converged = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= inv;
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

impl Mul for &LaurentPoly {
    type Output = LaurentPoly;

    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        if self.is_zero() || rhs.is_zero() {
            return LaurentPoly::zero();
        }
        let mut out = vec![ZERO; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (a, &x) in self.coeffs.iter().enumerate() {
            for (b, &y) in rhs.coeffs.iter().enumerate() {
                out[a + b] += x * y;
            }
        }
        LaurentPoly::new(self.lo + rhs.lo, out)
    }
}

impl Mul for LaurentPoly {
    type Output = LaurentPoly;

    fn mul(self, rhs: LaurentPoly) -> LaurentPoly {
        &self * &rhs
    }
}

fn combine(a: &LaurentPoly, b: &LaurentPoly, sign: f64) -> LaurentPoly {
    if a.is_zero() {
        return b.scale(Complex64::new(sign, 0.0));
    }
    if b.is_zero() {
        return a.clone();
    }
    let lo = a.lo.min(b.lo);
    let hi = a.hi().max(b.hi());
    let coeffs = (lo..=hi).map(|k| a.coeff(k) + b.coeff(k) * sign).collect();
    LaurentPoly::new(lo, coeffs)
}

impl Add for &LaurentPoly {
    type Output = LaurentPoly;

    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        combine(self, rhs, 1.0)
    }
}

impl Sub for &LaurentPoly {
    type Output = LaurentPoly;

    fn sub(self, rhs: &LaurentPoly) -> LaurentPoly {
        combine(self, rhs, -1.0)
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;

    fn neg(self) -> LaurentPoly {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

/// True when `a` and `b` denote the same root under the relative rule
/// `|a - b| <= tol * max(1, |a|)`.
pub fn roots_match(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(1.0)
}

/// Dense matrix of Laurent polynomials, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<LaurentPoly>,
}

impl LaurentMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![LaurentPoly::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| {
            if i == j {
                LaurentPoly::constant(ONE)
            } else {
                LaurentPoly::zero()
            }
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> LaurentPoly) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self {
            rows,
            cols,
            entries,
        }
    }

    /// `sum_l blocks[l] * z^-(first_power + l)`.
    pub fn from_blocks(blocks: &[DMatrix<Complex64>], first_power: i64) -> Self {
        let (rows, cols) = blocks.first().map(|b| b.shape()).unwrap_or((0, 0));
        Self::from_fn(rows, cols, |i, j| {
            LaurentPoly::new(first_power, blocks.iter().map(|b| b[(i, j)]).collect())
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &LaurentPoly {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, p: LaurentPoly) {
        self.entries[i * self.cols + j] = p;
    }

    /// Keeps the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self::from_fn(rows.len(), self.cols, |i, j| self.get(rows[i], j).clone())
    }

    /// Scalar matrix at `z`.
    pub fn eval(&self, z: Complex64) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).eval(z))
    }

    pub fn mul(&self, rhs: &LaurentMatrix) -> Result<LaurentMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(Self::from_fn(self.rows, rhs.cols, |i, j| {
            (0..self.cols).fold(LaurentPoly::zero(), |acc, t| {
                &acc + &(self.get(i, t) * rhs.get(t, j))
            })
        }))
    }

    fn require_square(&self) -> Result<()> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "determinant of a non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        Ok(())
    }

    /// Exact determinant: cofactor expansion up to size 3, evaluation on the
    /// unit circle plus interpolation beyond.
    pub fn determinant(&self) -> Result<LaurentPoly> {
        self.require_square()?;
        if self.rows <= 3 {
            Ok(self.determinant_cofactor())
        } else {
            self.determinant_interpolated()
        }
    }

    /// Laplace expansion along the first row. Exponential cost; intended for
    /// small sizes and as a reference.
    pub fn determinant_cofactor(&self) -> LaurentPoly {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let idx: Vec<usize> = (0..self.cols).collect();
        cofactor(self, 0, &idx)
    }

    /// Evaluates at `D` rotated roots of unity, where `D` bounds the number of
    /// coefficients of the determinant, and inverts the (unitary) sampling.
    pub fn determinant_interpolated(&self) -> Result<LaurentPoly> {
        self.require_square()?;
        let n = self.rows;
        if n == 0 {
            return Ok(LaurentPoly::constant(ONE));
        }
        let mut low_sum = 0i64;
        let mut width_sum = 0i64;
        for i in 0..n {
            let row = &self.entries[i * n..(i + 1) * n];
            let nonzero = row.iter().filter(|p| !p.is_zero());
            let lo = nonzero.clone().map(|p| p.lo()).min();
            let hi = nonzero.map(|p| p.hi()).max();
            match (lo, hi) {
                (Some(lo), Some(hi)) => {
                    low_sum += lo;
                    width_sum += hi - lo;
                }
                _ => return Ok(LaurentPoly::zero()),
            }
        }
        let d = (width_sum + 1) as usize;
        const ATTEMPTS: usize = 4;
        for attempt in 0..ATTEMPTS {
            // Deterministic pseudo-random rotations of the sample set.
            let theta = attempt as f64 * 0.618_033_988_749_895 * std::f64::consts::TAU / d as f64;
            let samples: Vec<Complex64> = (0..d)
                .map(|s| {
                    let w = Complex64::from_polar(1.0, theta + std::f64::consts::TAU * s as f64 / d as f64);
                    let m = DMatrix::from_fn(n, n, |i, j| {
                        let p = self.get(i, j);
                        if p.is_zero() {
                            ZERO
                        } else {
                            horner(p.coeffs(), w) * w.powi(p.lo() as i32)
                        }
                    });
                    m.determinant()
                })
                .collect();
            if samples.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                continue;
            }
            let coeffs: Vec<Complex64> = (0..d)
                .map(|t| {
                    let power = low_sum + t as i64;
                    let acc = samples.iter().enumerate().fold(ZERO, |acc, (s, &v)| {
                        let angle = (theta + std::f64::consts::TAU * s as f64 / d as f64) * power as f64;
                        acc + v * Complex64::from_polar(1.0, -angle)
                    });
                    acc / d as f64
                })
                .collect();
            return Ok(LaurentPoly::new(low_sum, coeffs));
        }
        Err(Error::Interpolation { attempts: ATTEMPTS })
    }
}

fn cofactor(m: &LaurentMatrix, row: usize, cols: &[usize]) -> LaurentPoly {
    if cols.len() == 1 {
        return m.get(row, cols[0]).clone();
    }
    let mut acc = LaurentPoly::zero();
    for (k, &c) in cols.iter().enumerate() {
        let entry = m.get(row, c);
        if entry.is_zero() {
            continue;
        }
        let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
        let term = entry * &cofactor(m, row + 1, &rest);
        acc = if k % 2 == 0 { &acc + &term } else { &acc - &term };
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c;

    fn real(lo: i64, xs: &[f64]) -> LaurentPoly {
        LaurentPoly::from_real(lo, xs)
    }

    #[test]
    fn normalize_strips_exact_zeros() {
        let p = LaurentPoly::from_raw(-1, vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).normalize(1e-12);
        assert_eq!(p.lo(), 0);
        assert_eq!(p.coeffs(), &[c(1.0, 0.0)]);
        assert!(LaurentPoly::from_raw(3, vec![]).normalize(1e-12).is_zero());
    }

    #[test]
    fn normalize_strips_below_tolerance() {
        let p = LaurentPoly::from_raw(2, vec![c(1e-18, 0.0), c(1.0, 0.0)]).normalize(1e-12);
        assert_eq!(p.lo(), 3);
        assert_eq!(p.coeffs(), &[c(1.0, 0.0)]);
    }

    #[test]
    fn product_examples() {
        // (1 - z^-1)(1 + z^-1) = 1 - z^-2
        let p = &real(0, &[1.0, -1.0]) * &real(0, &[1.0, 1.0]);
        assert_eq!(p, real(0, &[1.0, 0.0, -1.0]));
        assert!((&p * &LaurentPoly::zero()).is_zero());
        // z * z^-1 = 1
        let u = &LaurentPoly::monomial(-1, c(1.0, 0.0)) * &LaurentPoly::monomial(1, c(1.0, 0.0));
        assert_eq!(u, LaurentPoly::constant(c(1.0, 0.0)));
    }

    #[test]
    fn small_determinants() {
        let one = LaurentPoly::constant(c(1.0, 0.0));
        let zinv = LaurentPoly::monomial(1, c(1.0, 0.0));
        let diag = LaurentMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => one.clone(),
            (1, 1) => zinv.clone(),
            _ => LaurentPoly::zero(),
        });
        assert_eq!(diag.determinant().unwrap(), zinv);
        let ones = LaurentMatrix::from_fn(2, 2, |_, _| one.clone());
        assert!(ones.determinant().unwrap().is_zero());
    }

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        v
    }

    #[test]
    fn root_examples() {
        let r = real(0, &[1.0, -1.0]).roots().unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0] - c(1.0, 0.0)).norm() < 1e-14);

        assert!(LaurentPoly::monomial(3, c(2.0, 0.0)).roots().unwrap().is_empty());

        let r = sorted(real(0, &[1.0, 0.0, -1.0]).roots().unwrap());
        assert!((r[0] - c(-1.0, 0.0)).norm() < 1e-12);
        assert!((r[1] - c(1.0, 0.0)).norm() < 1e-12);

        assert!(matches!(LaurentPoly::zero().roots(), Err(Error::ZeroPolynomial)));
    }

    #[test]
    fn shifted_support_roots_ignore_monomial() {
        // z^2 (1 - 0.5 z^-1) has the single root 0.5
        let p = real(-2, &[1.0, -0.5]);
        let r = p.roots().unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0] - c(0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn non_square_determinant_is_an_error() {
        let m = LaurentMatrix::zeros(2, 3);
        assert!(matches!(m.determinant(), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn row_of_zeros_gives_zero_determinant() {
        let mut m = LaurentMatrix::identity(5);
        for j in 0..5 {
            m.set(2, j, LaurentPoly::zero());
        }
        assert!(m.determinant().unwrap().is_zero());
    }

    #[test]
    fn root_matching_rule() {
        assert!(roots_match(c(1.0, 0.0), c(1.0 + 5e-8, 0.0), 1e-7));
        assert!(!roots_match(c(1.0, 0.0), c(1.0 + 5e-7, 0.0), 1e-7));
        assert!(roots_match(c(1e4, 0.0), c(1e4 + 5e-4, 0.0), 1e-7));
    }
}
