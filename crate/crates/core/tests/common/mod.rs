//! Helpers shared by the integration tests: random banks, banks with a
//! planted common factor, and an exact rational common-root oracle.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use obfb::filterbank::PolyphaseBlocks;
use obfb::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| random_complex(rng))
}

/// `k` random complex `m x n` polyphase blocks.
pub fn random_polyphase(rng: &mut ChaCha8Rng, m: usize, n: usize, k: usize) -> PolyphaseBlocks {
    PolyphaseBlocks::new((0..k).map(|_| random_matrix(rng, m, n)).collect()).unwrap()
}

/// Multiplies column `col` of `H[z]` by `1 - r z^-1`, planting the root `z = r`
/// in every maximal minor. The result has one more block.
pub fn plant_factor(pp: &PolyphaseBlocks, col: usize, r: Complex64) -> PolyphaseBlocks {
    let (m, n, k) = (pp.m(), pp.n(), pp.k());
    let mut blocks = pp.blocks().to_vec();
    blocks.push(DMatrix::zeros(m, n));
    for l in (0..=k).rev() {
        for i in 0..m {
            let here = if l < k { pp.blocks()[l][(i, col)] } else { Complex64::new(0.0, 0.0) };
            let prev = if l > 0 { pp.blocks()[l - 1][(i, col)] } else { Complex64::new(0.0, 0.0) };
            blocks[l][(i, col)] = here - r * prev;
        }
    }
    PolyphaseBlocks::new(blocks).unwrap()
}

/// Polynomial in `w = z^-1` with rational coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq)]
pub struct RatPoly(pub Vec<BigRational>);

impl RatPoly {
    pub fn from_ints(c: &[i64]) -> Self {
        RatPoly(c.iter().map(|&v| BigRational::from_integer(BigInt::from(v))).collect()).trim()
    }

    fn trim(mut self) -> Self {
        while self.0.last().is_some_and(|c| c.is_zero()) {
            self.0.pop();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn add(&self, o: &Self) -> Self {
        let len = self.0.len().max(o.0.len());
        let zero = BigRational::zero();
        RatPoly(
            (0..len)
                .map(|i| self.0.get(i).unwrap_or(&zero) + o.0.get(i).unwrap_or(&zero))
                .collect(),
        )
        .trim()
    }

    pub fn neg(&self) -> Self {
        RatPoly(self.0.iter().map(|c| -c).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return RatPoly(Vec::new());
        }
        let mut out = vec![BigRational::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        RatPoly(out).trim()
    }

    fn rem(&self, d: &Self) -> Self {
        let mut r = self.clone();
        let lead = d.0.last().unwrap().clone();
        while !r.is_zero() && r.0.len() >= d.0.len() {
            let shift = r.0.len() - d.0.len();
            let q = r.0.last().unwrap() / &lead;
            for (i, c) in d.0.iter().enumerate() {
                r.0[shift + i] -= &q * c;
            }
            r = r.trim();
        }
        r
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, o: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            return a;
        }
        let lead = a.0.last().unwrap().clone();
        RatPoly(a.0.iter().map(|c| c / &lead).collect())
    }

    /// Removes factors of `w` (roots at `z = infinity`, which are units in the
    /// Laurent ring).
    pub fn strip_w(&self) -> Self {
        let skip = self.0.iter().take_while(|c| c.is_zero()).count();
        RatPoly(self.0[skip..].to_vec())
    }

    pub fn is_constant(&self) -> bool {
        self.0.len() == 1
    }
}

/// Integer polyphase entries `blocks[l][i][j]`, viewed as polynomials in `w`.
pub type IntBlocks = Vec<Vec<Vec<i64>>>;

fn entry_poly(blocks: &IntBlocks, i: usize, j: usize) -> RatPoly {
    RatPoly::from_ints(&blocks.iter().map(|b| b[i][j]).collect::<Vec<_>>())
}

fn det(mat: &[Vec<RatPoly>]) -> RatPoly {
    let n = mat.len();
    if n == 1 {
        return mat[0][0].clone();
    }
    let mut acc = RatPoly(Vec::new());
    for c in 0..n {
        let minor: Vec<Vec<RatPoly>> = mat[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, p)| p.clone()).collect())
            .collect();
        let term = mat[0][c].mul(&det(&minor));
        acc = if c % 2 == 0 { acc.add(&term) } else { acc.add(&term.neg()) };
    }
    acc
}

fn subsets(m: usize, n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    if m < n {
        return Vec::new();
    }
    let mut out = subsets(m - 1, n);
    for mut s in subsets(m - 1, n - 1) {
        s.push(m - 1);
        out.push(s);
    }
    out
}

/// Exact verdict: `Some(true)` when the maximal minors have no common root in
/// `C \ {0}`, `Some(false)` when they do, `None` when every minor vanishes.
pub fn rational_oracle(blocks: &IntBlocks) -> Option<bool> {
    let m = blocks[0].len();
    let n = blocks[0][0].len();
    let mut g = RatPoly(Vec::new());
    for rows in subsets(m, n) {
        let mat: Vec<Vec<RatPoly>> = rows.iter().map(|&i| (0..n).map(|j| entry_poly(blocks, i, j)).collect()).collect();
        let d = det(&mat);
        g = if g.is_zero() { d } else { g.gcd(&d) };
    }
    if g.is_zero() {
        return None;
    }
    let g = g.strip_w();
    Some(g.is_constant())
}

pub fn int_blocks_to_polyphase(blocks: &IntBlocks) -> PolyphaseBlocks {
    PolyphaseBlocks::new(
        blocks
            .iter()
            .map(|b| {
                DMatrix::from_fn(b.len(), b[0].len(), |i, j| Complex64::new(b[i][j] as f64, 0.0))
            })
            .collect(),
    )
    .unwrap()
}

/// Random small-integer polyphase blocks.
pub fn random_int_blocks(rng: &mut ChaCha8Rng, m: usize, n: usize, k: usize) -> IntBlocks {
    (0..k)
        .map(|_| (0..m).map(|_| (0..n).map(|_| rng.random_range(-3..=3)).collect()).collect())
        .collect()
}

/// Multiplies column `col` by `a + b w` exactly.
pub fn plant_int_factor(blocks: &IntBlocks, col: usize, a: i64, b: i64) -> IntBlocks {
    let k = blocks.len();
    let (m, n) = (blocks[0].len(), blocks[0][0].len());
    let mut out = blocks.clone();
    out.push(vec![vec![0; n]; m]);
    for l in (0..=k).rev() {
        for i in 0..m {
            let here = if l < k { blocks[l][i][col] } else { 0 };
            let prev = if l > 0 { blocks[l - 1][i][col] } else { 0 };
            out[l][i][col] = a * here + b * prev;
        }
    }
    out
}

/// Weighted overlap-add synthesis of an MCLT with analysis window `window`
/// (`kN` samples): conjugate time-reversed filters, each tap divided by the
/// overlapped window energy `sum_r w(t + rN)^2`, with the gain fixed so that
/// the zero-lag product is the identity.
pub fn wola_synthesis(bank: &obfb::filterbank::AnalysisBank, window: &[f64]) -> obfb::filterbank::SynthesisBank {
    use obfb::filterbank::SynthesisBank;
    let (n, k, m) = (bank.n(), bank.k(), bank.m());
    let len = k * n;
    let energy: Vec<f64> = (0..len)
        .map(|t| (0..len).filter(|s| s % n == t % n).map(|s| window[s] * window[s]).sum())
        .collect();
    let filters: Vec<Vec<Complex64>> = bank
        .filters()
        .iter()
        .map(|h| (0..len).rev().map(|t| h[t].conj() / energy[t]).collect())
        .collect();
    let unscaled = SynthesisBank::from_impulses(n, m, k - 1, 0, &filters).unwrap();
    let pp = bank.polyphase();
    let mut lag0 = DMatrix::<Complex64>::zeros(n, n);
    for l in 0..k {
        lag0 += unscaled.block(-(l as i64)) * &pp.blocks()[l];
    }
    let gain = lag0[(0, 0)];
    let scaled: Vec<Vec<Complex64>> = filters.iter().map(|f| f.iter().map(|v| v / gain).collect()).collect();
    SynthesisBank::from_impulses(n, m, k - 1, 0, &scaled).unwrap()
}
