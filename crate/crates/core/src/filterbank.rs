//! Analysis/synthesis filter banks and their polyphase representation.
//!
//! Conventions:
//!
//! - analysis filter `h_i` has taps `h_i(0..kN)` and `H(l)[i][j] = h_i(N l + j)`;
//! - synthesis blocks are indexed by `l` in `-p1..=p2` with
//!   `H~(l)[i][j] = h~_j(N l - i)`, so each synthesis filter is supported on
//!   `-p1 N - N + 1 ..= p2 N`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::laurent::LaurentMatrix;
use crate::par;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A finite sequence starting at time index `start`.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    pub start: i64,
    pub samples: Vec<Complex64>,
}

impl Signal {
    pub fn new(start: i64, samples: Vec<Complex64>) -> Self {
        Self { start, samples }
    }

    /// Sample at absolute index `m`, zero outside the stored range.
    pub fn at(&self, m: i64) -> Complex64 {
        let t = m - self.start;
        if t < 0 || t >= self.samples.len() as i64 {
            ZERO
        } else {
            self.samples[t as usize]
        }
    }

    pub fn end(&self) -> i64 {
        self.start + self.samples.len() as i64
    }
}

/// Anything exposing one finite impulse response per channel.
pub trait ImpulseResponses {
    fn channels(&self) -> usize;

    /// Time index of the first tap (shared by all channels).
    fn impulse_start(&self) -> i64;

    fn impulse(&self, channel: usize) -> Vec<Complex64>;

    /// `h[nu] = sum_m h(m) exp(-2 i pi m nu)` on `nu = -1/2 + g / grid`.
    fn frequency_response(&self, channel: usize, grid: usize) -> Vec<Complex64> {
        let taps = self.impulse(channel);
        let start = self.impulse_start();
        (0..grid)
            .map(|g| {
                let nu = -0.5 + g as f64 / grid as f64;
                dtft(&taps, start, nu)
            })
            .collect()
    }
}

/// Discrete-time Fourier transform of a finite sequence at reduced frequency `nu`.
pub fn dtft(taps: &[Complex64], start: i64, nu: f64) -> Complex64 {
    taps.iter().enumerate().fold(ZERO, |acc, (t, &h)| {
        let m = start + t as i64;
        acc + h * Complex64::from_polar(1.0, -std::f64::consts::TAU * (m as f64) * nu)
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisBank {
    m: usize,
    n: usize,
    k: usize,
    filters: Vec<Vec<Complex64>>,
}

impl AnalysisBank {
    pub fn new(m: usize, n: usize, k: usize, filters: Vec<Vec<Complex64>>) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::InvalidBank("N and k must be positive".into()));
        }
        if m <= n {
            return Err(Error::InvalidBank(format!(
                "bank is not oversampled (M = {m}, N = {n})"
            )));
        }
        if filters.len() != m {
            return Err(Error::InvalidBank(format!(
                "expected {m} filters, found {}",
                filters.len()
            )));
        }
        if let Some((i, f)) = filters.iter().enumerate().find(|(_, f)| f.len() != k * n) {
            return Err(Error::InvalidBank(format!(
                "filter {i} has {} taps, expected kN = {}",
                f.len(),
                k * n
            )));
        }
        Ok(Self { m, n, k, filters })
    }

    pub fn from_polyphase(pp: &PolyphaseBlocks) -> Result<Self> {
        let (m, n, k) = (pp.m(), pp.n(), pp.k());
        let filters = (0..m)
            .map(|i| {
                (0..k * n)
                    .map(|t| pp.blocks[t / n][(i, t % n)])
                    .collect()
            })
            .collect();
        Self::new(m, n, k, filters)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn filters(&self) -> &[Vec<Complex64>] {
        &self.filters
    }

    pub fn polyphase(&self) -> PolyphaseBlocks {
        let blocks = (0..self.k)
            .map(|l| DMatrix::from_fn(self.m, self.n, |i, j| self.filters[i][self.n * l + j]))
            .collect();
        PolyphaseBlocks {
            m: self.m,
            n: self.n,
            blocks,
        }
    }

    /// Subband outputs `y_i(n) = sum_p h_i(p) x(N n - p)` for a finite input
    /// starting at index 0 (zero-extended). Subbands start at `n = 0` and
    /// cover every index where an output can be nonzero.
    pub fn analyze(&self, x: &[Complex64]) -> Vec<Vec<Complex64>> {
        let (n, k) = (self.n, self.k);
        let len = x.len();
        let count = if len == 0 { 0 } else { (len + k * n - 2) / n + 1 };
        let sample = |t: i64| -> Complex64 {
            if t < 0 || t >= len as i64 {
                ZERO
            } else {
                x[t as usize]
            }
        };
        let pp = self.polyphase();
        par::map_range(self.m, |i| {
            (0..count as i64)
                .map(|blk| {
                    let mut acc = ZERO;
                    for (l, h) in pp.blocks.iter().enumerate() {
                        for j in 0..n {
                            acc += h[(i, j)] * sample(n as i64 * (blk - l as i64) - j as i64);
                        }
                    }
                    acc
                })
                .collect()
        })
    }
}

impl ImpulseResponses for AnalysisBank {
    fn channels(&self) -> usize {
        self.m
    }

    fn impulse_start(&self) -> i64 {
        0
    }

    fn impulse(&self, channel: usize) -> Vec<Complex64> {
        self.filters[channel].clone()
    }
}

/// The `k` blocks `H(0..k)` of an analysis polyphase matrix, each `M x N`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyphaseBlocks {
    m: usize,
    n: usize,
    blocks: Vec<DMatrix<Complex64>>,
}

impl PolyphaseBlocks {
    pub fn new(blocks: Vec<DMatrix<Complex64>>) -> Result<Self> {
        let (m, n) = blocks
            .first()
            .map(|b| b.shape())
            .ok_or_else(|| Error::InvalidBank("no polyphase blocks".into()))?;
        if blocks.iter().any(|b| b.shape() != (m, n)) {
            return Err(Error::InvalidBank("polyphase blocks differ in shape".into()));
        }
        Ok(Self { m, n, blocks })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[DMatrix<Complex64>] {
        &self.blocks
    }

    /// `H[z] = sum_l H(l) z^-l`.
    pub fn to_laurent(&self) -> LaurentMatrix {
        LaurentMatrix::from_blocks(&self.blocks, 0)
    }

    /// `H[1] = sum_l H(l)`.
    pub fn at_unity(&self) -> DMatrix<Complex64> {
        self.blocks
            .iter()
            .fold(DMatrix::zeros(self.m, self.n), |acc, b| acc + b)
    }

    /// Same matrix with its rows permuted: row `i` of the result is row `perm[i]`.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        let blocks = self
            .blocks
            .iter()
            .map(|b| DMatrix::from_fn(self.m, self.n, |i, j| b[(perm[i], j)]))
            .collect();
        Self {
            m: self.m,
            n: self.n,
            blocks,
        }
    }
}

/// Synthesis bank given by its `p = p1 + p2 + 1` polyphase blocks `H~(-p1..=p2)`,
/// each `N x M`.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisBank {
    n: usize,
    m: usize,
    p1: usize,
    p2: usize,
    blocks: Vec<DMatrix<Complex64>>,
}

impl SynthesisBank {
    pub fn new(n: usize, m: usize, p1: usize, p2: usize, blocks: Vec<DMatrix<Complex64>>) -> Result<Self> {
        if blocks.len() != p1 + p2 + 1 {
            return Err(Error::InvalidBank(format!(
                "expected {} synthesis blocks, found {}",
                p1 + p2 + 1,
                blocks.len()
            )));
        }
        if blocks.iter().any(|b| b.shape() != (n, m)) {
            return Err(Error::InvalidBank(format!("synthesis blocks must be {n}x{m}")));
        }
        Ok(Self { n, m, p1, p2, blocks })
    }

    /// Inverse of [`ImpulseResponses::impulse`]: every filter has `pN` taps
    /// starting at `-p1 N - N + 1`.
    pub fn from_impulses(n: usize, m: usize, p1: usize, p2: usize, filters: &[Vec<Complex64>]) -> Result<Self> {
        let p = p1 + p2 + 1;
        if filters.len() != m {
            return Err(Error::InvalidBank(format!(
                "expected {m} synthesis filters, found {}",
                filters.len()
            )));
        }
        if let Some((j, f)) = filters.iter().enumerate().find(|(_, f)| f.len() != p * n) {
            return Err(Error::InvalidBank(format!(
                "synthesis filter {j} has {} taps, expected pN = {}",
                f.len(),
                p * n
            )));
        }
        let start = -((p1 * n + n - 1) as i64);
        let blocks = (0..p)
            .map(|b| {
                let l = b as i64 - p1 as i64;
                DMatrix::from_fn(n, m, |i, j| {
                    let t = n as i64 * l - i as i64 - start;
                    filters[j][t as usize]
                })
            })
            .collect();
        Self::new(n, m, p1, p2, blocks)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p1(&self) -> usize {
        self.p1
    }

    pub fn p2(&self) -> usize {
        self.p2
    }

    pub fn p(&self) -> usize {
        self.p1 + self.p2 + 1
    }

    /// Blocks in order `H~(-p1), ..., H~(p2)`.
    pub fn blocks(&self) -> &[DMatrix<Complex64>] {
        &self.blocks
    }

    /// `H~(l)` for `l` in `-p1..=p2`.
    pub fn block(&self, l: i64) -> &DMatrix<Complex64> {
        &self.blocks[(l + self.p1 as i64) as usize]
    }

    /// `H~[z] = sum_l H~(l) z^-l`.
    pub fn to_laurent(&self) -> LaurentMatrix {
        LaurentMatrix::from_blocks(&self.blocks, -(self.p1 as i64))
    }

    /// Reconstruction `x~(m) = sum_j sum_l h~_j(m - N l) y_j(l)` from subbands
    /// starting at index 0.
    pub fn synthesize(&self, subbands: &[Vec<Complex64>]) -> Result<Signal> {
        if subbands.len() != self.m {
            return Err(Error::DimensionMismatch(format!(
                "expected {} subbands, found {}",
                self.m,
                subbands.len()
            )));
        }
        let len = subbands[0].len();
        if subbands.iter().any(|y| y.len() != len) {
            return Err(Error::DimensionMismatch("subbands differ in length".into()));
        }
        let start = self.impulse_start();
        let taps = self.p() * self.n;
        if len == 0 {
            return Ok(Signal::new(start, Vec::new()));
        }
        let out_len = taps + self.n * (len - 1);
        let n = self.n;
        let contributions = par::map_range(self.m, |j| {
            let h = self.impulse(j);
            let mut out = vec![ZERO; out_len];
            for (l, &y) in subbands[j].iter().enumerate() {
                if y == ZERO {
                    continue;
                }
                for (t, &ht) in h.iter().enumerate() {
                    out[n * l + t] += ht * y;
                }
            }
            out
        });
        let mut out = vec![ZERO; out_len];
        for contrib in &contributions {
            for (o, &v) in out.iter_mut().zip(contrib) {
                *o += v;
            }
        }
        Ok(Signal::new(start, out))
    }

    /// Checks `H~(l) = conj(H~(l)) J_M` entry-wise within `tol`.
    pub fn is_hermitian_symmetric(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    /// `max |H~(l)[i][j] - conj(H~(l)[i][M-1-j])|`.
    pub fn hermitian_defect(&self) -> f64 {
        let m = self.m;
        self.blocks
            .iter()
            .flat_map(|b| {
                (0..self.n).flat_map(move |i| (0..m).map(move |j| (b[(i, j)] - b[(i, m - 1 - j)].conj()).norm()))
            })
            .fold(0.0, f64::max)
    }

    /// `1/2 (H~ + conj(H~) J_M)`, the Hermitian-symmetric part of the bank.
    pub fn hermitian_average(&self) -> Self {
        let m = self.m;
        let blocks = self
            .blocks
            .iter()
            .map(|b| DMatrix::from_fn(self.n, m, |i, j| (b[(i, j)] + b[(i, m - 1 - j)].conj()) * 0.5))
            .collect();
        Self { blocks, ..self.clone() }
    }

    /// Largest entry-wise difference with a bank of identical shape.
    pub fn max_abs_diff(&self, other: &SynthesisBank) -> Result<f64> {
        if (self.n, self.m, self.p1, self.p2) != (other.n, other.m, other.p1, other.p2) {
            return Err(Error::DimensionMismatch("synthesis banks differ in shape".into()));
        }
        Ok(self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| (a - b).iter().map(|v| v.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max))
    }
}

impl ImpulseResponses for SynthesisBank {
    fn channels(&self) -> usize {
        self.m
    }

    fn impulse_start(&self) -> i64 {
        -((self.p1 * self.n + self.n - 1) as i64)
    }

    fn impulse(&self, channel: usize) -> Vec<Complex64> {
        let start = self.impulse_start();
        let n = self.n as i64;
        let mut h = vec![ZERO; self.p() * self.n];
        for (b, blk) in self.blocks.iter().enumerate() {
            let l = b as i64 - self.p1 as i64;
            for i in 0..self.n {
                let t = n * l - i as i64 - start;
                h[t as usize] = blk[(i, channel)];
            }
        }
        h
    }
}
