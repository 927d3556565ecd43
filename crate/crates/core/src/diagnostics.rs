//! Localization measures, reconstruction checks and CSV reports.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filterbank::{dtft, AnalysisBank, ImpulseResponses, SynthesisBank};
use crate::par;

/// Default number of trapezoid intervals for frequency integrals.
pub const FREQ_GRID: usize = 8192;

fn zero_filter() -> Error {
    Error::InvalidBank("dispersion of an all-zero filter is undefined".into())
}

/// `(centroid, dispersion)` of `|h(m)|^2` over time.
pub fn time_dispersion(taps: &[Complex64], start: i64) -> Result<(f64, f64)> {
    let energy: f64 = taps.iter().map(|h| h.norm_sqr()).sum();
    if energy == 0.0 {
        return Err(zero_filter());
    }
    let time = |t: usize| (start + t as i64) as f64;
    let centroid = taps.iter().enumerate().map(|(t, h)| time(t) * h.norm_sqr()).sum::<f64>() / energy;
    let spread = taps
        .iter()
        .enumerate()
        .map(|(t, h)| (time(t) - centroid).powi(2) * h.norm_sqr())
        .sum::<f64>()
        / energy;
    Ok((centroid, spread))
}

fn trapezoid(a: f64, b: f64, grid: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / grid as f64;
    let inner: f64 = (1..grid).map(|g| f(a + g as f64 * h)).sum();
    h * (0.5 * (f(a) + f(b)) + inner)
}

/// `(centroid, dispersion)` of `|h[nu]|^2` over frequency.
///
/// The centroid is `int nu |h|^2 / int |h|^2` over `[-1/2, 1/2]`; the
/// dispersion integrates `(nu - f)^2 |h|^2` over `[f - 1/2, f + 1/2]`. Both
/// use the trapezoid rule with `grid` intervals.
pub fn freq_dispersion(taps: &[Complex64], start: i64, grid: usize) -> Result<(f64, f64)> {
    let power = |nu: f64| dtft(taps, start, nu).norm_sqr();
    let energy = trapezoid(-0.5, 0.5, grid, power);
    if energy == 0.0 {
        return Err(zero_filter());
    }
    let centroid = trapezoid(-0.5, 0.5, grid, |nu| nu * power(nu)) / energy;
    let spread = trapezoid(centroid - 0.5, centroid + 0.5, grid, |nu| (nu - centroid).powi(2) * power(nu)) / energy;
    Ok((centroid, spread))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DispersionRow {
    pub channel: usize,
    pub time_centroid: f64,
    pub time_dispersion: f64,
    pub freq_centroid: f64,
    pub freq_dispersion: f64,
}

/// Time and frequency dispersion of every channel of `bank`.
pub fn dispersion_table<B: ImpulseResponses + Sync>(bank: &B, grid: usize) -> Result<Vec<DispersionRow>> {
    let start = bank.impulse_start();
    par::map_range(bank.channels(), |j| {
        let taps = bank.impulse(j);
        let (tc, td) = time_dispersion(&taps, start)?;
        let (fc, fd) = freq_dispersion(&taps, start, grid)?;
        Ok(DispersionRow {
            channel: j,
            time_centroid: tc,
            time_dispersion: td,
            freq_centroid: fc,
            freq_dispersion: fd,
        })
    })
    .into_iter()
    .collect()
}

pub fn write_dispersion_csv<W: Write>(rows: &[DispersionRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "channel,time_centroid,time_dispersion,freq_centroid,freq_dispersion")?;
    for r in rows {
        writeln!(
            out,
            "{},{:.17e},{:.17e},{:.17e},{:.17e}",
            r.channel, r.time_centroid, r.time_dispersion, r.freq_centroid, r.freq_dispersion
        )?;
    }
    Ok(())
}

/// Long-format impulse responses: `channel,m,re,im,modulus`, one row per tap.
pub fn write_impulse_csv<B: ImpulseResponses, W: Write>(bank: &B, mut out: W) -> std::io::Result<()> {
    writeln!(out, "channel,m,re,im,modulus")?;
    let start = bank.impulse_start();
    for j in 0..bank.channels() {
        for (t, h) in bank.impulse(j).iter().enumerate() {
            writeln!(out, "{j},{},{:.17e},{:.17e},{:.17e}", start + t as i64, h.re, h.im, h.norm())?;
        }
    }
    Ok(())
}

/// Long-format magnitude responses `channel,nu,modulus_db` on
/// `nu = -1/2 + g / grid`, floored at `floor_db`.
pub fn write_freq_csv<B: ImpulseResponses + Sync, W: Write>(
    bank: &B,
    grid: usize,
    floor_db: f64,
    mut out: W,
) -> std::io::Result<()> {
    let responses = par::map_range(bank.channels(), |j| bank.frequency_response(j, grid));
    writeln!(out, "channel,nu,modulus_db")?;
    for (j, r) in responses.iter().enumerate() {
        for (g, h) in r.iter().enumerate() {
            let nu = -0.5 + g as f64 / grid as f64;
            let mag = h.norm();
            let db = if mag > 0.0 { (20.0 * mag.log10()).max(floor_db) } else { floor_db };
            writeln!(out, "{j},{nu:.12},{db:.12}")?;
        }
    }
    Ok(())
}

/// Largest coefficient of `H~[z] H[z] - I_N`.
pub fn polynomial_pr_error(analysis: &AnalysisBank, synthesis: &SynthesisBank) -> Result<f64> {
    check_pair(analysis, synthesis)?;
    // Coefficient of z^-lag is sum_s H~(s) H(lag - s); compare against delta_lag I.
    let pp = analysis.polyphase();
    let (k, p1, p2) = (pp.k() as i64, synthesis.p1() as i64, synthesis.p2() as i64);
    let n = analysis.n();
    let mut worst = 0.0f64;
    for lag in -p1..=p2 + k - 1 {
        let mut acc = DMatrix::<Complex64>::zeros(n, n);
        for s in (-p1).max(lag - k + 1)..=p2.min(lag) {
            acc += synthesis.block(s) * &pp.blocks()[(lag - s) as usize];
        }
        if lag == 0 {
            for d in 0..n {
                acc[(d, d)] -= Complex64::new(1.0, 0.0);
            }
        }
        worst = worst.max(acc.iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    Ok(worst)
}

fn check_pair(analysis: &AnalysisBank, synthesis: &SynthesisBank) -> Result<()> {
    if analysis.m() != synthesis.m() || analysis.n() != synthesis.n() {
        return Err(Error::DimensionMismatch(format!(
            "analysis is {}x{} (M x N) but synthesis is {}x{}",
            analysis.m(),
            analysis.n(),
            synthesis.m(),
            synthesis.n()
        )));
    }
    Ok(())
}

/// Outcome of randomized analysis/synthesis round trips.
#[derive(Clone, Debug, Serialize)]
pub struct RoundtripReport {
    pub seed: u64,
    pub trials: usize,
    pub len: usize,
    /// Largest `|x~(m) - x(m)|` per trial, away from the signal edges.
    pub errors: Vec<f64>,
    pub max_error: f64,
}

/// Uniform samples in `[-1, 1)` for real and imaginary parts.
pub fn random_signal(len: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

/// Random real signal (imaginary part exactly zero).
pub fn random_real_signal(len: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| Complex64::new(rng.random_range(-1.0..1.0), 0.0)).collect()
}

/// `max |x~(m) - x(m)|` for `m` at least `(k + p) N` samples from either end.
pub fn reconstruction_error(analysis: &AnalysisBank, synthesis: &SynthesisBank, x: &[Complex64]) -> Result<f64> {
    check_pair(analysis, synthesis)?;
    let y = analysis.analyze(x);
    let out = synthesis.synthesize(&y)?;
    let guard = ((analysis.k() + synthesis.p()) * analysis.n()) as i64;
    let len = x.len() as i64;
    Ok((guard..len - guard)
        .map(|m| (out.at(m) - x[m as usize]).norm())
        .fold(0.0, f64::max))
}

/// Runs `trials` round trips on random signals seeded with `seed + trial`.
pub fn pr_residual(
    analysis: &AnalysisBank,
    synthesis: &SynthesisBank,
    trials: usize,
    len: usize,
    seed: u64,
) -> Result<RoundtripReport> {
    let errors = (0..trials)
        .map(|t| reconstruction_error(analysis, synthesis, &random_signal(len, seed.wrapping_add(t as u64))))
        .collect::<Result<Vec<f64>>>()?;
    let max_error = errors.iter().cloned().fold(0.0, f64::max);
    Ok(RoundtripReport {
        seed,
        trials,
        len,
        errors,
        max_error,
    })
}

/// Largest imaginary part of the reconstruction of a real signal.
pub fn real_signal_imag_max(analysis: &AnalysisBank, synthesis: &SynthesisBank, x: &[Complex64]) -> Result<f64> {
    check_pair(analysis, synthesis)?;
    let out = synthesis.synthesize(&analysis.analyze(x))?;
    Ok(out.samples.iter().map(|v| v.im.abs()).fold(0.0, f64::max))
}

/// Largest entry of `|H~(l) - conj(H~(l)) J_M|` together with the
/// analysis-side defect `|H(l) - J_M conj(H(l))|`.
pub fn hermitian_defects(analysis: &AnalysisBank, synthesis: &SynthesisBank) -> (f64, f64) {
    let pp = analysis.polyphase();
    let m = pp.m();
    let a = pp
        .blocks()
        .iter()
        .map(|b: &DMatrix<Complex64>| {
            (0..m)
                .flat_map(|i| (0..pp.n()).map(move |j| (i, j)))
                .map(|(i, j)| (b[(i, j)] - b[(m - 1 - i, j)].conj()).norm())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    (a, synthesis.hermitian_defect())
}
