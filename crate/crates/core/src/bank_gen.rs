//! Modulated complex lapped transform (MCLT) analysis banks.
//!
//! `h_i(n - 1) = E(i, n) h_a(n)` for `n = 1..=kN` with
//!
//! ```text
//! E(i, n) = (k'N)^{-1/2} exp(-i (i - k'N/2 + 1/2) (n - kN/2 + 1/2) 2 pi / (k'N))
//! ```
//!
//! and `M = k'N` channels. A real window makes the bank Hermitian-symmetric.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::AnalysisBank;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Window {
    /// `sin(n pi / (kN + 1))`.
    Sine,
    /// Windowed-sinc lowpass with cutoff `2 pi / (kN)` tapered by a Kaiser window.
    Kaiser { beta: f64 },
    /// Explicit `kN` samples for `n = 1..=kN`.
    Custom { samples: Vec<f64> },
}

impl Window {
    /// Samples `h_a(1..=len)`.
    pub fn samples(&self, len: usize) -> Result<Vec<f64>> {
        match self {
            Window::Sine => Ok((1..=len).map(|n| (n as f64 * PI / (len as f64 + 1.0)).sin()).collect()),
            Window::Kaiser { beta } => {
                if !(*beta >= 0.0) {
                    return Err(Error::InvalidConfig(format!("Kaiser beta must be non-negative, got {beta}")));
                }
                Ok(kaiser_lowpass(len, *beta))
            }
            Window::Custom { samples } => {
                if samples.len() != len {
                    return Err(Error::InvalidConfig(format!(
                        "custom window has {} samples, expected {len}",
                        samples.len()
                    )));
                }
                Ok(samples.clone())
            }
        }
    }
}

/// Modified Bessel function of the first kind, order zero (power series).
pub fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > 1e-17 * sum {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

fn kaiser_lowpass(len: usize, beta: f64) -> Vec<f64> {
    let center = (len as f64 + 1.0) / 2.0;
    let half = (len as f64 - 1.0) / 2.0;
    let cutoff = 2.0 * PI / len as f64;
    let norm = bessel_i0(beta);
    let raw: Vec<f64> = (1..=len)
        .map(|n| {
            let t = n as f64 - center;
            let sinc = if t == 0.0 { 1.0 } else { (cutoff * t).sin() / (cutoff * t) };
            let r = if half > 0.0 { t / half } else { 0.0 };
            let taper = bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / norm;
            sinc * taper
        })
        .collect();
    let peak = raw.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    raw.into_iter().map(|v| v / peak).collect()
}

/// MCLT analysis bank with `M = k'N` channels of length `kN`.
pub fn mclt(n: usize, k: usize, k_prime: f64, window: &Window) -> Result<AnalysisBank> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidConfig("N and k must be positive".into()));
    }
    let m_real = k_prime * n as f64;
    let m = m_real.round();
    if !(m_real.is_finite()) || (m_real - m).abs() >= 1e-9 || m < 1.0 {
        return Err(Error::InvalidConfig(format!("k'N = {m_real} is not a positive integer")));
    }
    let m = m as usize;
    let len = k * n;
    let h_a = window.samples(len)?;
    let scale = 1.0 / m_real.sqrt();
    let filters = (0..m)
        .map(|i| {
            let fi = i as f64 - m_real / 2.0 + 0.5;
            (1..=len)
                .map(|t| {
                    let fn_ = t as f64 - len as f64 / 2.0 + 0.5;
                    Complex64::from_polar(scale, -fi * fn_ * 2.0 * PI / m_real) * h_a[t - 1]
                })
                .collect()
        })
        .collect();
    AnalysisBank::new(m, n, k, filters)
}
