//! FIR left-invertibility of an analysis polyphase matrix.
//!
//! `H[z]` (`M x N`, `M > N`) has a Laurent-polynomial left inverse iff its
//! maximal minors have no common root in `C \ {0}`. The test keeps the root
//! set of one nonzero minor and prunes it with every further minor until it
//! empties (invertible) or the minors run out (not invertible).

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filterbank::PolyphaseBlocks;
use crate::laurent::{roots_match, LaurentPoly};
use crate::par;
use crate::tol::Tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Invertible,
    NotInvertible,
    /// Every maximal minor vanishes identically.
    RankDeficient,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvertibilityReport {
    pub verdict: Verdict,
    pub invertible: bool,
    /// Common roots left after all examined minors (empty when invertible).
    #[serde(serialize_with = "serialize_roots")]
    pub surviving_roots: Vec<Complex64>,
    pub minors_examined: usize,
    pub total_minors: usize,
}

fn serialize_roots<S: serde::Serializer>(roots: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(roots.len()))?;
    for r in roots {
        seq.serialize_element(&[r.re, r.im])?;
    }
    seq.end()
}

/// All `n`-element subsets of `0..m` in lexicographic order.
pub fn row_subsets(m: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if n > m {
        return out;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        out.push(idx.clone());
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + m - n {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for t in i + 1..n {
            idx[t] = idx[t - 1] + 1;
        }
    }
}

/// `C(m, n)`.
pub fn binomial(m: usize, n: usize) -> usize {
    if n > m {
        return 0;
    }
    let n = n.min(m - n);
    (0..n).fold(1usize, |acc, i| acc * (m - i) / (i + 1))
}

/// Lexicographic row subsets, except that the subset with the largest
/// product of row norms of `H[1]` goes first (ties keep lexicographic order).
pub fn first_minor_selection(pp: &PolyphaseBlocks) -> Vec<Vec<usize>> {
    let mut subsets = row_subsets(pp.m(), pp.n());
    let at_one = pp.at_unity();
    let norms: Vec<f64> = (0..pp.m()).map(|i| at_one.row(i).norm()).collect();
    let score = |s: &[usize]| s.iter().map(|&i| norms[i]).product::<f64>();
    let mut best = 0;
    for (i, s) in subsets.iter().enumerate() {
        if score(s) > score(&subsets[best]) {
            best = i;
        }
    }
    let first = subsets.remove(best);
    subsets.insert(0, first);
    subsets
}

/// Runs the coprime-minors test with the default minor ordering.
pub fn is_fir_invertible(pp: &PolyphaseBlocks, tol: &Tolerances) -> Result<InvertibilityReport> {
    let order = first_minor_selection(pp);
    is_fir_invertible_with_order(pp, &order, tol)
}

/// Runs the coprime-minors test visiting minors in `order`.
///
/// Determinants are computed in parallel batches; pruning is sequential in
/// `order`, so `minors_examined` and the verdict do not depend on threading.
pub fn is_fir_invertible_with_order(
    pp: &PolyphaseBlocks,
    order: &[Vec<usize>],
    tol: &Tolerances,
) -> Result<InvertibilityReport> {
    if pp.m() <= pp.n() {
        return Err(Error::InvalidBank(format!(
            "invertibility test needs M > N (M = {}, N = {})",
            pp.m(),
            pp.n()
        )));
    }
    let h = pp.to_laurent();
    let total = binomial(pp.m(), pp.n());
    let mut examined = 0;
    let mut candidates: Option<Vec<Complex64>> = None;
    let batch = (2 * par::current_threads()).max(1);

    let mut start = 0;
    while start < order.len() {
        // First minor alone, then parallel batches.
        let end = if start == 0 { 1 } else { (start + batch).min(order.len()) };
        let dets = par::map_slice(&order[start..end], |rows| h.select_rows(rows).determinant());
        for det in dets {
            let det = det?;
            examined += 1;
            if det.is_zero() {
                continue;
            }
            match candidates.as_mut() {
                None => candidates = Some(dedup_roots(det.roots()?, tol.root_match)),
                Some(set) => set.retain(|&r| survives(&det, r, tol.root_survival)),
            }
            if candidates.as_ref().is_some_and(|s| s.is_empty()) {
                return Ok(InvertibilityReport {
                    verdict: Verdict::Invertible,
                    invertible: true,
                    surviving_roots: Vec::new(),
                    minors_examined: examined,
                    total_minors: total,
                });
            }
        }
        start = end;
    }
    let (verdict, roots) = match candidates {
        None => (Verdict::RankDeficient, Vec::new()),
        Some(roots) => (Verdict::NotInvertible, roots),
    };
    Ok(InvertibilityReport {
        verdict,
        invertible: false,
        surviving_roots: roots,
        minors_examined: examined,
        total_minors: total,
    })
}

/// Scale-invariant residual test for a candidate common root.
fn survives(det: &LaurentPoly, root: Complex64, rel: f64) -> bool {
    let bound = rel * det.max_abs_coeff() * det.width() as f64;
    det.eval_unit_scaled(root).norm() <= bound
}

fn dedup_roots(roots: Vec<Complex64>, tol: f64) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::with_capacity(roots.len());
    for r in roots {
        if !out.iter().any(|&q| roots_match(q, r, tol)) {
            out.push(r);
        }
    }
    out
}
