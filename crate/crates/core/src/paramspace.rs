//! Affine parameterization of every FIR inverse at a fixed order.
//!
//! With `Hcal = U0 S0 V0^*` and `V1` an orthonormal basis of `Ker(Hcal)`,
//! the solutions of `Hcal Hcal~ = Ucal` are exactly `Hcal~ = V1 C + Hcal~0`
//! for a free `C` of shape `(pM - r) x N`. In the Hermitian-symmetric case
//! the basis is `W1 = P_rc V1` and `C` is real.
//!
//! Channel `j` of the assembled bank is the `p x N` matrix `V_j C + H0_j`,
//! whose entry `(l + p1, i)` is `H~(l)[i][j]`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::filterbank::SynthesisBank;
use crate::inverse_solver::{bank_from_stacked, decompose, lift_matrix, HsSystem, PrSystem};
use crate::tol::Tolerances;

#[derive(Clone, Debug)]
pub struct ParamSpace {
    n: usize,
    m: usize,
    p1: usize,
    p2: usize,
    rank: usize,
    hermitian: bool,
    particular: DMatrix<Complex64>,
    basis: DMatrix<Complex64>,
    slices: Vec<DMatrix<Complex64>>,
    particular_slices: Vec<DMatrix<Complex64>>,
}

fn channel_rows(mat: &DMatrix<Complex64>, m: usize, p: usize, j: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(p, mat.ncols(), |l, c| mat[(l * m + j, c)])
}

impl ParamSpace {
    fn from_parts(
        n: usize,
        m: usize,
        p1: usize,
        p2: usize,
        rank: usize,
        hermitian: bool,
        particular: DMatrix<Complex64>,
        basis: DMatrix<Complex64>,
    ) -> Self {
        let p = p1 + p2 + 1;
        let slices = (0..m).map(|j| channel_rows(&basis, m, p, j)).collect();
        let particular_slices = (0..m).map(|j| channel_rows(&particular, m, p, j)).collect();
        Self {
            n,
            m,
            p1,
            p2,
            rank,
            hermitian,
            particular,
            basis,
            slices,
            particular_slices,
        }
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

    /// Numerical rank of the (general or real HS) system matrix.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Number of rows of the free matrix `C` (`pM - r`).
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Pseudo-inverse solution `Hcal~0` (`pM x N`).
    pub fn particular(&self) -> &DMatrix<Complex64> {
        &self.particular
    }

    /// `V1`, or `W1 = P_rc V1` in the HS case (`pM x (pM - r)`).
    pub fn basis(&self) -> &DMatrix<Complex64> {
        &self.basis
    }

    /// `V_j` (or `W_j`), `p x (pM - r)`.
    pub fn slice(&self, j: usize) -> &DMatrix<Complex64> {
        &self.slices[j]
    }

    /// `H0_j`, `p x N`.
    pub fn particular_slice(&self, j: usize) -> &DMatrix<Complex64> {
        &self.particular_slices[j]
    }

    pub fn zero_param(&self) -> DMatrix<Complex64> {
        DMatrix::zeros(self.dim(), self.n)
    }

    fn check_param(&self, c: &DMatrix<Complex64>) -> Result<()> {
        if c.shape() != (self.dim(), self.n) {
            return Err(Error::DimensionMismatch(format!(
                "free matrix must be {}x{}, got {}x{}",
                self.dim(),
                self.n,
                c.nrows(),
                c.ncols()
            )));
        }
        if self.hermitian && c.iter().any(|v| v.im != 0.0) {
            return Err(Error::DimensionMismatch(
                "Hermitian-symmetric parameterization takes a real free matrix".into(),
            ));
        }
        Ok(())
    }

    /// `V_j C + H0_j`, the taps of channel `j` laid out as `(l + p1, i)`.
    pub fn channel_taps(&self, j: usize, c: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        self.check_param(c)?;
        Ok(&self.slices[j] * c + &self.particular_slices[j])
    }

    /// Synthesis bank for the free matrix `c`.
    pub fn assemble(&self, c: &DMatrix<Complex64>) -> Result<SynthesisBank> {
        self.check_param(c)?;
        let stacked = &self.basis * c + &self.particular;
        bank_from_stacked(&stacked, self.n, self.m, self.p1, self.p2)
    }
}

/// SVD parameterization of a solvable general system.
pub fn build_paramspace(sys: &PrSystem, tol: &Tolerances) -> Result<ParamSpace> {
    let dec = decompose(&sys.hcal, &sys.ucal, tol.rank_factor);
    let residual = (&sys.hcal * &dec.particular - &sys.ucal).norm() / sys.ucal.norm();
    if residual > tol.pr {
        return Err(Error::NotSolvableAtOrder {
            p1: sys.p1,
            p2: sys.p2,
            residual,
        });
    }
    Ok(ParamSpace::from_parts(
        sys.n,
        sys.m,
        sys.p1,
        sys.p2,
        dec.rank,
        false,
        dec.particular,
        dec.null_basis,
    ))
}

/// Real SVD parameterization of a solvable HS system, lifted by `P_rc`.
pub fn build_paramspace_hs(sys: &HsSystem, tol: &Tolerances) -> Result<ParamSpace> {
    let dec = decompose(&sys.hcal, &sys.ucal, tol.rank_factor);
    let residual = (&sys.hcal * &dec.particular - &sys.ucal).norm() / sys.ucal.norm();
    if residual > tol.pr {
        return Err(Error::NotSolvableAtOrder {
            p1: sys.p1,
            p2: sys.p2,
            residual,
        });
    }
    let p = sys.p1 + sys.p2 + 1;
    let lift = lift_matrix(sys.m, p);
    let to_complex = |m: &DMatrix<f64>| m.map(|v| Complex64::new(v, 0.0));
    let particular = &lift * to_complex(&dec.particular);
    let basis = &lift * to_complex(&dec.null_basis);
    Ok(ParamSpace::from_parts(
        sys.n, sys.m, sys.p1, sys.p2, dec.rank, true, particular, basis,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c;
    use crate::filterbank::PolyphaseBlocks;
    use crate::inverse_solver::build_system;

    #[test]
    fn toy_null_space() {
        let pp = PolyphaseBlocks::new(vec![DMatrix::from_column_slice(2, 1, &[c(1.0, 0.0), c(1.0, 0.0)])]).unwrap();
        let ps = build_paramspace(&build_system(&pp, 0, 0), &Tolerances::default()).unwrap();
        assert_eq!(ps.rank(), 1);
        assert_eq!(ps.dim(), 1);
        let v = ps.basis();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v[(0, 0)].norm() - h).abs() < 1e-15);
        assert!((v[(0, 0)] + v[(1, 0)]).norm() < 1e-15);
        assert!((ps.particular()[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((ps.particular()[(1, 0)] - c(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn wrong_parameter_shape_is_rejected() {
        let pp = PolyphaseBlocks::new(vec![DMatrix::from_column_slice(2, 1, &[c(1.0, 0.0), c(1.0, 0.0)])]).unwrap();
        let ps = build_paramspace(&build_system(&pp, 0, 0), &Tolerances::default()).unwrap();
        assert!(ps.assemble(&DMatrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn unsolvable_order_is_rejected() {
        let pp = PolyphaseBlocks::new(vec![DMatrix::from_column_slice(2, 1, &[c(0.0, 0.0), c(0.0, 0.0)])]).unwrap();
        assert!(matches!(
            build_paramspace(&build_system(&pp, 0, 0), &Tolerances::default()),
            Err(Error::NotSolvableAtOrder { .. })
        ));
    }
}
