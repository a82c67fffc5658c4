//! 2x2 block systems and their symmetric indefinite solvers.

use nalgebra::DMatrix;

use super::dense::{lu_solve, DENSE_MAX};
use super::krylov::{minres, SolveInfo};
use super::LinearOperator;
use crate::error::{Error, Result};
use crate::sparse::{CooBuilder, CsrMatrix};

/// Largest tolerated relative asymmetry of a system handed to MINRES.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSystem {
    pub b11: CsrMatrix,
    pub b12: CsrMatrix,
    pub b21: CsrMatrix,
    pub b22: CsrMatrix,
    pub rhs: Vec<f64>,
}

impl BlockSystem {
    pub fn new(
        b11: CsrMatrix,
        b12: CsrMatrix,
        b21: CsrMatrix,
        b22: CsrMatrix,
        rhs: Vec<f64>,
    ) -> Result<Self> {
        let (n1, n2) = (b11.n_rows(), b22.n_rows());
        let ok = b11.n_cols() == n1
            && b22.n_cols() == n2
            && b12.n_rows() == n1
            && b12.n_cols() == n2
            && b21.n_rows() == n2
            && b21.n_cols() == n1
            && rhs.len() == n1 + n2;
        if !ok {
            return Err(Error::DimensionMismatch("inconsistent block dimensions".into()));
        }
        Ok(Self {
            b11,
            b12,
            b21,
            b22,
            rhs,
        })
    }

    pub fn n1(&self) -> usize {
        self.b11.n_rows()
    }

    pub fn n(&self) -> usize {
        self.b11.n_rows() + self.b22.n_rows()
    }

    /// The whole operator as one CSR matrix.
    pub fn to_csr(&self) -> CsrMatrix {
        let n1 = self.n1();
        let nnz = self.b11.nnz() + self.b12.nnz() + self.b21.nnz() + self.b22.nnz();
        let mut coo = CooBuilder::with_capacity(self.n(), self.n(), nnz);
        for (blk, r0, c0) in [
            (&self.b11, 0, 0),
            (&self.b12, 0, n1),
            (&self.b21, n1, 0),
            (&self.b22, n1, n1),
        ] {
            for i in 0..blk.n_rows() {
                for (j, v) in blk.row(i) {
                    coo.push(r0 + i, c0 + j, v);
                }
            }
        }
        coo.build()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.to_csr().to_dense()
    }

    pub fn symmetry_deviation(&self) -> f64 {
        self.to_csr().symmetry_deviation()
    }

    /// Residual `||B x - rhs|| / ||rhs||` (absolute when the rhs vanishes).
    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        let r = super::residual_norm(self, x, &self.rhs);
        let b = super::norm2(&self.rhs);
        if b > 0.0 {
            r / b
        } else {
            r
        }
    }

    /// Dense LU solve; limited to [`DENSE_MAX`] unknowns.
    pub fn solve_dense(&self) -> Result<Vec<f64>> {
        if self.n() > DENSE_MAX {
            return Err(Error::DenseSizeExceeded {
                n: self.n(),
                max: DENSE_MAX,
            });
        }
        lu_solve(&self.to_dense(), &self.rhs)
    }
}

impl LinearOperator for BlockSystem {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n1 = self.n1();
        let (x1, x2) = x.split_at(n1);
        let (y1, y2) = y.split_at_mut(n1);
        self.b11.matvec_into(x1, y1);
        let t = self.b12.matvec(x2);
        y1.iter_mut().zip(&t).for_each(|(a, b)| *a += b);
        self.b21.matvec_into(x1, y2);
        let t = self.b22.matvec(x2);
        y2.iter_mut().zip(&t).for_each(|(a, b)| *a += b);
    }
}

/// MINRES on a symmetric block system. Asymmetry beyond [`SYMMETRY_TOL`]
/// is rejected before iterating.
pub fn solve_sym_indefinite(sys: &BlockSystem, tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveInfo)> {
    let dev = sys.symmetry_deviation();
    if dev > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(dev));
    }
    minres(sys, &sys.rhs, tol, max_iter)
}
