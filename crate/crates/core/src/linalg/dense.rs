//! Dense factorizations and the discrete inf-sup constant.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Largest system solved by the dense path.
pub const DENSE_MAX: usize = 2000;

/// Inf-sup computations are limited to this size.
pub const INF_SUP_MAX: usize = 5000;

pub fn cholesky(a: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("Cholesky needs a square matrix".into()));
    }
    Cholesky::new(a.clone()).ok_or(Error::NotPositiveDefinite)
}

/// Solves `a x = b` by LU with partial pivoting.
pub fn lu_solve(a: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.nrows();
    if !a.is_square() || b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} system with rhs of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    if n > DENSE_MAX {
        return Err(Error::DenseSizeExceeded { n, max: DENSE_MAX });
    }
    a.clone()
        .lu()
        .solve(&DVector::from_column_slice(b))
        .map(|x| x.as_slice().to_vec())
        .ok_or(Error::Breakdown {
            iteration: 0,
            residual: f64::NAN,
        })
}

/// `L^{-1} B L'^{-T}` for Cholesky factors `L` of `g_left` and `L'` of
/// `g_right`.
pub fn whiten(b: &DMatrix<f64>, g_left: &DMatrix<f64>, g_right: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let l_left = cholesky(g_left)?.l();
    let l_right = cholesky(g_right)?.l();
    let mut w = b.clone();
    if !l_left.solve_lower_triangular_mut(&mut w) {
        return Err(Error::NotPositiveDefinite);
    }
    let mut wt = w.transpose();
    if !l_right.solve_lower_triangular_mut(&mut wt) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(wt.transpose())
}

/// `inf_phi sup_v (v^T B phi) / (|v|_{G_trial} |phi|_{G_test})`, where rows
/// of `b` index trial and columns index test degrees of freedom.
///
/// Equals `sqrt(lambda_min(G_test^{-1} B^T G_trial^{-1} B))`, evaluated as
/// the smallest singular value of the whitened `W` (squaring would lose
/// half the digits on nearly singular instances).
pub fn inf_sup_constant(b: &DMatrix<f64>, g_trial: &DMatrix<f64>, g_test: &DMatrix<f64>) -> Result<f64> {
    if g_trial.nrows() != b.nrows() || g_test.nrows() != b.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "B is {}x{}, trial Gram {}x{}, test Gram {}x{}",
            b.nrows(),
            b.ncols(),
            g_trial.nrows(),
            g_trial.ncols(),
            g_test.nrows(),
            g_test.ncols()
        )));
    }
    let n = b.nrows().max(b.ncols());
    if n > INF_SUP_MAX {
        return Err(Error::DenseSizeExceeded { n, max: INF_SUP_MAX });
    }
    let w = whiten(b, g_trial, g_test)?;
    // more test than trial directions: some phi is annihilated
    if w.ncols() > w.nrows() {
        return Ok(0.0);
    }
    Ok(w.singular_values().min().max(0.0))
}

/// Eigenvalues of the symmetric pencil `(a, b_gram)` in ascending order.
pub fn generalized_eigenvalues(a: &DMatrix<f64>, b_gram: &DMatrix<f64>) -> Result<Vec<f64>> {
    let w = whiten(a, b_gram, b_gram)?;
    let sym = (&w + w.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}
