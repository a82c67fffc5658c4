//! Largest eigenvalue of a symmetric pencil by restarted Lanczos.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dense::whiten;
use super::krylov::cg;
use super::{dot, LinearOperator};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Seed of the start vector.
pub const POWER_SEED: u64 = 42;

/// Largest Krylov basis kept before an explicit restart.
const MAX_BASIS: usize = 200;

/// Self-adjoint operator `T` in the inner product `ip`: `apply(x)` returns
/// `T x`.
struct PencilProblem<'a> {
    n: usize,
    apply: Box<dyn FnMut(&[f64]) -> Result<Vec<f64>> + 'a>,
    ip: Box<dyn Fn(&[f64], &[f64]) -> f64 + 'a>,
}

fn start_vector(n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Top Ritz pair of the tridiagonal matrix and the residual estimate
/// `|beta_m s_m|`.
fn top_ritz(alphas: &[f64], betas: &[f64], beta_last: f64) -> (f64, Vec<f64>, f64) {
    let m = alphas.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let (k, theta) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, 0.0));
    let s: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
    (theta, s.clone(), (beta_last * s[m - 1]).abs())
}

fn lambda_max(mut p: PencilProblem, tol: f64, max_iter: usize) -> Result<f64> {
    let n = p.n;
    let basis_cap = n.min(MAX_BASIS).max(1);
    let mut x = start_vector(n);
    let mut history = Vec::new();
    let mut total = 0;
    let mut theta_scale: f64 = 0.0;
    loop {
        let nx = (p.ip)(&x, &x).sqrt();
        if nx == 0.0 {
            return Ok(0.0);
        }
        let mut basis: Vec<Vec<f64>> = vec![x.iter().map(|v| v / nx).collect()];
        let (mut alphas, mut betas) = (Vec::new(), Vec::new());
        loop {
            total += 1;
            let v = basis.last().expect("basis is nonempty");
            let mut w = (p.apply)(v)?;
            let a = (p.ip)(v, &w);
            alphas.push(a);
            // full reorthogonalization, twice for stability
            for _ in 0..2 {
                for q in &basis {
                    let c = (p.ip)(q, &w);
                    w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
                }
            }
            let beta = (p.ip)(&w, &w).max(0.0).sqrt();
            let (theta, s, est) = top_ritz(&alphas, &betas, beta);
            theta_scale = theta_scale.max(theta.abs()).max(a.abs());
            history.push(theta);
            let exhausted = beta <= 1e-14 * theta_scale.max(f64::MIN_POSITIVE) || basis.len() == n;
            if est <= tol * theta.abs().max(1e-300) || exhausted {
                return Ok(theta);
            }
            if total >= max_iter {
                return Err(Error::NotConverged {
                    iterations: total,
                    residual: est / theta.abs().max(f64::MIN_POSITIVE),
                    history,
                });
            }
            if basis.len() == basis_cap {
                // restart from the current top Ritz vector
                x = vec![0.0; n];
                for (q, c) in basis.iter().zip(&s) {
                    x.iter_mut().zip(q).for_each(|(xi, qi)| *xi += c * qi);
                }
                break;
            }
            betas.push(beta);
            basis.push(w.into_iter().map(|v| v / beta).collect());
        }
    }
}

/// Largest eigenvalue of `b_gram^{-1} a` for symmetric `a` and SPD `b_gram`
/// (sparse). Applications of `b_gram^{-1}` use CG; iteration stops when
/// the Ritz residual estimate is below `tol` relative.
pub fn generalized_eig_max(a: &CsrMatrix, b_gram: &CsrMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    let n = a.n_rows();
    if a.n_cols() != n || b_gram.n_rows() != n || b_gram.n_cols() != n {
        return Err(Error::DimensionMismatch("pencil matrices must be square and equal in size".into()));
    }
    if a.symmetry_deviation() > 1e-12 {
        return Err(Error::NotSymmetric(a.symmetry_deviation()));
    }
    let inner_max = 20 * n + 100;
    let problem = PencilProblem {
        n,
        apply: Box::new(move |x: &[f64]| {
            let ax = a.matvec(x);
            Ok(cg(b_gram, &ax, 1e-12, inner_max)?.0)
        }),
        ip: Box::new(move |x: &[f64], y: &[f64]| {
            let mut by = vec![0.0; y.len()];
            b_gram.apply(y, &mut by);
            dot(x, &by)
        }),
    };
    lambda_max(problem, tol, max_iter)
}

/// Dense variant of [`generalized_eig_max`], iterating on the Cholesky
/// whitened matrix.
pub fn generalized_eig_max_dense(
    a: &DMatrix<f64>,
    b_gram: &DMatrix<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    if !a.is_square() || a.shape() != b_gram.shape() {
        return Err(Error::DimensionMismatch("pencil matrices must be square and equal in size".into()));
    }
    let w = whiten(a, b_gram, b_gram)?;
    let c = (&w + w.transpose()) * 0.5;
    let n = c.nrows();
    let problem = PencilProblem {
        n,
        apply: Box::new(move |x: &[f64]| Ok((&c * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec())),
        ip: Box::new(|x: &[f64], y: &[f64]| dot(x, y)),
    };
    lambda_max(problem, tol, max_iter)
}
