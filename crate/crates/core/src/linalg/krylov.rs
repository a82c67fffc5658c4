//! Conjugate gradients and MINRES, unpreconditioned.
//!
//! Both solvers check the recurrence residual against the true residual
//! `||b - A x||` on exit and restart from the current iterate when the two
//! have drifted apart, so the returned solution always satisfies the
//! requested tolerance by explicit matvec.

use super::{axpy, dot, norm2, LinearOperator};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveInfo {
    pub iterations: usize,
    /// `||b - A x|| / ||b||` measured by explicit matvec.
    pub relative_residual: f64,
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

fn true_residual(a: &dyn LinearOperator, x: &[f64], b: &[f64], r: &mut [f64]) -> f64 {
    a.apply(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    norm2(r)
}

/// Restart wrapper shared by both Krylov methods. `sweep` runs the method on
/// `A d = r` and returns the correction plus the iterations it used.
fn with_restarts(
    a: &dyn LinearOperator,
    b: &[f64],
    tol: f64,
    max_iter: usize,
    mut sweep: impl FnMut(&[f64], f64, usize, &mut Vec<f64>) -> Result<(Vec<f64>, usize)>,
) -> Result<(Vec<f64>, SolveInfo)> {
    check_tol(tol)?;
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch(format!("rhs has {} entries, expected {n}", b.len())));
    }
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((
            x,
            SolveInfo {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let target = tol * bnorm;
    let mut r = b.to_vec();
    let mut rnorm = bnorm;
    let mut used = 0;
    let mut history = Vec::new();
    for _restart in 0..8 {
        let (d, its) = sweep(&r, target / rnorm, max_iter - used, &mut history)?;
        used += its;
        axpy(1.0, &d, &mut x);
        rnorm = true_residual(a, &x, b, &mut r);
        if rnorm <= target {
            return Ok((
                x,
                SolveInfo {
                    iterations: used,
                    relative_residual: rnorm / bnorm,
                },
            ));
        }
        if used >= max_iter {
            break;
        }
    }
    Err(Error::NotConverged {
        iterations: used,
        residual: rnorm / bnorm,
        history,
    })
}

/// Conjugate gradients for SPD `a`. Fails with [`Error::Indefinite`] on
/// non-positive curvature and [`Error::NotConverged`] after `max_iter`.
pub fn cg(
    a: &dyn LinearOperator,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveInfo)> {
    let n = a.dim();
    with_restarts(a, b, tol, max_iter, |rhs, rel_tol, budget, history| {
        let mut x = vec![0.0; n];
        let mut r = rhs.to_vec();
        let mut p = r.clone();
        let mut ap = vec![0.0; n];
        let mut rr = dot(&r, &r);
        let target = rel_tol * rr.sqrt();
        for k in 0..budget {
            if rr.sqrt() <= target {
                return Ok((x, k));
            }
            a.apply(&p, &mut ap);
            let curv = dot(&p, &ap);
            if !(curv > 0.0) {
                return Err(Error::Indefinite {
                    iteration: k,
                    curvature: curv / dot(&p, &p),
                });
            }
            let step = rr / curv;
            axpy(step, &p, &mut x);
            axpy(-step, &ap, &mut r);
            let rr_new = dot(&r, &r);
            history.push(rr_new.sqrt());
            let beta = rr_new / rr;
            rr = rr_new;
            for (pi, ri) in p.iter_mut().zip(&r) {
                *pi = ri + beta * *pi;
            }
        }
        Ok((x, budget))
    })
}

/// CG on a sparse SPD matrix, returning only the solution.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    if a.n_rows() != a.n_cols() {
        return Err(Error::DimensionMismatch("matrix must be square".into()));
    }
    cg(a, b, tol, max_iter).map(|(x, _)| x)
}

/// MINRES (Paige-Saunders) for symmetric, possibly indefinite `a`.
pub fn minres(
    a: &dyn LinearOperator,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveInfo)> {
    let n = a.dim();
    with_restarts(a, b, tol, max_iter, |rhs, rel_tol, budget, history| {
        let mut x = vec![0.0; n];
        let beta1 = norm2(rhs);
        let mut r1 = rhs.to_vec();
        let mut r2 = rhs.to_vec();
        let mut y = rhs.to_vec();
        let mut v = vec![0.0; n];
        let mut w = vec![0.0; n];
        let mut w1 = vec![0.0; n];
        let mut w2 = vec![0.0; n];
        let (mut oldb, mut beta) = (0.0, beta1);
        let (mut dbar, mut epsln) = (0.0f64, 0.0f64);
        let mut phibar = beta1;
        let (mut cs, mut sn) = (-1.0f64, 0.0f64);
        let target = rel_tol * beta1;
        for k in 1..=budget {
            let s = 1.0 / beta;
            for (vi, yi) in v.iter_mut().zip(&y) {
                *vi = s * yi;
            }
            a.apply(&v, &mut y);
            if k >= 2 {
                axpy(-beta / oldb, &r1, &mut y);
            }
            let alfa = dot(&v, &y);
            axpy(-alfa / beta, &r2, &mut y);
            std::mem::swap(&mut r1, &mut r2);
            r2.copy_from_slice(&y);
            oldb = beta;
            beta = norm2(&r2);

            let oldeps = epsln;
            let delta = cs * dbar + sn * alfa;
            let gbar = sn * dbar - cs * alfa;
            epsln = sn * beta;
            dbar = -cs * beta;
            let gamma = gbar.hypot(beta);
            if gamma == 0.0 {
                return Err(Error::Breakdown {
                    iteration: k,
                    residual: phibar / beta1,
                });
            }
            cs = gbar / gamma;
            sn = beta / gamma;
            let phi = cs * phibar;
            phibar *= sn;

            std::mem::swap(&mut w1, &mut w2);
            std::mem::swap(&mut w2, &mut w);
            for i in 0..n {
                w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
            }
            axpy(phi, &w, &mut x);
            history.push(phibar);
            if phibar <= target {
                return Ok((x, k));
            }
            if beta == 0.0 {
                // invariant Krylov space: the iterate is as good as it gets
                return Ok((x, k));
            }
        }
        Ok((x, budget))
    })
}
