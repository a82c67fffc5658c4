//! Monotonicity of the constrained form `b_K` on small meshes.
//!
//! For pairs `v, w` the test function is `phi = T (v - w)` with
//! `T psi = (1/mu_h) (A^{-1} J_2 psi_2, A^{-*} J_1 psi_1) + gamma_h (-psi_1, psi_2)`
//! (`J_i` the Riesz maps of the H1 seminorm, `A` the stiffness operator),
//! and the check is
//! `b_K(v, phi) - b_K(w, phi) >= d(v, w) ||phi|| / (kappa_h mu_h)`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::constants::ConstantsBundle;
use super::metrics::ConstrainedMetrics;
use crate::error::{Error, Result};
use crate::fem::assemble_clamped_term;
use crate::linalg::inf_sup_constant;
use crate::optsys::{reduced_system, BoxBounds, Discretization, ModelProblem};

/// Largest dof count for the dense operators.
pub const MONOTONICITY_MAX_DOFS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub trials: usize,
    pub passed: usize,
    /// Smallest `(lhs - rhs) / scale` over the trials.
    pub worst_margin: f64,
    pub kappa_h: f64,
    pub mu_h: f64,
    /// Dense inf-sup constant of the linear form (unbounded box only),
    /// trial norm the Hilbert version of `d`, test norm `|| . ||`.
    pub dense_inf_sup: Option<f64>,
}

impl MonotonicityReport {
    pub fn all_passed(&self) -> bool {
        self.passed == self.trials
    }
}

struct Setup<'a> {
    disc: &'a Discretization,
    alpha: f64,
    bounds: BoxBounds,
    k: DMatrix<f64>,
    k_inv: DMatrix<f64>,
    consts: ConstantsBundle,
}

impl Setup<'_> {
    fn n(&self) -> usize {
        self.disc.n_dofs()
    }

    fn apply_t(&self, psi: &[f64]) -> Vec<f64> {
        let n = self.n();
        let (p1, p2) = (DVector::from_column_slice(&psi[..n]), DVector::from_column_slice(&psi[n..]));
        let t1 = &self.k_inv * (&self.k * &p2) / self.consts.mu_h;
        let t2 = &self.k_inv * (&self.k * &p1) / self.consts.mu_h;
        let g = self.consts.gamma_h;
        let mut out = Vec::with_capacity(2 * n);
        out.extend((0..n).map(|i| t1[i] - g * p1[i]));
        out.extend((0..n).map(|i| t2[i] + g * p2[i]));
        out
    }

    /// `b_K(v, phi) = phi_2 . K v_1 + phi_1 . K v_2 - phi_2 . N(v_2) - s phi_1 . M v_1`.
    fn b_k(&self, v: &[f64], phi: &[f64]) -> Result<f64> {
        let n = self.n();
        let (v1, v2) = v.split_at(n);
        let (f1, f2) = phi.split_at(n);
        let d = self.disc;
        let nv = assemble_clamped_term(&d.mesh, &d.dofs, v2, self.alpha, self.bounds.lo, self.bounds.hi)?;
        let kv1 = d.k.matvec(v1);
        let kv2 = d.k.matvec(v2);
        let mv1 = d.m.matvec(v1);
        let s = 1.0 / self.alpha.sqrt();
        let mut total = 0.0;
        for i in 0..n {
            total += f2[i] * (kv1[i] - nv[i]) + f1[i] * (kv2[i] - s * mv1[i]);
        }
        Ok(total)
    }

    fn product_norm(&self, v: &[f64]) -> f64 {
        let n = self.n();
        (self.disc.k.quad(&v[..n]) + self.disc.k.quad(&v[n..])).max(0.0).sqrt()
    }
}

/// Evaluates the monotonicity inequality for `trials` random pairs.
pub fn verify_bk_monotonicity(
    disc: &Discretization,
    alpha: f64,
    bounds: BoxBounds,
    trials: usize,
    seed: u64,
) -> Result<MonotonicityReport> {
    let n = disc.n_dofs();
    if n > MONOTONICITY_MAX_DOFS {
        return Err(Error::DenseSizeExceeded {
            n,
            max: MONOTONICITY_MAX_DOFS,
        });
    }
    let consts = ConstantsBundle::new(alpha)?;
    let k = disc.k.to_dense();
    let k_inv = k.clone().try_inverse().ok_or(Error::NotPositiveDefinite)?;
    let setup = Setup {
        disc,
        alpha,
        bounds,
        k,
        k_inv,
        consts,
    };
    let metrics = ConstrainedMetrics::new(disc, alpha, bounds)?;
    let c = 1.0 / consts.kappa_h_bound();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut passed = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..trials {
        let v: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let w: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (lhs, rhs) = monotonicity_sides(&setup, &metrics, c, &v, &w)?;
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        let margin = (lhs - rhs) / scale;
        worst = worst.min(margin);
        if lhs >= rhs - 1e-9 * scale {
            passed += 1;
        }
    }
    let dense_inf_sup = if bounds.is_unbounded() {
        Some(dense_linear_inf_sup(disc, alpha, &consts)?)
    } else {
        None
    };
    Ok(MonotonicityReport {
        trials,
        passed,
        worst_margin: worst,
        kappa_h: consts.kappa_h,
        mu_h: consts.mu_h,
        dense_inf_sup,
    })
}

fn monotonicity_sides(
    setup: &Setup,
    metrics: &ConstrainedMetrics,
    c: f64,
    v: &[f64],
    w: &[f64],
) -> Result<(f64, f64)> {
    let psi: Vec<f64> = v.iter().zip(w).map(|(a, b)| a - b).collect();
    let phi = setup.apply_t(&psi);
    let lhs = setup.b_k(v, &phi)? - setup.b_k(w, &phi)?;
    let rhs = c * metrics.d(v, w)? * setup.product_norm(&phi);
    Ok((lhs, rhs))
}

/// Both sides of the inequality for one pair; exposed for tests.
pub fn monotonicity_pair(
    disc: &Discretization,
    alpha: f64,
    bounds: BoxBounds,
    v: &[f64],
    w: &[f64],
) -> Result<(f64, f64)> {
    let consts = ConstantsBundle::new(alpha)?;
    let k = disc.k.to_dense();
    let k_inv = k.clone().try_inverse().ok_or(Error::NotPositiveDefinite)?;
    let setup = Setup {
        disc,
        alpha,
        bounds,
        k,
        k_inv,
        consts,
    };
    let metrics = ConstrainedMetrics::new(disc, alpha, bounds)?;
    monotonicity_sides(&setup, &metrics, 1.0 / consts.kappa_h_bound(), v, w)
}

/// Inf-sup constant of the reduced system matrix with the trial norm
/// `(M_a^2 ||v||^2 + (M^2/alpha) |v|^2)^{1/2}` and test norm `||phi||`.
fn dense_linear_inf_sup(disc: &Discretization, alpha: f64, consts: &ConstantsBundle) -> Result<f64> {
    let prob = ModelProblem::new(alpha, std::sync::Arc::new(|_: f64, _: f64| 0.0))?;
    let b = reduced_system(disc, &prob, 2)?.to_dense();
    let n = disc.n_dofs();
    let k = disc.k.to_dense();
    let m = disc.m.to_dense();
    let mut g_test = DMatrix::zeros(2 * n, 2 * n);
    g_test.view_mut((0, 0), (n, n)).copy_from(&k);
    g_test.view_mut((n, n), (n, n)).copy_from(&k);
    let w = consts.m * consts.m / alpha;
    let a2 = consts.big_m_a * consts.big_m_a;
    let block = &k * a2 + &m * w;
    let mut g_trial = DMatrix::zeros(2 * n, 2 * n);
    g_trial.view_mut((0, 0), (n, n)).copy_from(&block);
    g_trial.view_mut((n, n), (n, n)).copy_from(&block);
    // rows of the system matrix are test functions, columns trial functions
    inf_sup_constant(&b, &g_test, &g_trial)
}
