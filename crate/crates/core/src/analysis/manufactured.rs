//! Exact solutions of the continuous optimality system.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{DifferentiableField, ScalarField, SineMode};
use crate::optsys::ModelProblem;

/// Optimality triple built on the first Dirichlet eigenfunction
/// `s = sin(pi x) sin(pi y)`, `-Laplace s = 2 pi^2 s`:
///
/// ```text
/// z   = A s
/// u   = -z / (2 pi^2 sqrt(alpha))
/// q   = -z / sqrt(alpha)
/// u_d = u - 2 pi^2 sqrt(alpha) z
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedCase {
    pub alpha: f64,
    pub amplitude: f64,
    pub exact_u: SineMode,
    pub exact_z: SineMode,
    pub exact_q: SineMode,
    pub u_d: SineMode,
    pub description: String,
}

pub const EIGENVALUE: f64 = 2.0 * PI * PI;

pub fn manufactured_eigen_case(alpha: f64) -> Result<ManufacturedCase> {
    manufactured_eigen_case_scaled(alpha, 1.0)
}

/// Same family with `z = amplitude * s`; amplitude 0 is the zero solution.
pub fn manufactured_eigen_case_scaled(alpha: f64, amplitude: f64) -> Result<ManufacturedCase> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let sa = alpha.sqrt();
    let u_amp = -amplitude / (EIGENVALUE * sa);
    Ok(ManufacturedCase {
        alpha,
        amplitude,
        exact_u: SineMode::new(u_amp),
        exact_z: SineMode::new(amplitude),
        exact_q: SineMode::new(-amplitude / sa),
        u_d: SineMode::new(u_amp - EIGENVALUE * sa * amplitude),
        description: format!("eigenfunction case, alpha = {alpha:e}, amplitude = {amplitude}"),
    })
}

impl ManufacturedCase {
    pub fn problem(&self) -> ModelProblem {
        ModelProblem::new(self.alpha, Arc::new(self.u_d)).expect("alpha validated at construction")
    }

    /// Pointwise residuals of `-Laplace u = q`, `-Laplace z = (u - u_d)/sqrt(alpha)`
    /// and `sqrt(alpha) q + z = 0`.
    pub fn residuals(&self, x: f64, y: f64) -> [f64; 3] {
        let sa = self.alpha.sqrt();
        let u = self.exact_u.eval(x, y);
        let z = self.exact_z.eval(x, y);
        let q = self.exact_q.eval(x, y);
        let ud = self.u_d.eval(x, y);
        [
            -self.exact_u.laplacian(x, y) - q,
            -self.exact_z.laplacian(x, y) - (u - ud) / sa,
            sa * q + z,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn optimality_system_holds_pointwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for alpha in [1.0, 1e-2, 1e-4] {
            let case = manufactured_eigen_case(alpha).unwrap();
            for _ in 0..50 {
                let (x, y) = (rng.random::<f64>(), rng.random::<f64>());
                let [a, b, c] = case.residuals(x, y);
                let scale = 1.0 + case.u_d.eval(x, y).abs() / alpha.sqrt();
                assert!(a.abs() <= 1e-12 * scale, "{a}");
                assert!(b.abs() <= 1e-12 * scale, "{b}");
                assert!(c.abs() <= 1e-14 * scale, "{c}");
            }
        }
    }

    #[test]
    fn laplacian_matches_finite_differences() {
        let case = manufactured_eigen_case(1.0).unwrap();
        let f = |x: f64, y: f64| case.exact_z.eval(x, y);
        let (x, y, h) = (0.3, 0.7, 1e-4);
        let fd = (f(x + h, y) + f(x - h, y) + f(x, y + h) + f(x, y - h) - 4.0 * f(x, y)) / (h * h);
        assert!((fd - case.exact_z.laplacian(x, y)).abs() < 1e-5);
    }

    #[test]
    fn zero_amplitude_is_trivial() {
        let case = manufactured_eigen_case_scaled(1.0, 0.0).unwrap();
        assert_eq!(case.u_d.eval(0.4, 0.4), 0.0);
        assert!(manufactured_eigen_case(0.0).is_err());
    }
}
