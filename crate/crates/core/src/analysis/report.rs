//! Error reports: errors, best approximations and the measured ratio `nu`.

use super::constants::ConstantsBundle;
use super::manufactured::ManufacturedCase;
use super::norms::{h1_semi_error, l2_error};
use super::ritz::ritz_projection_with;
use crate::error::{Error, Result};
use crate::mesh::interpolate;
use crate::optsys::{consistency_gap_on, ControlVariant, DiscreteSolution, Discretization};

/// Best errors below this are treated as zero.
pub const DEGENERATE_BEST: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub level: usize,
    pub h: f64,
    pub err_u_h1: f64,
    pub err_z_h1: f64,
    pub err_u_l2: f64,
    /// Product norm `(|u - u_h|_1^2 + |z - z_h|_1^2)^{1/2}`.
    pub err_combined: f64,
    /// Seminorm `(||u - u_h||^2 + ||z - z_h||^2)^{1/2}`.
    pub err_enorm: f64,
    /// Product-norm distance to the pair of Ritz projections.
    pub best_combined: f64,
    pub nu_measured: f64,
    /// True when the best error vanishes and `nu` is set to 1.
    pub degenerate: bool,
    pub kappa_h_bound: f64,
    pub consistency_gap: Option<f64>,
    pub d_k_alpha: Option<f64>,
    pub ritz_residual: f64,
}

impl ErrorReport {
    pub fn nu_minus_1(&self) -> f64 {
        self.nu_measured - 1.0
    }
}

/// Compares a discrete solution with the exact manufactured solution.
pub fn measure_nu(
    case: &ManufacturedCase,
    disc: &Discretization,
    solution: &DiscreteSolution,
    variant: ControlVariant,
) -> Result<ErrorReport> {
    let n = disc.n_dofs();
    if solution.u.len() != n || solution.z.len() != n {
        return Err(Error::DimensionMismatch("solution does not match the discretization".into()));
    }
    let (mesh, dofs) = (&disc.mesh, &disc.dofs);
    let err_u_h1 = h1_semi_error(mesh, dofs, &solution.u, &case.exact_u)?;
    let err_z_h1 = h1_semi_error(mesh, dofs, &solution.z, &case.exact_z)?;
    let err_u_l2 = l2_error(mesh, dofs, &solution.u, &case.exact_u)?;
    let err_z_l2 = l2_error(mesh, dofs, &solution.z, &case.exact_z)?;
    let ru = ritz_projection_with(mesh, dofs, &disc.k, &case.exact_u)?;
    let rz = ritz_projection_with(mesh, dofs, &disc.k, &case.exact_z)?;
    let best_u = h1_semi_error(mesh, dofs, &ru.coeffs, &case.exact_u)?;
    let best_z = h1_semi_error(mesh, dofs, &rz.coeffs, &case.exact_z)?;
    let err_combined = err_u_h1.hypot(err_z_h1);
    let best_combined = best_u.hypot(best_z);
    let degenerate = best_combined < DEGENERATE_BEST;
    let nu_measured = if degenerate { 1.0 } else { err_combined / best_combined };
    let consts = ConstantsBundle::new(case.alpha)?;
    let consistency_gap = match variant {
        ControlVariant::Full => None,
        ControlVariant::PiecewiseConstant => {
            let prob = case.problem().with_variant(variant);
            let z = interpolate(mesh, dofs, |x, y| crate::fem::ScalarField::eval(&case.exact_z, x, y));
            Some(consistency_gap_on(disc, &prob, &z)?)
        }
    };
    Ok(ErrorReport {
        level: mesh.level(),
        h: mesh.h(),
        err_u_h1,
        err_z_h1,
        err_u_l2,
        err_combined,
        err_enorm: err_u_l2.hypot(err_z_l2),
        best_combined,
        nu_measured,
        degenerate,
        kappa_h_bound: consts.kappa_h_bound(),
        consistency_gap,
        d_k_alpha: None,
        ritz_residual: ru.orthogonality_residual.max(rz.orthogonality_residual),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::manufactured::{manufactured_eigen_case, manufactured_eigen_case_scaled};
    use crate::optsys::{solve_unconstrained_on, SolverOptions};

    #[test]
    fn zero_case_is_degenerate() {
        let case = manufactured_eigen_case_scaled(1.0, 0.0).unwrap();
        let disc = Discretization::at_level(3).unwrap();
        let sol = solve_unconstrained_on(&disc, &case.problem(), &SolverOptions::default()).unwrap();
        let r = measure_nu(&case, &disc, &sol, ControlVariant::Full).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.nu_measured, 1.0);
        assert_eq!(r.err_combined, 0.0);
    }

    #[test]
    fn ratio_is_at_least_one() {
        let case = manufactured_eigen_case(1.0).unwrap();
        let disc = Discretization::at_level(3).unwrap();
        let sol = solve_unconstrained_on(&disc, &case.problem(), &SolverOptions::default()).unwrap();
        let r = measure_nu(&case, &disc, &sol, ControlVariant::Full).unwrap();
        assert!(r.nu_measured >= 1.0 - 1e-8);
        assert!(r.nu_measured <= r.kappa_h_bound);
        assert!(r.ritz_residual <= 1e-10);
    }
}
