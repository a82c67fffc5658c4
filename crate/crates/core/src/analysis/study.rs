//! Multi-level studies: convergence tables for the unconstrained problem and
//! quasi-best checks for the box constrained problem.

use std::ops::RangeInclusive;

use super::constants::ConstantsBundle;
use super::manufactured::{manufactured_eigen_case_scaled, ManufacturedCase};
use super::metrics::ConstrainedMetrics;
use super::rates::fit_rate;
use super::report::{measure_nu, ErrorReport};
use super::ritz::ritz_from_fine;
use crate::error::{Error, Result};
use crate::fem::clip::{clamp_pieces, polygon_area_fraction, reference_triangle, Piece};
use crate::mesh::{interpolation_matrix, TriMesh};
use crate::optsys::{
    solve_box_constrained_on, solve_unconstrained_on, BoxBounds, ConstrainedMethod, ControlVariant,
    DiscreteSolution, Discretization, LinearSolver, SolverOptions,
};
use crate::sparse::CsrMatrix;

/// Finest admissible level.
pub const MAX_LEVEL: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    Unconstrained,
    /// Constrained solver with an unbounded box.
    Constrained(ConstrainedMethod),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig {
    pub alpha: f64,
    pub levels: RangeInclusive<usize>,
    pub variant: ControlVariant,
    /// Amplitude of the manufactured adjoint; 0 gives zero data.
    pub amplitude: f64,
    pub tol: f64,
    pub linear_solver: LinearSolver,
    pub mode: SolveMode,
}

impl ConvergenceConfig {
    pub fn new(alpha: f64, levels: RangeInclusive<usize>) -> Self {
        Self {
            alpha,
            levels,
            variant: ControlVariant::Full,
            amplitude: 1.0,
            tol: 1e-12,
            linear_solver: LinearSolver::Minres,
            mode: SolveMode::Unconstrained,
        }
    }
}

pub fn check_levels(levels: &RangeInclusive<usize>) -> Result<()> {
    if levels.is_empty() || *levels.end() > MAX_LEVEL {
        return Err(Error::InvalidParameter(format!(
            "level range {}..={} must be nonempty and end at most at {MAX_LEVEL}",
            levels.start(),
            levels.end()
        )));
    }
    if *levels.start() < 1 {
        return Err(Error::NoInteriorDofs);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub case: ManufacturedCase,
    pub rows: Vec<ErrorReport>,
    pub solutions: Vec<DiscreteSolution>,
}

fn rate_of(rows: &[ErrorReport], f: impl Fn(&ErrorReport) -> Option<f64>) -> Option<f64> {
    let mut h = Vec::new();
    let mut e = Vec::new();
    for r in rows {
        h.push(r.h);
        e.push(f(r)?);
    }
    fit_rate(&h, &e).ok()
}

impl ConvergenceStudy {
    pub fn rate_err_combined(&self) -> Option<f64> {
        rate_of(&self.rows, |r| Some(r.err_combined))
    }

    pub fn rate_nu_minus_1(&self) -> Option<f64> {
        rate_of(&self.rows, |r| (!r.degenerate).then(|| r.nu_minus_1()))
    }

    pub fn rate_err_u_l2(&self) -> Option<f64> {
        rate_of(&self.rows, |r| Some(r.err_u_l2))
    }

    pub fn rate_err_u_h1(&self) -> Option<f64> {
        rate_of(&self.rows, |r| Some(r.err_u_h1))
    }

    pub fn rate_consistency_gap(&self) -> Option<f64> {
        rate_of(&self.rows, |r| r.consistency_gap)
    }
}

pub fn convergence_study(cfg: &ConvergenceConfig) -> Result<ConvergenceStudy> {
    check_levels(&cfg.levels)?;
    let case = manufactured_eigen_case_scaled(cfg.alpha, cfg.amplitude)?;
    let opts = SolverOptions {
        tol: cfg.tol,
        linear_solver: cfg.linear_solver,
        ..SolverOptions::default()
    };
    let mut rows = Vec::new();
    let mut solutions = Vec::new();
    for level in cfg.levels.clone() {
        let disc = Discretization::at_level(level)?;
        let prob = case.problem().with_variant(cfg.variant);
        let sol = match cfg.mode {
            SolveMode::Unconstrained => solve_unconstrained_on(&disc, &prob, &opts)?,
            SolveMode::Constrained(method) => {
                let boxed = prob.with_box(-1e308, 1e308)?;
                solve_box_constrained_on(&disc, &boxed, method, &opts)?
            }
        };
        rows.push(measure_nu(&case, &disc, &sol, cfg.variant)?);
        solutions.push(sol);
    }
    Ok(ConvergenceStudy { case, rows, solutions })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedConfig {
    pub alpha: f64,
    pub bounds: BoxBounds,
    pub levels: RangeInclusive<usize>,
    pub method: ConstrainedMethod,
    pub amplitude: f64,
    pub tol: f64,
    pub reference_tol: f64,
    /// Refinements between a level and its reference.
    pub reference_gap: usize,
    pub max_iter: usize,
}

impl ConstrainedConfig {
    pub fn new(alpha: f64, bounds: BoxBounds, levels: RangeInclusive<usize>) -> Self {
        Self {
            alpha,
            bounds,
            levels,
            method: ConstrainedMethod::FixedPoint,
            amplitude: 1.0,
            tol: 1e-10,
            reference_tol: 1e-12,
            reference_gap: 2,
            max_iter: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedRow {
    pub level: usize,
    pub h: f64,
    /// `d_{K,alpha}(x_ref, x_h)`.
    pub d_error: f64,
    /// Smaller of the distances from `x_ref` to its Ritz projection and to
    /// its nodal interpolant, both in `d_{K,alpha}`.
    pub best: f64,
    /// `(kappa_h mu_h + 1) * best`.
    pub bound: f64,
    /// `d_{K,alpha}(x_h, R_h x_ref)`.
    pub supercloseness: f64,
    /// Product-norm error against the reference.
    pub err_combined: f64,
    /// Product norm of the reference, the scale of the absolute tolerance.
    pub scale: f64,
    pub iterations: usize,
    pub residual: f64,
    pub active_fraction: f64,
}

impl ConstrainedRow {
    pub fn quasi_best_holds(&self) -> bool {
        self.d_error <= self.bound + 1e-6 * self.scale
    }
}

/// Area fraction where `-z_h / sqrt(alpha)` lies outside the box.
pub fn active_fraction(disc: &Discretization, z: &[f64], alpha: f64, bounds: BoxBounds) -> f64 {
    let nodal = disc.dofs.to_nodal(z);
    let s = 1.0 / alpha.sqrt();
    let tri = reference_triangle();
    disc.mesh
        .elements()
        .map(|e| {
            let g = e.nodes.map(|v| -s * nodal[v]);
            let active: f64 = clamp_pieces(&tri, g, bounds.lo, bounds.hi)
                .iter()
                .filter(|(_, p)| *p != Piece::Linear)
                .map(|(poly, _)| polygon_area_fraction(poly))
                .sum();
            e.area * active
        })
        .sum()
}

fn prolong_pair(p: &CsrMatrix, x: &[f64]) -> Vec<f64> {
    let n = p.n_cols();
    let mut out = p.matvec(&x[..n]);
    out.extend(p.matvec(&x[n..]));
    out
}

pub fn constrained_study(cfg: &ConstrainedConfig) -> Result<Vec<ConstrainedRow>> {
    check_levels(&cfg.levels)?;
    if *cfg.levels.end() + cfg.reference_gap > MAX_LEVEL + 2 {
        return Err(Error::InvalidParameter("reference level too fine".into()));
    }
    let case = manufactured_eigen_case_scaled(cfg.alpha, cfg.amplitude)?;
    let prob = case.problem().with_box(cfg.bounds.lo, cfg.bounds.hi)?;
    let consts = ConstantsBundle::new(cfg.alpha)?;
    let opts = SolverOptions {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        ..SolverOptions::default()
    };
    let ref_opts = SolverOptions {
        tol: cfg.reference_tol,
        max_iter: 4 * cfg.max_iter,
        ..SolverOptions::default()
    };
    let mut rows = Vec::new();
    for level in cfg.levels.clone() {
        let coarse = Discretization::at_level(level)?;
        let mut fine_mesh: TriMesh = coarse.mesh.clone();
        for _ in 0..cfg.reference_gap {
            fine_mesh = fine_mesh.refine_uniform();
        }
        let fine = Discretization::new(fine_mesh)?;
        let xh = solve_box_constrained_on(&coarse, &prob, cfg.method, &opts)?;
        let xr = solve_box_constrained_on(&fine, &prob, ConstrainedMethod::FixedPoint, &ref_opts)?;
        let p = interpolation_matrix(&coarse.mesh, &coarse.dofs, &fine.mesh, &fine.dofs)?;
        let x_ref = xr.stacked();
        let n_f = fine.n_dofs();
        let ritz: Vec<f64> = [&x_ref[..n_f], &x_ref[n_f..]]
            .iter()
            .map(|c| ritz_from_fine(&coarse.k, &p, &fine.k, c))
            .collect::<Result<Vec<_>>>()?
            .concat();
        // coarse vertices keep their indices under refinement
        let inject: Vec<f64> = [&x_ref[..n_f], &x_ref[n_f..]]
            .iter()
            .flat_map(|c| {
                (0..coarse.n_dofs()).map(|i| {
                    let v = coarse.dofs.vertex(i);
                    fine.dofs.dof(v).map_or(0.0, |j| c[j])
                })
            })
            .collect();
        let met = ConstrainedMetrics::new(&fine, cfg.alpha, cfg.bounds)?;
        let xh_f = prolong_pair(&p, &xh.stacked());
        let ritz_f = prolong_pair(&p, &ritz);
        let inject_f = prolong_pair(&p, &inject);
        let d_error = met.d(&x_ref, &xh_f)?;
        let best = met.d(&x_ref, &ritz_f)?.min(met.d(&x_ref, &inject_f)?);
        let zero = vec![0.0; x_ref.len()];
        rows.push(ConstrainedRow {
            level,
            h: coarse.mesh.h(),
            d_error,
            best,
            bound: (consts.kappa_h_bound() + 1.0) * best,
            supercloseness: met.d(&xh_f, &ritz_f)?,
            err_combined: met.product_distance(&x_ref, &xh_f)?,
            scale: met.product_distance(&x_ref, &zero)?,
            iterations: xh.iterations,
            residual: xh.solver_residual,
            active_fraction: active_fraction(&coarse, &xh.z, cfg.alpha, cfg.bounds),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_checks() {
        assert!(check_levels(&(3..=6)).is_ok());
        assert!(check_levels(&(3..=8)).is_err());
        #[allow(clippy::reversed_empty_ranges)]
        let empty = 5..=4;
        assert!(check_levels(&empty).is_err());
        assert_eq!(check_levels(&(0..=2)), Err(Error::NoInteriorDofs));
    }

    #[test]
    fn small_convergence_table() {
        let study = convergence_study(&ConvergenceConfig::new(1.0, 2..=4)).unwrap();
        assert_eq!(study.rows.len(), 3);
        for r in &study.rows {
            assert!(r.nu_measured >= 1.0 - 1e-8);
        }
        let rate = study.rate_err_combined().unwrap();
        assert!(rate > 0.7, "{rate}");
    }

    #[test]
    fn constrained_modes_agree_with_unconstrained() {
        let mut cfg = ConvergenceConfig::new(1.0, 2..=3);
        let a = convergence_study(&cfg).unwrap();
        cfg.mode = SolveMode::Constrained(ConstrainedMethod::FixedPoint);
        let b = convergence_study(&cfg).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!((x.err_combined - y.err_combined).abs() <= 1e-8);
            assert!((x.nu_measured - y.nu_measured).abs() <= 1e-8);
        }
    }
}
