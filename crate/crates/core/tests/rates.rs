//! Convergence rates on levels 3..6, each against an independent oracle.

use nalgebra::{DMatrix, DVector};
use qba_core::analysis::norms::h1_semi_error;
use qba_core::analysis::study::{constrained_study, convergence_study, ConstrainedConfig, ConvergenceConfig};
use qba_core::analysis::{fit_rate, ritz_projection};
use qba_core::fem::{ScalarField, SineMode};
use qba_core::linalg::{generalized_eig_max, solve_spd};
use qba_core::mesh::interpolate;
use qba_core::{BoxBounds, ControlVariant, Discretization};

fn hs(levels: std::ops::RangeInclusive<usize>) -> Vec<f64> {
    levels.map(|l| 2f64.sqrt() / (1u64 << l) as f64).collect()
}

#[test]
fn load_vector_approaches_mass_times_interpolant() {
    let f = SineMode::new(1.0);
    let mut gaps = Vec::new();
    for level in 3..=6 {
        let disc = Discretization::at_level(level).unwrap();
        let load = disc.load(&f, 4).unwrap();
        let fi = interpolate(&disc.mesh, &disc.dofs, |x, y| f.eval(x, y));
        let r: Vec<f64> = load.iter().zip(disc.m.matvec(&fi)).map(|(a, b)| a - b).collect();
        // discrete L2 norm of the Riesz representative of r
        let w = solve_spd(&disc.m, &r, 1e-12, 100_000).unwrap();
        gaps.push(r.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>().sqrt());
    }
    let rate = fit_rate(&hs(3..=6), &gaps).unwrap();
    assert!((rate - 2.0).abs() <= 0.2, "rate {rate}, gaps {gaps:?}");
}

#[test]
fn p0_projection_error_operator_decays_quadratically() {
    let mut lams = Vec::new();
    for level in 3..=6 {
        let disc = Discretization::at_level(level).unwrap();
        let diff = disc.m.lin_comb(1.0, &disc.g, -1.0).unwrap();
        let diff = diff.lin_comb(0.5, &diff.transpose(), 0.5).unwrap();
        lams.push(generalized_eig_max(&diff, &disc.k, 1e-8, 20_000).unwrap());
    }
    // dense oracle on the coarsest level
    let disc = Discretization::at_level(3).unwrap();
    let a = disc.m.to_dense() - disc.g.to_dense();
    let k = disc.k.to_dense();
    let l = k.clone().cholesky().unwrap().l();
    let li = l.try_inverse().unwrap();
    let c = &li * a * li.transpose();
    let oracle = c.symmetric_eigenvalues().max();
    assert!((lams[0] - oracle).abs() <= 1e-7 * oracle, "{} vs {oracle}", lams[0]);
    let rate = fit_rate(&hs(3..=6), &lams).unwrap();
    assert!((rate - 2.0).abs() <= 0.25, "rate {rate}, {lams:?}");
}

#[test]
fn unconstrained_errors_converge_at_expected_rates() {
    let study = convergence_study(&ConvergenceConfig::new(1.0, 3..=6)).unwrap();
    let h1 = study.rate_err_u_h1().unwrap();
    assert!((h1 - 1.0).abs() <= 0.15, "{h1}");
    let comb = study.rate_err_combined().unwrap();
    assert!((comb - 1.0).abs() <= 0.15, "{comb}");
    let l2 = study.rate_err_u_l2().unwrap();
    assert!((l2 - 2.0).abs() <= 0.25, "{l2}");
    for r in &study.rows {
        assert!(r.nu_measured >= 1.0 - 1e-8);
        assert!(r.nu_measured <= r.kappa_h_bound + 1e-6);
        assert!(r.ritz_residual <= 1e-10);
    }
}

#[test]
fn p0_consistency_gap_decays_quadratically() {
    let mut cfg = ConvergenceConfig::new(1.0, 3..=6);
    cfg.variant = ControlVariant::PiecewiseConstant;
    let study = convergence_study(&cfg).unwrap();
    let rate = study.rate_consistency_gap().unwrap();
    assert!((rate - 2.0).abs() <= 0.25, "{rate}");
}

#[test]
fn ritz_projection_beats_interpolation() {
    let exact = SineMode::new(1.0);
    for level in 3..=6 {
        let disc = Discretization::at_level(level).unwrap();
        let r = ritz_projection(&disc.mesh, &disc.dofs, &exact).unwrap();
        let i = interpolate(&disc.mesh, &disc.dofs, |x, y| exact.eval(x, y));
        let er = h1_semi_error(&disc.mesh, &disc.dofs, &r, &exact).unwrap();
        let ei = h1_semi_error(&disc.mesh, &disc.dofs, &i, &exact).unwrap();
        assert!(er <= ei * (1.0 + 1e-12), "level {level}: {er} > {ei}");
    }
}

#[test]
fn constrained_error_converges_against_overkill_reference() {
    let cfg = ConstrainedConfig::new(1.0, BoxBounds::new(-0.2, 0.2).unwrap(), 3..=5);
    let rows = constrained_study(&cfg).unwrap();
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let e: Vec<f64> = rows.iter().map(|r| r.err_combined).collect();
    let rate = fit_rate(&h, &e).unwrap();
    assert!(rate >= 0.85, "{rate}");
    for r in &rows {
        assert!(r.quasi_best_holds(), "{r:?}");
        assert!(r.active_fraction > 0.05 && r.active_fraction < 0.95);
    }
}

#[test]
fn fit_rate_matches_normal_equations() {
    let h = hs(3..=6);
    let e = [0.3, 0.16, 0.07, 0.036];
    let a = DMatrix::from_fn(4, 2, |i, j| if j == 0 { 1.0 } else { h[i].ln() });
    let y = DVector::from_iterator(4, e.iter().map(|v: &f64| v.ln()));
    let coef = (a.transpose() * &a).lu().solve(&(a.transpose() * y)).unwrap();
    assert!((fit_rate(&h, &e).unwrap() - coef[1]).abs() <= 1e-12);
}
