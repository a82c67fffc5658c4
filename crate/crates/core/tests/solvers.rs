use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use qba_core::analysis::manufactured_eigen_case;
use qba_core::linalg::{inf_sup_constant, max_abs_diff as linear_max_abs_diff, solve_sym_indefinite, BlockSystem, DENSE_MAX};
use qba_core::optsys::{reduced_system, solve_box_constrained_on, LinearSolver};
use qba_core::{ConstrainedMethod, ControlVariant, CsrMatrix, Discretization, ModelProblem, SolverOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn iterative_and_dense_paths_agree_on_small_systems() {
    for level in 2..=5 {
        let disc = Discretization::at_level(level).unwrap();
        assert!(2 * disc.n_dofs() <= DENSE_MAX);
        for alpha in [1.0, 1e-2, 1e-4] {
            for variant in [ControlVariant::Full, ControlVariant::PiecewiseConstant] {
                let prob = manufactured_eigen_case(alpha).unwrap().problem().with_variant(variant);
                let sys = reduced_system(&disc, &prob, 4).unwrap();
                let dense = sys.solve_dense().unwrap();
                let (iter, info) = solve_sym_indefinite(&sys, 1e-12, 100_000).unwrap();
                let scale = dense.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                let diff = linear_max_abs_diff(&dense, &iter);
                assert!(diff <= 1e-8 * scale, "level {level} alpha {alpha} {variant}: {diff} ({info:?})");
                assert!(sys.relative_residual(&iter) <= 1e-10);
            }
        }
    }
}

#[test]
fn newton_dense_and_minres_steps_agree() {
    let disc = Discretization::at_level(4).unwrap();
    let prob = manufactured_eigen_case(1.0).unwrap().problem().with_box(-0.2, 0.2).unwrap();
    let mut opts = SolverOptions {
        tol: 1e-11,
        ..SolverOptions::default()
    };
    let a = solve_box_constrained_on(&disc, &prob, ConstrainedMethod::SemismoothNewton, &opts).unwrap();
    opts.linear_solver = LinearSolver::Dense;
    let b = solve_box_constrained_on(&disc, &prob, ConstrainedMethod::SemismoothNewton, &opts).unwrap();
    let c = solve_box_constrained_on(&disc, &prob, ConstrainedMethod::FixedPoint, &opts).unwrap();
    assert!(linear_max_abs_diff(&a.stacked(), &b.stacked()) <= 1e-8);
    assert!(linear_max_abs_diff(&a.stacked(), &c.stacked()) <= 1e-8);
}

fn remark_matrix(alpha: f64) -> DMatrix<f64> {
    let s = 1.0 / alpha.sqrt();
    DMatrix::from_row_slice(
        4,
        4,
        &[-s, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, s],
    )
}

#[test]
fn small_block_system_matches_lu() {
    let b = remark_matrix(1e-2);
    let block = |r: usize, c: usize| CsrMatrix::from_dense(&b.view((r, c), (2, 2)).into_owned(), 0.0);
    let rhs = vec![0.0, 0.0, 1.0, 0.0];
    let sys = BlockSystem::new(block(0, 0), block(0, 2), block(2, 0), block(2, 2), rhs.clone()).unwrap();
    let (x, _) = solve_sym_indefinite(&sys, 1e-14, 100).unwrap();
    let oracle = b.lu().solve(&DVector::from_vec(rhs)).unwrap();
    for i in 0..4 {
        assert!((x[i] - oracle[i]).abs() <= 1e-12, "{x:?} {oracle}");
    }
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let r = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &r * r.transpose() + DMatrix::identity(n, n) * 0.3
}

/// `sqrt(lambda_min(G_test^{-1} B^T G_trial^{-1} B))` from a general
/// (non-symmetric) eigendecomposition, without whitening.
fn eig_oracle(b: &DMatrix<f64>, gt: &DMatrix<f64>, gs: &DMatrix<f64>) -> f64 {
    let s = gs.clone().try_inverse().unwrap() * b.transpose() * gt.clone().try_inverse().unwrap() * b;
    let ev = s.complex_eigenvalues();
    ev.iter().map(|c| c.re).fold(f64::INFINITY, f64::min).max(0.0).sqrt()
}

#[test]
fn inf_sup_matches_eigen_oracle_and_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..5 {
        let b = DMatrix::from_fn(6, 6, |_, _| rng.random_range(-1.0..1.0));
        let (gt, gs) = (random_spd(&mut rng, 6), random_spd(&mut rng, 6));
        let value = inf_sup_constant(&b, &gt, &gs).unwrap();
        let oracle = eig_oracle(&b, &gt, &gs);
        assert!((value - oracle).abs() <= 1e-8 * oracle, "trial {trial}: {value} vs {oracle}");
        if trial == 0 {
            // sup over trial is explicit: |G_trial^{-1/2} B phi|, so only the
            // inf over test directions is sampled
            let gt_inv = gt.clone().try_inverse().unwrap();
            let mut best = f64::INFINITY;
            for _ in 0..1_000_000 {
                let phi = DVector::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
                let bp = &b * &phi;
                let num = (bp.transpose() * &gt_inv * &bp)[(0, 0)].sqrt();
                let den = (phi.transpose() * &gs * &phi)[(0, 0)].sqrt();
                best = best.min(num / den);
            }
            assert!(value <= best * 1.02, "{value} vs brute force {best}");
        }
    }
}

#[test]
fn zero_data_solves_to_zero() {
    let disc = Discretization::at_level(3).unwrap();
    let prob = ModelProblem::new(1.0, Arc::new(|_: f64, _: f64| 0.0)).unwrap();
    let sys = reduced_system(&disc, &prob, 4).unwrap();
    let (x, _) = solve_sym_indefinite(&sys, 1e-10, 100).unwrap();
    assert!(x.iter().all(|&v| v == 0.0));
}
