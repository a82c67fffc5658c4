use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qba_core::analysis::manufactured_eigen_case;
use qba_core::fem::{assemble_clamped_term, assemble_mass, assemble_stiffness};
use qba_core::linalg::minres;
use qba_core::optsys::{reduced_system, solve_box_constrained_on};
use qba_core::{ConstrainedMethod, DofMap, Discretization, SolverOptions, TriMesh};

fn assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("assembly");
    for level in [4, 6] {
        let mesh = TriMesh::unit_square_level(level);
        let dofs = DofMap::interior(&mesh);
        g.bench_with_input(BenchmarkId::new("stiffness", level), &level, |b, _| {
            b.iter(|| assemble_stiffness(black_box(&mesh), &dofs).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("mass", level), &level, |b, _| {
            b.iter(|| assemble_mass(black_box(&mesh), &dofs).unwrap())
        });
    }
    g.finish();
}

fn clamped_term(c: &mut Criterion) {
    let mesh = TriMesh::unit_square_level(6);
    let dofs = DofMap::interior(&mesh);
    let z: Vec<f64> = (0..dofs.n_dofs()).map(|i| (i as f64 * 0.37).sin()).collect();
    c.bench_function("clamped_term_level6", |b| {
        b.iter(|| assemble_clamped_term(&mesh, &dofs, black_box(&z), 1.0, -0.3, 0.3).unwrap())
    });
}

fn solvers(c: &mut Criterion) {
    let case = manufactured_eigen_case(1.0).unwrap();
    let prob = case.problem();
    let mut g = c.benchmark_group("solve");
    g.sample_size(10);
    for level in [4, 5] {
        let disc = Discretization::at_level(level).unwrap();
        let sys = reduced_system(&disc, &prob, 4).unwrap();
        g.bench_with_input(BenchmarkId::new("minres", level), &level, |b, _| {
            b.iter(|| minres(&sys, black_box(&sys.rhs), 1e-10, 100_000).unwrap())
        });
        let boxed = prob.clone().with_box(-0.2, 0.2).unwrap();
        g.bench_with_input(BenchmarkId::new("ssn_box", level), &level, |b, _| {
            b.iter(|| {
                solve_box_constrained_on(&disc, &boxed, ConstrainedMethod::SemismoothNewton, &SolverOptions::default())
                    .unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, assembly, clamped_term, solvers);
criterion_main!(benches);
