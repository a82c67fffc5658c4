//! Subcommand drivers. Each returns the list of failed assertions; CSV goes
//! to the output sink, summaries to stderr.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::ops::RangeInclusive;
use std::path::PathBuf;

use qba_core::analysis::constants::kappa_alpha_example;
use qba_core::analysis::study::{
    constrained_study, convergence_study, ConstrainedConfig, ConvergenceConfig, ConvergenceStudy, SolveMode,
};
use qba_core::analysis::{limit_checks, sharpness_inf_sup, verify_bk_monotonicity, ConstantsBundle};
use qba_core::{BoxBounds, ConstrainedMethod, ControlVariant, Discretization, Error, TriMesh};

pub const CONVERGENCE_HEADER: &str =
    "level,h,err_u_h1,err_z_h1,err_combined,best_combined,nu_measured,nu_minus_1,kappa_h_bound,consistency_gap";

pub const CONSTRAINED_HEADER: &str =
    "level,h,d_K_alpha,best,bound,supercloseness,err_combined,iterations,residual,active_fraction";

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

pub type Failures = Vec<String>;

/// Where CSV and tables go.
pub struct Sink {
    pub out: Option<PathBuf>,
}

impl Sink {
    fn emit(&self, text: &str) -> Result<(), CliError> {
        match &self.out {
            Some(path) => fs::write(path, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display()))),
            None => io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Config(format!("cannot write output: {e}"))),
        }
    }
}

/// Shortest round-trip form; scientific notation for very small or large
/// magnitudes.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x != 0.0 && x.is_finite() && !(1e-4..1e6).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), num)
}

pub fn dump_mesh(path: &PathBuf, level: usize) -> Result<(), CliError> {
    let mesh = TriMesh::unit_square_level(level);
    fs::write(path, mesh.to_text()).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

pub struct ConvergenceRun {
    pub alpha: f64,
    pub levels: RangeInclusive<usize>,
    pub variant: ControlVariant,
    pub zero_data: bool,
    pub tol: f64,
    pub mode: SolveMode,
}

pub fn convergence_csv(study: &ConvergenceStudy) -> String {
    let mut s = String::new();
    writeln!(s, "{CONVERGENCE_HEADER}").unwrap();
    for r in &study.rows {
        let gap = r.consistency_gap.map_or_else(String::new, num);
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.level,
            num(r.h),
            num(r.err_u_h1),
            num(r.err_z_h1),
            num(r.err_combined),
            num(r.best_combined),
            num(r.nu_measured),
            num(r.nu_minus_1()),
            num(r.kappa_h_bound),
            gap
        )
        .unwrap();
    }
    writeln!(
        s,
        "# rate_err_combined={},rate_nu_minus_1={}",
        fmt_opt(study.rate_err_combined()),
        fmt_opt(study.rate_nu_minus_1())
    )
    .unwrap();
    if study.rows.iter().any(|r| r.consistency_gap.is_some()) {
        writeln!(s, "# rate_consistency_gap={}", fmt_opt(study.rate_consistency_gap())).unwrap();
    }
    s
}

fn check_rate(failures: &mut Failures, name: &str, rate: Option<f64>, target: f64, tol: f64) {
    match rate {
        Some(r) if (r - target).abs() <= tol => {}
        Some(r) => failures.push(format!("{name} = {r:.4}, expected {target} +- {tol}")),
        None => failures.push(format!("{name} could not be fitted")),
    }
}

pub fn convergence_assertions(run: &ConvergenceRun, study: &ConvergenceStudy) -> Failures {
    let mut f = Vec::new();
    for r in &study.rows {
        if r.nu_measured < 1.0 - 1e-8 {
            f.push(format!("level {}: nu_measured = {} below 1", r.level, r.nu_measured));
        }
        if r.nu_measured > r.kappa_h_bound + 1e-6 {
            f.push(format!("level {}: nu_measured = {} above kappa_h mu_h = {}", r.level, r.nu_measured, r.kappa_h_bound));
        }
        if run.variant == ControlVariant::Full && r.nu_measured > kappa_alpha_example(run.alpha) {
            f.push(format!("level {}: nu_measured = {} above kappa_alpha", r.level, r.nu_measured));
        }
        if run.zero_data && (r.err_combined != 0.0 || !r.degenerate) {
            f.push(format!("level {}: zero data should give zero error with a degenerate flag", r.level));
        }
    }
    if !run.zero_data && study.rows.len() >= 3 {
        check_rate(&mut f, "rate_err_combined", study.rate_err_combined(), 1.0, 0.15);
        if run.variant == ControlVariant::Full {
            match study.rate_nu_minus_1() {
                Some(r) if r >= 0.8 => {}
                other => f.push(format!("rate_nu_minus_1 = {other:?}, expected >= 0.8")),
            }
        } else {
            check_rate(&mut f, "rate_consistency_gap", study.rate_consistency_gap(), 2.0, 0.25);
        }
    }
    f
}

pub fn run_convergence(run: &ConvergenceRun, sink: &Sink) -> Result<Failures, CliError> {
    let cfg = ConvergenceConfig {
        alpha: run.alpha,
        levels: run.levels.clone(),
        variant: run.variant,
        amplitude: if run.zero_data { 0.0 } else { 1.0 },
        tol: run.tol,
        linear_solver: qba_core::optsys::LinearSolver::Minres,
        mode: run.mode,
    };
    let study = convergence_study(&cfg)?;
    sink.emit(&convergence_csv(&study))?;
    let failures = convergence_assertions(run, &study);
    eprintln!(
        "convergence: alpha={} variant={} levels {}..{}: {} rows, {} failed assertions",
        run.alpha,
        run.variant,
        run.levels.start(),
        run.levels.end(),
        study.rows.len(),
        failures.len()
    );
    Ok(failures)
}

pub struct ConstrainedRun {
    pub alpha: f64,
    pub bounds: BoxBounds,
    pub levels: RangeInclusive<usize>,
    pub method: ConstrainedMethod,
    pub zero_data: bool,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

pub fn run_constrained(run: &ConstrainedRun, sink: &Sink) -> Result<Failures, CliError> {
    if run.bounds.is_unbounded() {
        // the clamp is inactive: same table as the unconstrained study
        let conv = ConvergenceRun {
            alpha: run.alpha,
            levels: run.levels.clone(),
            variant: ControlVariant::Full,
            zero_data: run.zero_data,
            tol: run.tol.min(1e-12),
            mode: SolveMode::Constrained(run.method),
        };
        return run_convergence(&conv, sink);
    }
    let cfg = ConstrainedConfig {
        alpha: run.alpha,
        bounds: run.bounds,
        levels: run.levels.clone(),
        method: run.method,
        amplitude: if run.zero_data { 0.0 } else { 1.0 },
        tol: run.tol,
        reference_tol: run.tol.min(1e-12),
        reference_gap: 2,
        max_iter: run.max_iter,
    };
    let rows = constrained_study(&cfg)?;
    let mut s = String::new();
    writeln!(s, "{CONSTRAINED_HEADER}").unwrap();
    let mut failures = Vec::new();
    for r in &rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.level,
            num(r.h),
            num(r.d_error),
            num(r.best),
            num(r.bound),
            num(r.supercloseness),
            num(r.err_combined),
            r.iterations,
            num(r.residual),
            num(r.active_fraction)
        )
        .unwrap();
        if !r.quasi_best_holds() {
            failures.push(format!(
                "level {}: d_K_alpha = {} exceeds (kappa_h mu_h + 1) best = {}",
                r.level, r.d_error, r.bound
            ));
        }
        if r.residual > run.tol {
            failures.push(format!("level {}: residual {} above {}", r.level, r.residual, run.tol));
        }
    }
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let rate = |e: Vec<f64>| qba_core::analysis::fit_rate(&h, &e).ok();
    writeln!(
        s,
        "# rate_err_combined={},rate_d_K_alpha={}",
        fmt_opt(rate(rows.iter().map(|r| r.err_combined).collect())),
        fmt_opt(rate(rows.iter().map(|r| r.d_error).collect()))
    )
    .unwrap();
    let small = Discretization::new(TriMesh::build_uniform_unit_square(4)?)?;
    let mono = verify_bk_monotonicity(&small, run.alpha, run.bounds, 100, run.seed)?;
    writeln!(s, "# monotonicity_build4={}/{}", mono.passed, mono.trials).unwrap();
    if !mono.all_passed() {
        failures.push(format!("b_K monotonicity: {}/{} trials passed", mono.passed, mono.trials));
    }
    sink.emit(&s)?;
    eprintln!(
        "constrained: alpha={} box [{}, {}] levels {}..{}: {} failed assertions",
        run.alpha,
        run.bounds.lo,
        run.bounds.hi,
        run.levels.start(),
        run.levels.end(),
        failures.len()
    );
    Ok(failures)
}

pub fn run_infsup_demo(alphas: &[f64], sink: &Sink) -> Result<Failures, CliError> {
    let mut s = String::from("alpha,computed,bound,computed_over_sqrt_alpha\n");
    let mut failures = Vec::new();
    for &alpha in alphas {
        let row = sharpness_inf_sup(alpha)?;
        writeln!(s, "{},{},{},{}", num(alpha), num(row.computed), num(row.bound), num(row.computed / alpha.sqrt())).unwrap();
        if !row.holds() {
            failures.push(format!("alpha={alpha}: inf-sup {} above sqrt(alpha/2) = {}", row.computed, row.bound));
        }
    }
    sink.emit(&s)?;
    Ok(failures)
}

pub fn run_constants(alphas: &[f64], sink: &Sink) -> Result<Failures, CliError> {
    let mut s = String::from("alpha,L,gamma,kappa,kappa_alpha_example\n");
    for &alpha in alphas {
        let c = ConstantsBundle::new(alpha)?;
        writeln!(s, "{},{},{},{},{}", num(alpha), num(c.l), num(c.gamma), num(c.kappa), num(c.kappa_alpha_example)).unwrap();
    }
    let mut failures = Vec::new();
    for c in limit_checks() {
        let status = if c.passed() { "ok" } else { "FAILED" };
        writeln!(s, "# {} = {} (target {}, rel tol {}) {status}", c.name, c.value, c.target, c.rel_tol).unwrap();
        if !c.passed() {
            failures.push(format!("{} = {}, expected {} within {}", c.name, c.value, c.target, c.rel_tol));
        }
    }
    sink.emit(&s)?;
    Ok(failures)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for x in [0.0, 1.0, 0.1767766952966369, 1.28e-15, -3.5e-7, 2.5e9] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(1.28e-15), "1.28e-15");
        assert_eq!(num(0.5), "0.5");
    }

    #[test]
    fn header_is_fixed() {
        assert_eq!(CONVERGENCE_HEADER.split(',').count(), 10);
        assert!(CONVERGENCE_HEADER.starts_with("level,h,err_u_h1"));
    }
}
