//! `qba`: convergence studies, constant tables and the inf-sup demo for the
//! reduced optimality system.
//!
//! Exit codes: 0 all assertions pass, 1 an assertion failed, 2 a solver
//! failed, 3 bad configuration.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qba_core::analysis::study::SolveMode;

use commands::{CliError, ConstrainedRun, ConvergenceRun, Failures, Sink};
use config::{
    parse_alpha, parse_alphas, parse_box, parse_count, parse_levels, parse_method, parse_positive, parse_variant,
    FileConfig,
};

#[derive(Parser, Debug)]
#[command(name = "qba", version, about = "Quasi-best approximation experiments for the reduced optimality system")]
struct Cli {
    /// Flat key=value file; command-line flags win over its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed of the randomized checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Error table of the manufactured problem over a level range.
    Convergence(ConvergenceArgs),
    /// Inf-sup constant of the 4x4 example against sqrt(alpha/2).
    InfsupDemo(AlphaListArgs),
    /// L, gamma, kappa and kappa_alpha per alpha, plus limit checks.
    Constants(AlphaListArgs),
    /// Box constrained study against an overkill reference.
    Constrained(ConstrainedArgs),
}

#[derive(Args, Debug)]
struct ConvergenceArgs {
    #[arg(long)]
    alpha: Option<String>,
    /// Level range a:b, at most 7.
    #[arg(long)]
    levels: Option<String>,
    /// full or p0.
    #[arg(long)]
    variant: Option<String>,
    /// Solve through the constrained solver with an unbounded box
    /// (fixed-point or ssn).
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    /// Use u_d = 0.
    #[arg(long)]
    zero_data: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the finest mesh of the run in text form.
    #[arg(long)]
    dump_mesh: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AlphaListArgs {
    /// Comma-separated alpha values.
    #[arg(long)]
    alphas: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConstrainedArgs {
    #[arg(long)]
    alpha: Option<String>,
    /// Control bounds lo:hi; `inf` and `-inf` stand for +-1e308.
    #[arg(long = "box", allow_hyphen_values = true)]
    bounds: Option<String>,
    #[arg(long)]
    levels: Option<String>,
    /// fixed-point or ssn.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    #[arg(long)]
    zero_data: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    dump_mesh: Option<PathBuf>,
}

fn cfg_err(e: String) -> CliError {
    CliError::Config(e)
}

fn out_path(file: &FileConfig, flag: Option<PathBuf>) -> Option<PathBuf> {
    flag.or_else(|| file.get("out").map(PathBuf::from))
}

fn run(cli: Cli) -> Result<Failures, CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p).map_err(cfg_err)?,
        None => FileConfig::default(),
    };
    let seed = match cli.seed {
        Some(s) => s,
        None => file.get("seed").map_or(Ok(42), |s| s.parse().map_err(|_| format!("invalid seed {s:?}"))).map_err(cfg_err)?,
    };
    match cli.command {
        Command::Convergence(a) => {
            let alpha = parse_alpha(&file.pick(a.alpha, "alpha").unwrap_or_else(|| "1".into())).map_err(cfg_err)?;
            let levels = parse_levels(&file.pick(a.levels, "levels").unwrap_or_else(|| "3:6".into())).map_err(cfg_err)?;
            let variant = parse_variant(&file.pick(a.variant, "variant").unwrap_or_else(|| "full".into())).map_err(cfg_err)?;
            let mode = match file.pick(a.method, "method") {
                Some(m) => SolveMode::Constrained(parse_method(&m).map_err(cfg_err)?),
                None => SolveMode::Unconstrained,
            };
            let tol = parse_positive(&file.pick(a.tol, "tol").unwrap_or_else(|| "1e-12".into()), "tol").map_err(cfg_err)?;
            let zero_data = file.flag(a.zero_data, "zero-data").map_err(cfg_err)?;
            if let Some(p) = a.dump_mesh.or_else(|| file.get("dump-mesh").map(PathBuf::from)) {
                commands::dump_mesh(&p, *levels.end())?;
            }
            let run = ConvergenceRun {
                alpha,
                levels,
                variant,
                zero_data,
                tol,
                mode,
            };
            commands::run_convergence(&run, &Sink { out: out_path(&file, a.out) })
        }
        Command::Constrained(a) => {
            let alpha = parse_alpha(&file.pick(a.alpha, "alpha").unwrap_or_else(|| "1".into())).map_err(cfg_err)?;
            let bounds = parse_box(&file.pick(a.bounds, "box").ok_or_else(|| cfg_err("constrained needs --box lo:hi".into()))?)
                .map_err(cfg_err)?;
            let levels = parse_levels(&file.pick(a.levels, "levels").unwrap_or_else(|| "3:5".into())).map_err(cfg_err)?;
            let method = parse_method(&file.pick(a.method, "method").unwrap_or_else(|| "fixed-point".into())).map_err(cfg_err)?;
            let tol = parse_positive(&file.pick(a.tol, "tol").unwrap_or_else(|| "1e-10".into()), "tol").map_err(cfg_err)?;
            let max_iter =
                parse_count(&file.pick(a.max_iter, "max-iter").unwrap_or_else(|| "50".into()), "max-iter").map_err(cfg_err)?;
            let zero_data = file.flag(a.zero_data, "zero-data").map_err(cfg_err)?;
            if let Some(p) = a.dump_mesh.or_else(|| file.get("dump-mesh").map(PathBuf::from)) {
                commands::dump_mesh(&p, *levels.end())?;
            }
            let run = ConstrainedRun {
                alpha,
                bounds,
                levels,
                method,
                zero_data,
                tol,
                max_iter,
                seed,
            };
            commands::run_constrained(&run, &Sink { out: out_path(&file, a.out) })
        }
        Command::InfsupDemo(a) => {
            let alphas = parse_alphas(&file.pick(a.alphas, "alphas").unwrap_or_else(|| "1,1e-2,1e-4,1e-6".into()))
                .map_err(cfg_err)?;
            commands::run_infsup_demo(&alphas, &Sink { out: out_path(&file, a.out) })
        }
        Command::Constants(a) => {
            let alphas =
                parse_alphas(&file.pick(a.alphas, "alphas").unwrap_or_else(|| "1,1e-2,1e-4,1e-8".into())).map_err(cfg_err)?;
            commands::run_constants(&alphas, &Sink { out: out_path(&file, a.out) })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            for f in &failures {
                eprintln!("assertion failed: {f}");
            }
            ExitCode::from(1)
        }
        Err(CliError::Numerical(m)) => {
            eprintln!("solver failure: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Config(m)) => {
            eprintln!("configuration error: {m}");
            ExitCode::from(3)
        }
    }
}
