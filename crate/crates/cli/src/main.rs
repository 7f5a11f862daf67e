//! Command-line driver for the p-modulus laboratory.
//!
//! Exit codes: 0 on success (optimal solve, true verdict), 1 on parse or
//! validation failures (including a false verification verdict), 2 when
//! the modulus is infinite (infeasible system), 3 when the iteration
//! budget ran out.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use modulus_core::certificate::{
    build_certificate, verify_certificate, ConditionCheck, VerifyOptions,
};
use modulus_core::error::Error;
use modulus_core::geometry::{rasterize_polyline, transboundary_measure, TransboundaryDomain};
use modulus_core::io;
use modulus_core::measure::{MeasureSystem, Metric};
use modulus_core::oracles::{run_example_suite, SuiteKnobs};
use modulus_core::solver::{solve_modulus, SolveOptions, SolveReport, SolveStatus};

const EXIT_OK: u8 = 0;
const EXIT_INVALID: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_MAX_ITERS: u8 = 3;

#[derive(Parser)]
#[command(
    name = "modulus-lab",
    about = "Compute p-moduli of discrete measure systems and certify extremal metrics",
    version
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args, Clone, Copy)]
struct SolverFlags {
    /// Relative duality-gap tolerance.
    #[arg(long = "tol-gap", default_value_t = modulus_core::solver::DEFAULT_GAP_TOL)]
    tol_gap: f64,
    /// Feasibility / complementary-slackness tolerance.
    #[arg(long = "tol-feas", default_value_t = modulus_core::solver::DEFAULT_FEAS_TOL)]
    tol_feas: f64,
    /// Iteration (or LP pivot) budget.
    #[arg(long = "max-iters", default_value_t = modulus_core::solver::DEFAULT_MAX_ITERS)]
    max_iters: usize,
    /// Seed for randomized probes; solves themselves are deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverFlags {
    fn to_options(self) -> SolveOptions {
        SolveOptions {
            max_iters: self.max_iters,
            gap_tol: self.tol_gap,
            feas_tol: self.tol_feas,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExportFormat {
    Csv,
    Pgm,
}

#[derive(Subcommand)]
enum Verb {
    /// Solve a problem file for Mod_p and the extremal metric.
    Solve {
        problem: PathBuf,
        #[arg(long)]
        p: f64,
        #[command(flatten)]
        flags: SolverFlags,
        /// Report destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build an extremality certificate from a solved report.
    Certify {
        problem: PathBuf,
        report: PathBuf,
        /// Certificate destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify a certificate against a problem and a candidate metric.
    Verify {
        problem: PathBuf,
        metric: PathBuf,
        certificate: PathBuf,
        /// Residual tolerance for the equality and cone conditions.
        #[arg(long)]
        tol: Option<f64>,
        /// Also check the metric's energy against an independent solve.
        #[arg(long, default_value_t = false)]
        confirm_value: bool,
        #[command(flatten)]
        flags: SolverFlags,
    },
    /// Run the built-in reference suite and print its table.
    Examples {
        /// Base horizontal resolution of the rectangle grids.
        #[arg(long, default_value_t = 8)]
        base_nx: usize,
        /// Relative tolerance on value agreement.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[command(flatten)]
        flags: SolverFlags,
    },
    /// Convert a curve-family file into a problem file.
    Rasterize {
        curves: PathBuf,
        /// Problem destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export a report's metric as a CSV matrix or PGM image.
    Export {
        report: PathBuf,
        #[arg(long, value_enum)]
        format: ExportFormat,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful outcomes; everything else is
            // a usage error.
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_thread_pool();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    };
    ExitCode::from(code)
}

/// Honors MODULUS_LAB_THREADS as a cap on data parallelism.
fn init_thread_pool() {
    if let Ok(raw) = std::env::var("MODULUS_LAB_THREADS") {
        if let Ok(n) = raw.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        } else {
            eprintln!("warning: ignoring non-numeric MODULUS_LAB_THREADS={raw}");
        }
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.verb {
        Verb::Solve { problem, p, flags, out } => cmd_solve(&problem, p, flags, out.as_deref()),
        Verb::Certify { problem, report, out } => cmd_certify(&problem, &report, out.as_deref()),
        Verb::Verify { problem, metric, certificate, tol, confirm_value, flags } => {
            cmd_verify(&problem, &metric, &certificate, tol, confirm_value, flags)
        }
        Verb::Examples { base_nx, tol, flags } => cmd_examples(base_nx, tol, flags),
        Verb::Rasterize { curves, out } => cmd_rasterize(&curves, out.as_deref()),
        Verb::Export { report, format, out } => cmd_export(&report, format, &out),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => io::write_string(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_solve(
    problem_path: &Path,
    p: f64,
    flags: SolverFlags,
    out: Option<&Path>,
) -> Result<u8, Error> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::Invalid(format!("--p must be positive and finite, got {p}")));
    }
    let (problem, sha) = io::load_problem(problem_path)?;
    let report = solve_modulus(&problem.system, &problem.space, p, &flags.to_options())?;
    let wire = io::report_to_wire(&report, p, &sha, problem.grid.as_ref());
    emit(&io::to_text(&wire)?, out)?;
    Ok(match report.status {
        SolveStatus::Optimal | SolveStatus::EmptySystem => EXIT_OK,
        SolveStatus::Infeasible => EXIT_INFEASIBLE,
        SolveStatus::MaxIters => EXIT_MAX_ITERS,
    })
}

fn cmd_certify(
    problem_path: &Path,
    report_path: &Path,
    out: Option<&Path>,
) -> Result<u8, Error> {
    let (problem, sha) = io::load_problem(problem_path)?;
    let wire = io::load_report(report_path)?;
    if wire.problem_sha256 != sha {
        return Err(Error::Invalid(format!(
            "stale report: it was solved from a problem with hash {}.. but this file hashes to {}..",
            &wire.problem_sha256[..12.min(wire.problem_sha256.len())],
            &sha[..12]
        )));
    }
    if wire.status != SolveStatus::Optimal {
        return Err(Error::Invalid(format!(
            "cannot certify a report with status {:?}; re-solve to optimality first",
            wire.status
        )));
    }
    let report = SolveReport {
        value: wire.value,
        metric: Metric::new(wire.metric.clone())?,
        dual: wire.dual.clone(),
        gap: wire.gap,
        active_set: wire.active_set.clone(),
        iterations: wire.iterations,
        status: wire.status,
        trace: Vec::new(),
    };
    let cert = build_certificate(&problem.system, &problem.space, &report, wire.p)?;
    emit(&io::to_text(&io::certificate_to_wire(&cert))?, out)?;
    Ok(EXIT_OK)
}

fn describe(label: &str, check: &ConditionCheck) -> String {
    format!("condition ({label}): {:<7} {}", format!("{:?}", check.status).to_lowercase(), check.detail)
}

fn cmd_verify(
    problem_path: &Path,
    metric_path: &Path,
    certificate_path: &Path,
    tol: Option<f64>,
    confirm_value: bool,
    flags: SolverFlags,
) -> Result<u8, Error> {
    let (problem, _) = io::load_problem(problem_path)?;
    let metric = io::load_metric(metric_path)?;
    let cert = io::load_certificate(certificate_path)?;
    let mut opts = VerifyOptions {
        confirm_value,
        solve_opts: flags.to_options(),
        ..VerifyOptions::default()
    };
    if let Some(t) = tol {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::Invalid(format!("--tol must be positive, got {t}")));
        }
        opts.tol = t;
    }
    let outcome = verify_certificate(&problem.system, &problem.space, &cert, &metric, &opts)?;
    println!("{}", describe("a", &outcome.condition_a));
    println!("{}", describe("b", &outcome.condition_b));
    println!("{}", describe("c", &outcome.condition_c));
    if let Some(vc) = &outcome.value_check {
        println!("{}", describe("value", vc));
    }
    for note in &outcome.notes {
        println!("note: {note}");
    }
    println!("verdict: {}", if outcome.verdict { "extremal" } else { "not certified" });
    Ok(if outcome.verdict { EXIT_OK } else { EXIT_INVALID })
}

fn cmd_examples(base_nx: usize, tol: f64, flags: SolverFlags) -> Result<u8, Error> {
    let knobs = SuiteKnobs { base_nx, tol, solve_opts: flags.to_options() };
    let report = run_example_suite(&knobs)?;
    print!("{}", report.text_table());
    Ok(if report.all_passed { EXIT_OK } else { EXIT_INVALID })
}

fn cmd_rasterize(curves_path: &Path, out: Option<&Path>) -> Result<u8, Error> {
    let file = io::load_curves(curves_path)?;
    let problem = if file.holes.is_empty() {
        let mut rows = Vec::with_capacity(file.curves.len());
        for curve in &file.curves {
            rows.push(rasterize_polyline(&file.grid, curve)?);
        }
        io::ProblemFile {
            space: file.grid.cell_space(),
            system: MeasureSystem::new(rows),
            grid: Some(file.grid),
            holes: Vec::new(),
        }
    } else {
        let domain = TransboundaryDomain::new(file.grid, file.holes.clone())?;
        let mut rows = Vec::with_capacity(file.curves.len());
        for curve in &file.curves {
            rows.push(transboundary_measure(&domain, curve)?);
        }
        io::ProblemFile {
            space: domain.space().clone(),
            system: MeasureSystem::new(rows),
            grid: Some(domain.grid().clone()),
            holes: file.holes,
        }
    };
    emit(&io::to_text(&io::problem_to_wire(&problem))?, out)?;
    Ok(EXIT_OK)
}

fn cmd_export(report_path: &Path, format: ExportFormat, out: &Path) -> Result<u8, Error> {
    let wire = io::load_report(report_path)?;
    let grid = wire.grid.as_ref().map(io::WireGrid::to_grid).transpose()?;
    match format {
        ExportFormat::Csv => {
            let csv = io::metric_to_csv(&wire.metric, grid.as_ref())?;
            io::write_string(out, &csv)?;
        }
        ExportFormat::Pgm => {
            let grid = grid.ok_or_else(|| {
                Error::Invalid(
                    "this report carries no grid; PGM export needs one (use csv instead)".into(),
                )
            })?;
            let pgm = io::metric_to_pgm(&wire.metric, &grid)?;
            std::fs::write(out, pgm)
                .map_err(|e| Error::Invalid(format!("cannot write {}: {e}", out.display())))?;
        }
    }
    Ok(EXIT_OK)
}
