//! `pqr`: compute polynomial feedback laws for the benchmark problems or a
//! user-supplied system, simulate them and reproduce the degree tables.
//!
//! Exit codes: 0 success, 1 validation failure, 2 solver or I/O error,
//! 3 configuration error.

mod config;

use std::fmt::Write as _;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use pqr_core::budget::set_entry_budget;
use pqr_core::serialize::CoefficientFile;
use pqr_core::table::{degree_table, write_table_csv};
use pqr_core::validate::run_all;
use pqr_core::{closed_loop_cost, pqr_with, PqrSolution};

use config::{Resolved, RunArgs, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Solver(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 3,
            CliError::Solver(_) | CliError::Io(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Solver(m) => write!(f, "solver error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<pqr_core::PqrError> for CliError {
    fn from(e: pqr_core::PqrError) -> Self {
        CliError::Solver(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "pqr", version, about = "Polynomial feedback for polynomial-quadratic regulator problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute value-function and feedback coefficients up to the requested degree
    Solve(RunArgs),
    /// Simulate the closed loop under the feedback of the requested degree
    Simulate(RunArgs),
    /// Value series and closed-loop cost for every degree up to the requested one
    Table(RunArgs),
    /// Run the dense-oracle and invariant suites
    Validate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Solve(args) => prepare(&args).and_then(|run| solve(&run)),
        Command::Simulate(args) => prepare(&args).and_then(|run| simulate(&run)),
        Command::Table(args) => prepare(&args).and_then(|run| table(&run)),
        Command::Validate { seed } => return validate(seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pqr: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn prepare(args: &RunArgs) -> Result<Resolved, CliError> {
    let run = RunConfig::from_args(args)?.resolve()?;
    set_entry_budget(run.memory_budget);
    std::fs::create_dir_all(&run.out).map_err(|e| CliError::Io(format!("{}: {e}", run.out.display())))?;
    Ok(run)
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    std::io::Write::write_all(&mut tmp, contents).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn summary(run: &Resolved, sol: &PqrSolution) -> String {
    let mut s = String::new();
    let inst = &run.instance;
    let _ = writeln!(s, "model {} (n = {}, m = {}), degree {}", inst.label, inst.system.n(), inst.system.m(), run.degree);
    let _ = writeln!(
        s,
        "riccati residual {:.16e} after {} refinement steps",
        sol.are.residual_norm,
        sol.are.residual_history.len().saturating_sub(1)
    );
    let _ = writeln!(s, "{:>6} {:>24} {:>24} {:>14}", "degree", "|k_d|_F", "|v_(d+1)|_2", "wall time [s]");
    for (d, t) in &sol.timings {
        let k = sol.feedback.gain(*d).map_or(f64::NAN, |g| g.norm());
        let v = sol.value.coeff(d + 1).map_or(f64::NAN, |c| c.iter().map(|x| x * x).sum::<f64>().sqrt());
        let _ = writeln!(s, "{d:>6} {k:>24.16e} {v:>24.16e} {:>14.6}", t.as_secs_f64());
    }
    let total: f64 = sol.timings.iter().map(|(_, t)| t.as_secs_f64()).sum();
    let _ = writeln!(s, "total solve time {total:.6} s");
    s
}

fn solve(run: &Resolved) -> Result<(), CliError> {
    let inst = &run.instance;
    let sol = pqr_with(&inst.system, &inst.cost, run.degree, &run.pqr)?;
    let coeffs = CoefficientFile::from_solution(&sol.value, &sol.feedback);
    write_atomic(&run.out.join("coefficients.json"), coeffs.to_json().as_bytes())?;
    let text = summary(run, &sol);
    write_atomic(&run.out.join("summary.txt"), text.as_bytes())?;
    print!("{text}");
    println!("wrote {}", run.out.join("coefficients.json").display());
    Ok(())
}

fn simulate(run: &Resolved) -> Result<(), CliError> {
    let inst = &run.instance;
    let sol = pqr_with(&inst.system, &inst.cost, run.degree, &run.pqr)?;
    let start = Instant::now();
    let (traj, cost) = closed_loop_cost(inst, &sol.feedback, Some(run.degree), inst.horizon, &run.sim)?;
    let mut csv = Vec::new();
    traj.write_csv(&mut csv).map_err(|e| CliError::Io(e.to_string()))?;
    let path = run.out.join("trajectory.csv");
    write_atomic(&path, &csv)?;
    print!("{}", summary(run, &sol));
    println!(
        "closed loop with degree {} feedback: status {}, cost {cost:.16e} over [0, {}] ({:.3} s)",
        run.degree,
        traj.status.label(),
        inst.horizon,
        start.elapsed().as_secs_f64()
    );
    println!("value series at x0: {:.16e}", sol.value.eval(&inst.x0, Some(run.degree + 1)));
    println!("wrote {}", path.display());
    Ok(())
}

fn table(run: &Resolved) -> Result<(), CliError> {
    let inst = &run.instance;
    let degrees: Vec<usize> = (1..=run.degree).collect();
    let (sol, rows) = degree_table(inst, &degrees, &run.pqr, &run.sim)?;
    let mut csv = Vec::new();
    write_table_csv(&rows, &mut csv).map_err(|e| CliError::Io(e.to_string()))?;
    let path = run.out.join("table.csv");
    write_atomic(&path, &csv)?;
    print!("{}", summary(run, &sol));
    print!("{}", String::from_utf8_lossy(&csv));
    println!("wrote {}", path.display());
    Ok(())
}

fn validate(seed: u64) -> ExitCode {
    let reports = run_all(seed);
    for r in &reports {
        println!("{r}");
    }
    if reports.iter().all(|r| r.passed) {
        println!("all suites passed");
        ExitCode::SUCCESS
    } else {
        println!("validation failed");
        ExitCode::from(1)
    }
}
