//! `thermogeo`: scenario-driven front end for the geometric thermal-stress
//! library. `run` executes JSON scenarios and writes deterministic
//! artifacts; `verify` runs the built-in check suite.

mod fmt;
mod run;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Mutex;

use clap::{Parser, Subcommand};

use run::{resolve_out_dir, run_scenario, RunReport};
use scenario::{parse_scenario, CliError};

#[derive(Parser)]
#[command(name = "thermogeo", version, about = "Geometric thermal-stress toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute one or more scenario files and write artifacts.
    Run {
        /// Scenario JSON files.
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        /// Output directory (overrides each scenario's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Parallel workers for batch runs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Tolerance scale; > 1 relaxes, < 1 tightens (overrides THERMOGEO_TOL).
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run the built-in verification suite and print a pass/fail table.
    Verify {
        /// Tolerance scale; > 1 relaxes, < 1 tightens (overrides THERMOGEO_TOL).
        #[arg(long)]
        tol: Option<f64>,
    },
}

fn effective_tol(flag: Option<f64>) -> Result<f64, CliError> {
    let raw = match flag {
        Some(v) => v,
        None => match std::env::var("THERMOGEO_TOL") {
            Err(_) => 1.0,
            Ok(s) => s.parse().map_err(|_| {
                CliError::Validation(format!("THERMOGEO_TOL must be a number, got \"{s}\""))
            })?,
        },
    };
    if !(raw.is_finite() && raw > 0.0) {
        return Err(CliError::Validation(format!(
            "tolerance scale must be finite and positive, got {raw}"
        )));
    }
    Ok(raw)
}

fn cmd_verify(tol: Option<f64>) -> Result<(), CliError> {
    let scale = effective_tol(tol)?;
    let results = thermogeo::run_all(scale);
    let total = results.len();
    let passed = results.iter().filter(|r| r.passed).count();
    println!("{:<28} {}", "check", "status");
    for r in &results {
        println!("{:<28} {}", r.name, if r.passed { "PASS" } else { "FAIL" });
        if !r.passed {
            println!("    {}", r.detail);
        }
    }
    println!("{passed}/{total} checks passed");
    if passed == total {
        Ok(())
    } else {
        Err(CliError::Solver("verification failed".to_string()))
    }
}

struct JobOutcome {
    index: usize,
    path: PathBuf,
    result: Result<(RunReport, PathBuf, u128), CliError>,
}

fn run_one(path: &PathBuf, out: Option<&PathBuf>, batch: bool, tol: f64) -> Result<(RunReport, PathBuf, u128), CliError> {
    let sc = parse_scenario(path)?;
    let out_dir = resolve_out_dir(&sc, out.map(|p| p.as_path()), path, batch);
    let started = std::time::Instant::now();
    let report = run_scenario(&sc, &out_dir, tol)?;
    Ok((report, out_dir, started.elapsed().as_millis()))
}

fn cmd_run(
    scenarios: Vec<PathBuf>,
    out: Option<PathBuf>,
    jobs: usize,
    tol: Option<f64>,
) -> Result<(), CliError> {
    let scale = effective_tol(tol)?;
    if jobs == 0 {
        return Err(CliError::Validation("--jobs must be at least 1".to_string()));
    }
    let batch = scenarios.len() > 1;

    let queue: Mutex<Vec<(usize, PathBuf)>> =
        Mutex::new(scenarios.iter().cloned().enumerate().rev().collect());
    let outcomes: Mutex<Vec<JobOutcome>> = Mutex::new(Vec::new());
    let workers = jobs.min(scenarios.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let next = queue.lock().expect("queue lock").pop();
                let Some((index, path)) = next else { break };
                let result = run_one(&path, out.as_ref(), batch, scale);
                outcomes.lock().expect("outcomes lock").push(JobOutcome { index, path, result });
            });
        }
    });

    let mut outcomes = outcomes.into_inner().expect("threads joined");
    outcomes.sort_by_key(|o| o.index);
    let mut worst: Option<CliError> = None;
    for outcome in outcomes {
        match outcome.result {
            Ok((report, out_dir, wall_ms)) => {
                println!(
                    "{}: ok, {} artifact(s) in {}",
                    outcome.path.display(),
                    report.artifacts.len(),
                    out_dir.display()
                );
                eprintln!("{}: wall time {wall_ms} ms", outcome.path.display());
            }
            Err(e) => {
                eprintln!("{}: error: {}", outcome.path.display(), e.message());
                let keep_new = match (&worst, &e) {
                    (None, _) => true,
                    (Some(CliError::Solver(_)), CliError::Validation(_)) => true,
                    _ => false,
                };
                if keep_new {
                    worst = Some(e);
                }
            }
        }
    }
    match worst {
        None => Ok(()),
        // per-scenario messages were already printed; signal only the code
        Some(CliError::Validation(_)) => Err(CliError::Validation(String::new())),
        Some(CliError::Solver(_)) => Err(CliError::Solver(String::new())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run { scenarios, out, jobs, tol } => cmd_run(scenarios, out, jobs, tol),
        Cmd::Verify { tol } => cmd_verify(tol),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // batch errors were already reported per scenario
            if !e.message().is_empty() {
                eprintln!("error: {}", e.message());
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
