//! Command-line front end: run scenarios and verification suites.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chaplygin::dynamics::integrate;
use chaplygin::scenario::{diagnostics_report, write_report_json, write_trajectory_csv, Scenario};
use chaplygin::verify::{run_suite, CheckOp, SuiteReport, SUITES};
use chaplygin::Error;

/// Environment variable overriding the output directory.
const OUT_ENV: &str = "CHAPLYGIN_OUT";

#[derive(Parser)]
#[command(
    name = "chaplygin",
    version,
    about = "n-dimensional rolling ball: simulations and verification suites"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate a scenario file and write trajectory.csv + report.json.
    Run {
        /// Path to a TOML scenario file.
        scenario: PathBuf,
        /// Output directory (default: $CHAPLYGIN_OUT or the current dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite and print one line per check.
    Verify {
        /// One of: algebra, forms, truncation, hamiltonization, oracle, all.
        suite: String,
        /// Dimensions to test, e.g. --n 3,4.
        #[arg(long, value_delimiter = ',', default_values_t = [3usize, 4])]
        n: Vec<usize>,
        /// Seed for the randomized parts of the suite.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// If set, also write the suite report as JSON into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::Run { scenario, out } => cmd_run(&scenario, out_dir(out)),
        Cmd::Verify {
            suite,
            n,
            seed,
            out,
        } => cmd_verify(&suite, &n, seed, out),
    }
}

fn cmd_run(path: &Path, out: PathBuf) -> ExitCode {
    let scenario = match Scenario::load(path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: parse: {e}");
            return ExitCode::from(2);
        }
    };
    let (model, p0, opts) = match scenario.build() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: validation: {e}");
            return ExitCode::from(3);
        }
    };
    let traj = match integrate(&model, &p0, &opts) {
        Ok(t) => t,
        Err(e @ (Error::EnergyGuard { .. } | Error::ConstraintGuard { .. })) => {
            eprintln!("error: guard: {e}");
            return ExitCode::from(4);
        }
        Err(e) => {
            eprintln!("error: numerical: {e}");
            return ExitCode::from(4);
        }
    };
    if let Err(e) = std::fs::create_dir_all(&out) {
        eprintln!("error: io: cannot create {}: {e}", out.display());
        return ExitCode::from(3);
    }
    let write = || -> chaplygin::Result<()> {
        let mut csv = std::io::BufWriter::new(
            std::fs::File::create(out.join("trajectory.csv"))
                .map_err(|e| Error::Scenario(format!("cannot create trajectory.csv: {e}")))?,
        );
        write_trajectory_csv(&model, &traj, &mut csv)?;
        let report = diagnostics_report(&model, &scenario, &traj)?;
        let mut json = std::io::BufWriter::new(
            std::fs::File::create(out.join("report.json"))
                .map_err(|e| Error::Scenario(format!("cannot create report.json: {e}")))?,
        );
        write_report_json(&report, &mut json)?;
        println!(
            "run ok: {} steps, energy drift {:.3e}, momentum drift {:.3e} -> {}",
            report.steps,
            report.energy_drift,
            report.momentum_drift,
            out.display()
        );
        Ok(())
    };
    if let Err(e) = write() {
        eprintln!("error: io: {e}");
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}

fn cmd_verify(suite: &str, ns: &[usize], seed: u64, out: Option<PathBuf>) -> ExitCode {
    if !SUITES.contains(&suite) {
        eprintln!(
            "error: unknown suite `{suite}` (expected one of: {})",
            SUITES.join(", ")
        );
        return ExitCode::from(2);
    }
    let report = match run_suite(suite, ns, seed) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: suite failed to run: {e}");
            return ExitCode::from(1);
        }
    };
    print_report(&report);
    if let Some(dir) = out {
        if let Err(e) = std::fs::create_dir_all(&dir).map_err(|e| e.to_string()).and_then(|_| {
            let text = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
            std::fs::write(dir.join("suite_report.json"), text + "\n").map_err(|e| e.to_string())
        }) {
            eprintln!("error: io: {e}");
            return ExitCode::from(1);
        }
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn print_report(report: &SuiteReport) {
    for c in &report.checks {
        let op = match c.op {
            CheckOp::AtMost => "<=",
            CheckOp::AtLeast => ">=",
        };
        println!(
            "{} {:<38} residual {:>12.3e} {} {:.1e}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.residual,
            op,
            c.threshold
        );
    }
    let failed = report.checks.iter().filter(|c| !c.pass).count();
    println!(
        "suite {}: {} checks, {} failed -> {}",
        report.suite,
        report.checks.len(),
        failed,
        if report.passed() { "PASS" } else { "FAIL" }
    );
}
