use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dmme::acceptance;
use dmme::scenario::{self, exit, Axis, ScenarioError, MAX_AXES};

/// Driven two-level open-system simulator.
#[derive(Parser)]
#[command(name = "simulate", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and write its CSV, summary and SVG.
    Run {
        /// config file, or the name of a bundled config (dephasing, lz-adiabatic, ...)
        config: String,
        /// exit with status 4 when an oracle check fails
        #[arg(long)]
        check: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a scenario over a grid of numeric overrides.
    Sweep {
        config: String,
        /// `section.key=v1,v2,...`, up to three times
        #[arg(long = "axis")]
        axes: Vec<String>,
        /// worker count (default: available parallelism)
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the acceptance suite.
    Selftest {
        /// also write the bundled scenario artifacts here
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn fail(e: &ScenarioError) -> i32 {
    eprintln!("error: {e}");
    e.exit_code()
}

fn run(config: &str, check: bool, out: &Path) -> i32 {
    let cfg = match scenario::load(config) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let outcome = match scenario::run(&cfg) {
        Ok(o) => o,
        Err(e) => return fail(&e),
    };
    match outcome.write(out) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => return fail(&e),
    }
    print!("{}", outcome.summary());
    if check && !outcome.passed() {
        eprintln!("error: oracle check failed");
        return exit::CHECK_FAILED;
    }
    exit::OK
}

fn sweep(config: &str, axes: &[String], jobs: Option<usize>, out: &Path) -> i32 {
    if axes.len() > MAX_AXES {
        eprintln!("error: at most {MAX_AXES} --axis options");
        return exit::VALIDATION;
    }
    let cfg = match scenario::load(config) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let parsed: Result<Vec<Axis>, _> = axes.iter().map(|a| Axis::parse(a)).collect();
    let parsed = match parsed {
        Ok(a) => a,
        Err(e) => return fail(&e.into()),
    };
    let table = match scenario::sweep(&cfg, &parsed, jobs) {
        Ok(t) => t,
        Err(e) => return fail(&e),
    };
    let name = format!("{}_sweep.csv", cfg.output.stem);
    let csv = table.csv();
    match scenario::write_files(out, &[(name, csv.clone())]) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => return fail(&e),
    }
    print!("{csv}");
    exit::OK
}

fn selftest(out: Option<&Path>) -> i32 {
    let results = acceptance::run_all();
    for r in &results {
        println!("{}", r.line());
    }
    if let Some(dir) = out {
        let files = match acceptance::bundled_artifacts() {
            Ok(f) => f,
            Err(e) => {
                eprintln!("error: {e}");
                return exit::INTEGRATOR;
            }
        };
        if let Err(e) = scenario::write_files(dir, &files) {
            return fail(&e);
        }
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed == 0 {
        println!("selftest: all {} criteria passed", results.len());
        exit::OK
    } else {
        println!("selftest: {failed} of {} criteria failed", results.len());
        exit::CHECK_FAILED
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.cmd {
        Cmd::Run { config, check, out } => run(config, *check, out),
        Cmd::Sweep {
            config,
            axes,
            jobs,
            out,
        } => sweep(config, axes, *jobs, out),
        Cmd::Selftest { out } => selftest(out.as_deref()),
    };
    ExitCode::from(code as u8)
}
