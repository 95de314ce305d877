//! Command-line front end: simulate θ curves, scan near-level fits, build
//! smoothed profiles, solve the variational problem and run verification
//! suites. Every run writes its artifacts plus a JSON record embedding the
//! exact configuration, seed and tool version.

pub mod commands;
pub mod grid;
pub mod verify;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};

pub use commands::{FitArgs, ScanArgs, ShapeArg, SimulateArgs, SolveArgs};
pub use grid::{parse_grid, parse_radii};
pub use verify::{Budget, Suite, Verdict, VerifyArgs};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "INTERLACE_OUT";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_GATE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "interlace",
    version,
    about = "Random interlacements, vacant-set percolation and the constrained energy solver"
)]
pub struct Cli {
    /// Output directory; defaults to $INTERLACE_OUT, then the current directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample coupled soups and write the θ curve and near-level scan.
    Simulate(SimulateArgs),
    /// Near-level scan and stretched-exponential fits at several levels.
    Scan(ScanArgs),
    /// Build a smoothed profile from a θ curve or a toy base.
    Fit(FitArgs),
    /// Solve the constrained minimization at one or more targets.
    Solve(SolveArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
}

/// How a command ended, beyond hard errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    /// A statistical or property gate failed.
    Gate(Vec<String>),
    /// A verification criterion failed.
    Failed(Vec<String>),
}

/// Embedded in every JSON artifact.
#[derive(Debug, Serialize)]
pub struct RunRecord<'a, C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a C,
    /// Files written by the run, relative to the output directory.
    pub outputs: Vec<String>,
    pub result: R,
}

impl<'a, C: Serialize, R: Serialize> RunRecord<'a, C, R> {
    pub fn new(command: &'a str, config: &'a C, outputs: Vec<String>, result: R) -> Self {
        RunRecord {
            tool: "interlace",
            version: VERSION,
            command,
            config,
            outputs,
            result,
        }
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        std::fs::write(dir.join(name), s)?;
        Ok(())
    }
}

/// `--out`, else `$INTERLACE_OUT`, else `.`; created if missing.
pub fn output_dir(flag: Option<&Path>) -> Result<PathBuf> {
    let dir = match flag {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Runs a parsed command in `dir` on the current rayon pool.
pub fn dispatch(command: &Command, dir: &Path) -> Result<Outcome> {
    match command {
        Command::Simulate(a) => commands::simulate(a, dir),
        Command::Scan(a) => commands::scan(a, dir),
        Command::Fit(a) => commands::fit(a, dir),
        Command::Solve(a) => commands::solve(a, dir),
        Command::Verify(a) => verify::run(a, dir),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) => EXIT_USAGE,
        _ => EXIT_VERIFY,
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let go = || -> Result<Outcome> {
        let dir = output_dir(cli.out.as_deref())?;
        match cli.threads {
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::InvalidArgument(e.to_string()))?;
                pool.install(|| dispatch(&cli.command, &dir))
            }
            None => dispatch(&cli.command, &dir),
        }
    };
    match go() {
        Ok(Outcome::Ok) => EXIT_OK,
        Ok(Outcome::Gate(msgs)) => {
            for m in msgs {
                eprintln!("gate failed: {m}");
            }
            EXIT_GATE
        }
        Ok(Outcome::Failed(msgs)) => {
            for m in msgs {
                eprintln!("failed: {m}");
            }
            EXIT_VERIFY
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
