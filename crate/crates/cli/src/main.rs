//! `csnt`: batch front end for the regularized compressible non-Newtonian
//! Stokes solver.
//!
//! Exit codes: 0 ok, 2 configuration, 3 data, 4 solver, 5 diagnostic FAIL.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod diagnose;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use csnt_core::diagnostics::{bmo_cos_value, log_ratio_samples, DiagnosticRow, Fixtures};
use csnt_core::Error;

use config::{ConfigError, Kind, RunConfig};

#[derive(Parser)]
#[command(name = "csnt", version, about = "Regularized compressible non-Newtonian Stokes flow on the torus")]
struct Cli {
    /// Worker threads (default: physical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write manifest, snapshots, series and diagnostics.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the `kind` key of the config.
        #[arg(long, value_enum)]
        kind: Option<Kind>,
        /// Output directory (else `output_dir`, else `$CSNT_OUTDIR`, else `csnt-out`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Shorthand for `run --kind ladder`.
    Ladder {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check snapshots in a directory and write diagnostics.csv next to them.
    Diagnose {
        dir: PathBuf,
        /// Defaults to `manifest.toml` inside the directory.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated subset of checks.
        #[arg(long, value_delimiter = ',')]
        checks: Vec<String>,
        /// Pinned fixture file for `log_inequality_fixture`.
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
    /// Pinned regression fixtures.
    Fixtures {
        #[command(subcommand)]
        action: FixturesAction,
    },
}

#[derive(Subcommand)]
enum FixturesAction {
    /// Recompute the pinned regression constants.
    Regenerate {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Data(String),
    Solver(String),
    Diagnostics(usize),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e.root() {
            Error::MalformedSnapshot { .. } | Error::Io(_) => Failure::Data(e.to_string()),
            Error::InvalidParameter { .. } | Error::InvalidGrid(_) => Failure::Config(e.to_string()),
            _ => Failure::Solver(e.to_string()),
        }
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Data(_) => 3,
            Failure::Solver(_) => 4,
            Failure::Diagnostics(_) => 5,
        }
    }
}

fn output_dir(flag: Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    flag.or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os("CSNT_OUTDIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("csnt-out"))
}

fn report(rows: &[DiagnosticRow]) -> Result<(), Failure> {
    for r in rows {
        println!("{:<8} {:<26} value {:>12.4e}  bound {:>12.4e}", r.verdict, r.name, r.value, r.bound);
    }
    let failed = rows.iter().filter(|r| r.verdict == csnt_core::diagnostics::Verdict::Fail).count();
    if run::any_failed(rows) {
        Err(Failure::Diagnostics(failed))
    } else {
        Ok(())
    }
}

fn do_run(config: &Path, kind: Option<Kind>, out: Option<PathBuf>) -> Result<(), Failure> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(k) = kind {
        cfg.kind = k;
    }
    let out = output_dir(out, &cfg);
    let resolved = cfg.resolve()?;
    let rows = run::execute(&resolved, &out)?;
    println!("wrote {}", out.display());
    report(&rows)
}

fn do_diagnose(
    dir: &Path,
    config: Option<PathBuf>,
    checks: Vec<String>,
    fixtures: Option<PathBuf>,
) -> Result<(), Failure> {
    let path = config.unwrap_or_else(|| dir.join("manifest.toml"));
    let mut cfg = RunConfig::load(&path)?;
    if !checks.is_empty() {
        cfg.diagnostics.checks = checks;
    }
    let resolved = cfg.resolve()?;
    let fixtures = fixtures.or_else(|| Some(Fixtures::default_path()));
    let rows = run::diagnose_dir(dir, &resolved, fixtures)?;
    report(&rows)
}

fn do_fixtures(out: Option<PathBuf>) -> Result<(), Failure> {
    let path = out.unwrap_or_else(Fixtures::default_path);
    let fx = Fixtures::compute()?;
    fx.save(&path)?;
    for s in log_ratio_samples()? {
        println!("{:<10} {:>4} ratio {:.6e}", s.family, s.param, s.ratio);
    }
    println!("bmo(cos x1) = {:.16e}", bmo_cos_value()?);
    println!("wrote {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.unwrap_or_else(num_cpus::get_physical).max(1);
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        eprintln!("error: thread pool: {e}");
        return ExitCode::from(4);
    }
    let result = match cli.command {
        Command::Run { config, kind, out } => do_run(&config, kind, out),
        Command::Ladder { config, out } => do_run(&config, Some(Kind::Ladder), out),
        Command::Diagnose {
            dir,
            config,
            checks,
            fixtures,
        } => do_diagnose(&dir, config, checks, fixtures),
        Command::Fixtures {
            action: FixturesAction::Regenerate { out },
        } => do_fixtures(out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(m) => eprintln!("config error: {m}"),
                Failure::Data(m) => eprintln!("data error: {m}"),
                Failure::Solver(m) => eprintln!("solver error: {m}"),
                Failure::Diagnostics(n) => eprintln!("{n} diagnostic check(s) failed"),
            }
            ExitCode::from(f.code())
        }
    }
}
