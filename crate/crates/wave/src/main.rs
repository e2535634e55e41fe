use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use wave::driver::{self, RunOutcome};
use wave::output::ErrorRecord;
use wave::{CliError, CliResult, RunConfig};
use wave_core::continuation::Stage;

/// Travelling fronts of a reaction-diffusion strip bounded by a line of fast
/// diffusion.
#[derive(Debug, Parser)]
#[command(name = "wave", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StageArg {
    A,
    B,
    C,
}

impl From<StageArg> for Stage {
    fn from(s: StageArg) -> Self {
        match s {
            StageArg::A => Stage::A,
            StageArg::B => Stage::B,
            StageArg::C => Stage::C,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full continuation path from the one-dimensional front.
    Run {
        config: PathBuf,
        /// Last stage to execute, overriding the configuration.
        #[arg(long, value_enum)]
        stop_after: Option<StageArg>,
        /// Run one configuration per value, e.g. `D=1,2,4`, concurrently.
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Continue a path from one of its checkpoints.
    Resume {
        checkpoint: PathBuf,
        config: PathBuf,
        /// Resume even if the configuration hash differs.
        #[arg(long)]
        force: bool,
        #[arg(long, value_enum)]
        stop_after: Option<StageArg>,
    },
    /// Profile slices of a checkpoint as CSV.
    Profile { checkpoint: PathBuf, out: PathBuf },
    /// Scan the boundary symbol on the real axis.
    SymbolScan { config: PathBuf },
    /// One-dimensional shooting only.
    Oned { config: PathBuf },
}

fn load(path: &Path) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    cfg.apply_env();
    Ok(cfg)
}

fn report(outcome: &RunOutcome) {
    for (stage, s) in &outcome.summary.stages {
        println!(
            "stage {stage}: {} records, parameter {} c = {:.12}",
            s.records, s.final_parameter, s.final_c
        );
    }
    println!("artifacts in {}", outcome.dir.display());
}

fn execute(command: Command) -> CliResult<()> {
    match command {
        Command::Run {
            config,
            stop_after,
            sweep,
        } => {
            let cfg = load(&config)?;
            let stop = stop_after.map(Stage::from);
            let Some(spec) = sweep else {
                report(&driver::run(&cfg, stop)?);
                return Ok(());
            };
            let (name, values) = driver::parse_sweep(&spec)?;
            let mut first_error = None;
            for (dir, result) in driver::sweep(&cfg, &name, &values, stop)? {
                match result {
                    Ok(outcome) => report(&outcome),
                    Err(e) => {
                        eprintln!("{}: {e}", dir.display());
                        first_error.get_or_insert(e);
                    }
                }
            }
            first_error.map_or(Ok(()), Err)
        }
        Command::Resume {
            checkpoint,
            config,
            force,
            stop_after,
        } => {
            let cfg = load(&config)?;
            report(&driver::resume(&checkpoint, &cfg, force, stop_after.map(Stage::from))?);
            Ok(())
        }
        Command::Profile { checkpoint, out } => driver::emit_profile(&checkpoint, &out),
        Command::SymbolScan { config } => {
            for r in driver::symbol_scan(&load(&config)?)? {
                println!(
                    "epsilon {}: min |F| = {:.6e} at xi = {} ({})",
                    r.epsilon,
                    r.min_abs,
                    r.argmin,
                    if r.zero_free { "zero-free" } else { "ZERO" }
                );
            }
            Ok(())
        }
        Command::Oned { config } => {
            let wave = driver::oned(&load(&config)?)?;
            println!("c = {:.15}", wave.c);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = ErrorRecord::from(&e);
            eprintln!("{}", serde_json::to_string(&record).expect("error record serialises"));
            exit_code(&e)
        }
    }
}

fn exit_code(e: &CliError) -> ExitCode {
    ExitCode::from(e.exit_code() as u8)
}
