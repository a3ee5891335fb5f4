//! `fracvar`: run configuration, solves and deterministic CSV output.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{parse_file, parse_overrides, ConfigError, Mode, RunConfig};

#[derive(Parser)]
#[command(name = "fracvar", version, about = "Nonlocal variational problems on a 1D mesh")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides as `--key value` pairs, applied after the file.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Mountain-pass solve of the problem with source.
    SolveP2(RunArgs),
    /// Source-to-zero continuation on the unit L^q sphere.
    Homotopy(RunArgs),
    /// Energy minimization on the unit L^q sphere.
    SphereMin(RunArgs),
    /// Capacity upper bounds for the configured sets.
    Capacity(RunArgs),
    /// Mountain-pass geometry: λ₁, r₀, F profile and the sampled sphere minimum.
    Geometry(RunArgs),
    /// Bound ratios of Φ and K on the default sample sets.
    CheckKernel(RunArgs),
    /// Dry-run constraint report.
    Validate(RunArgs),
}

fn load(args: &RunArgs) -> Result<RunConfig, run::RunError> {
    let file = match &args.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| run::RunError::Io(format!("{}: {e}", path.display())))?;
            parse_file(&text).map_err(|e| run::RunError::Config(e.0))?
        }
        None => Vec::new(),
    };
    let overrides = parse_overrides(&args.overrides).map_err(|e: ConfigError| run::RunError::Config(e.0))?;
    RunConfig::resolve(&file, &overrides).map_err(|e| run::RunError::Config(e.0))
}

fn init_threads() -> Result<(), run::RunError> {
    let Ok(v) = std::env::var("FRACVAR_THREADS") else { return Ok(()) };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| run::RunError::Config(format!("FRACVAR_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| run::RunError::Config(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (mode, args) = match &cli.command {
        Command::SolveP2(a) => (Mode::SolveP2, a),
        Command::Homotopy(a) => (Mode::Homotopy, a),
        Command::SphereMin(a) => (Mode::SphereMin, a),
        Command::Capacity(a) => (Mode::Capacity, a),
        Command::Geometry(a) => (Mode::Geometry, a),
        Command::CheckKernel(a) => (Mode::CheckKernel, a),
        Command::Validate(a) => (Mode::Validate, a),
    };
    let result = init_threads().and_then(|_| load(args)).and_then(|cfg| run::run(mode, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
