mod commands;
mod error;
mod run_config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::error::CliError;
use crate::run_config::RunConfig;

#[derive(Parser)]
#[command(name = "arithclass", version, about = "Approximation profiles, arithmetic classes and density checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: $ARITH_OUT_DIR, else ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// σ(α)_k for k = 0..cutoff.
    Sigma,
    /// Class membership verdict up to the cutoff.
    Member,
    /// Density lower bounds of the preimage of the derived class.
    Density,
    /// Shortest vectors along the diagonal flow, with lemma checks.
    Flow,
    /// Volume-bound and counting checks.
    Verify,
    /// Picture of a ball and its candidate bands.
    PlotBands,
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("ARITH_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out)?;
    let outcome = match cli.command {
        Command::Sigma => commands::sigma(&cfg, &out),
        Command::Member => commands::member(&cfg, &out),
        Command::Density => commands::density(&cfg, &out),
        Command::Flow => commands::flow(&cfg, &out),
        Command::Verify => commands::verify(&cfg, &out),
        Command::PlotBands => commands::plot_bands(&cfg, &out),
    }?;
    for f in &outcome.files {
        println!("{}", f.display());
    }
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(4),
            };
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
