//! Thin CLI over the experiment runner:
//!     kpcm <subcommand> [--config <path>] [--seed k] [--out dir]
//!          [--backend exact|float]
//! Flags override the config file. Exit codes: 0 success, 1 usage/config
//! error, 2 acceptance-check failure.

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kpcm::config::{parse_config, ExperimentConfig};
use kpcm::error::CliError;
use kpcm::runner::run_experiment;

#[derive(Parser)]
#[command(
    name = "kpcm",
    about = "KP hierarchy / Calogero-Moser correspondence experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Randomized exact identity checks on the operator algebra.
    AlgebraSelftest(CommonArgs),
    /// Integrate a KP flow and cross-check RK4 against Taylor stepping.
    KpEvolve(CommonArgs),
    /// KP equation residual of the tau-function solution.
    KpResidual(CommonArgs),
    /// Wave operator -> D-lattice -> wave operator round trip.
    SatoRoundtrip(CommonArgs),
    /// Integrate spin Calogero-Moser dynamics and check conservation.
    CmEvolve(CommonArgs),
    /// Compare KP pole motion with Calogero-Moser particle motion.
    CorrespondRational(CommonArgs),
    /// Search for the tau-function calibration constants.
    Calibrate(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<String>,
    /// RNG seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Artifact output directory (overrides the config).
    #[arg(long)]
    out: Option<String>,
    /// Scalar backend: "exact" or "float" (overrides the config).
    #[arg(long)]
    backend: Option<String>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::AlgebraSelftest(_) => "algebra-selftest",
            Command::KpEvolve(_) => "kp-evolve",
            Command::KpResidual(_) => "kp-residual",
            Command::SatoRoundtrip(_) => "sato-roundtrip",
            Command::CmEvolve(_) => "cm-evolve",
            Command::CorrespondRational(_) => "correspond-rational",
            Command::Calibrate(_) => "calibrate",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::AlgebraSelftest(a)
            | Command::KpEvolve(a)
            | Command::KpResidual(a)
            | Command::SatoRoundtrip(a)
            | Command::CmEvolve(a)
            | Command::CorrespondRational(a)
            | Command::Calibrate(a) => a,
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let args = cli.command.args();
    let mut cfg: ExperimentConfig = match &args.config {
        Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    // Flags win over the config file.
    cfg.command = Some(cli.command.name().to_string());
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    if let Some(out) = &args.out {
        cfg.output = Some(kpcm::config::OutputSection {
            dir: Some(out.clone()),
        });
    }
    if args.backend.is_some() {
        cfg.backend = args.backend.clone();
    }
    let resolved = cfg.resolve()?;
    let summary = run_experiment(&resolved)?;
    println!("{}", summary.to_json());
    Ok(summary.exit_status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("kpcm: {e}");
            ExitCode::from(1)
        }
    }
}
