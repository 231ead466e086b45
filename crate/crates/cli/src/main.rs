use std::path::PathBuf;
use std::process::ExitCode;

use anderson_core::msa::GammaExponent;
use anderson_lab::{parse_config_with, run, ExperimentKind, Overrides, RunError, EXIT_CONFIG, EXIT_IO};
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Spectrum,
    Green,
    Wegner,
    Lifshitz,
    MsaScan,
    Decay,
    Dynloc,
    Modulus,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GammaFlag {
    Quarter,
    Eighth,
}

/// Finite-volume experiments on the multi-particle Anderson model.
#[derive(Debug, Parser)]
#[command(name = "anderson-lab", version)]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    command: Command,
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the first Hamiltonian as `matrix.coo`.
    #[arg(long)]
    emit_matrix: bool,
    #[arg(long, value_enum)]
    gamma_exponent: Option<GammaFlag>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let kind = match cli.command {
        Command::Spectrum => ExperimentKind::Spectrum,
        Command::Green => ExperimentKind::Green,
        Command::Wegner => ExperimentKind::Wegner,
        Command::Lifshitz => ExperimentKind::Lifshitz,
        Command::MsaScan => ExperimentKind::MsaScan,
        Command::Decay => ExperimentKind::Decay,
        Command::Dynloc => ExperimentKind::Dynloc,
        Command::Modulus => ExperimentKind::Modulus,
    };
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(EXIT_IO as u8);
        }
    };
    let overrides = Overrides {
        experiment: Some(kind),
        seed: cli.seed,
        trials: cli.trials,
        workers: cli.workers,
        out: cli.out,
        gamma_exponent: cli.gamma_exponent.map(|g| match g {
            GammaFlag::Quarter => GammaExponent::Quarter,
            GammaFlag::Eighth => GammaExponent::Eighth,
        }),
    };
    let config = match parse_config_with(&text, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", cli.config.display());
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    match run(&config, cli.emit_matrix) {
        Ok(artifacts) => {
            print!("{}", artifacts.summary);
            println!("results written to {}", config.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(RunError::exit_code(&e) as u8)
        }
    }
}
