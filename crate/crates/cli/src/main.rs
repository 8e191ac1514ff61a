use anyhow::{bail, Context, Result};
use calderon_lab::experiments::commands;
use calderon_lab::experiments::{load_config, ExperimentConfig, SweepMode};
use calderon_lab::probes::PeelingVariant;
use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "calderon",
    version,
    about = "Forward, Green-function and stability experiments for layered admittivities"
)]
struct Cli {
    /// Overrides the seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Loads and validates a configuration.
    Validate { config: PathBuf },
    /// Solves the forward problem of both admittivities for bump data on Σ.
    Solve { config: PathBuf },
    /// Computes the Green function of the first admittivity.
    Green {
        config: PathBuf,
        /// Pole as x,y,z.
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        pole: Vec<f64>,
    },
    /// DtN matrices of the pair and the norm of their difference.
    DtnNorm { config: PathBuf },
    /// Misfit functional over the configured pole grids.
    Misfit { config: PathBuf },
    /// Runs a sweep over pairs and mesh levels.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        mode: Mode,
    },
    /// Peeling split at an interface along a ladder of probe offsets.
    Probe {
        config: PathBuf,
        #[arg(long)]
        interface: usize,
        /// Comma-separated offsets.
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        ladder: Vec<f64>,
        #[arg(long, default_value = "value")]
        variant: Variant,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Lipschitz,
    Misfit,
    Asymptotic,
    Peeling,
    ThreeSphere,
}

impl From<Mode> for SweepMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Lipschitz => SweepMode::Lipschitz,
            Mode::Misfit => SweepMode::Misfit,
            Mode::Asymptotic => SweepMode::Asymptotic,
            Mode::Peeling => SweepMode::Peeling,
            Mode::ThreeSphere => SweepMode::ThreeSphere,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Value,
    MixedNn,
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = load_config(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let record = match &cli.command {
        Command::Validate { config } => commands::validate(&load(config, cli.seed)?)?,
        Command::Solve { config } => commands::solve(&load(config, cli.seed)?)?.record,
        Command::Green { config, pole } => {
            let [x, y, z] = pole[..] else { bail!("--pole takes three comma-separated coordinates") };
            commands::green(&load(config, cli.seed)?, [x, y, z])?.record
        }
        Command::DtnNorm { config } => commands::dtn_norm(&load(config, cli.seed)?)?.record,
        Command::Misfit { config } => commands::run_misfit(&load(config, cli.seed)?)?.record,
        Command::Sweep { config, mode } => commands::sweep(&load(config, cli.seed)?, (*mode).into())?.record,
        Command::Probe { config, interface, ladder, variant } => {
            let v = match variant {
                Variant::Value => PeelingVariant::Value,
                Variant::MixedNn => PeelingVariant::MixedNn,
            };
            commands::probe(&load(config, cli.seed)?, *interface, ladder, v)?.record
        }
    };
    println!("{record:#}");
    Ok(())
}
