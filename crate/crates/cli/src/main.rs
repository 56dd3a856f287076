//! `tmqi`: command-line driver for the temporal-mode toolkit.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;
use tmqi::fusion::GrowthStrategy;
use tmqi::qkd::Eve;

use config::{Format, RunConfig};
use error::CliError;
use output::{Manifest, OutputSet};

#[derive(Debug, Parser)]
#[command(name = "tmqi", version, about = "Temporal-mode quantum information toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Format of tabular outputs.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Export Hermite-Gaussian (or MUB superposition) mode curves.
    Modes,
    /// Build a PDC joint spectral amplitude and its Schmidt decomposition.
    Decompose {
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        n_points: Option<usize>,
    },
    /// Build one pulse-gate operator and optionally apply it.
    Qpg,
    /// Compile named gates (and random unitaries) and check them.
    Gates {
        #[arg(long)]
        random: Option<usize>,
    },
    /// Simulate and invert a tomography plan.
    Tomo {
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        shots: Option<u64>,
    },
    /// Run prepare-and-measure QKD rounds.
    Qkd {
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        bases: Option<usize>,
        #[arg(long)]
        rounds: Option<u64>,
        /// `none` or `intercept-resend`.
        #[arg(long)]
        eve: Option<Eve>,
        /// Write the per-round CSV log.
        #[arg(long)]
        log: bool,
    },
    /// Fusion outcome distribution for one input state.
    Fuse,
    /// Monte-Carlo growth of linear cluster states.
    Cluster {
        #[arg(long)]
        target_n: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        /// `recycle` or `restart`.
        #[arg(long)]
        strategy: Option<GrowthStrategy>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Modes => "modes",
            Self::Decompose { .. } => "decompose",
            Self::Qpg => "qpg",
            Self::Gates { .. } => "gates",
            Self::Tomo { .. } => "tomo",
            Self::Qkd { .. } => "qkd",
            Self::Fuse => "fuse",
            Self::Cluster { .. } => "cluster",
        }
    }
}

fn resolved<T: Serialize>(cfg: &T) -> Result<Value, CliError> {
    serde_json::to_value(cfg).map_err(|e| CliError::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<Value, CliError> {
    let file = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    let format = cli.format.or(file.format).unwrap_or_default();
    let dir = cli.out.clone().or(file.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let mut out = OutputSet::create(&dir, format)?;
    let start = Instant::now();

    let (config, summary) = match cli.command {
        Command::Modes => {
            let cfg = file.modes.unwrap_or_default();
            (resolved(&cfg)?, commands::modes(&cfg, &mut out)?)
        }
        Command::Decompose { order, n_points } => {
            let mut cfg = file.decompose.unwrap_or_default();
            cfg.order = order.unwrap_or(cfg.order);
            cfg.n_points = n_points.unwrap_or(cfg.n_points);
            (resolved(&cfg)?, commands::decompose(&cfg, &mut out)?)
        }
        Command::Qpg => {
            let cfg = file.qpg.unwrap_or_default();
            (resolved(&cfg)?, commands::qpg(&cfg, &mut out)?)
        }
        Command::Gates { random } => {
            let mut cfg = file.gates.unwrap_or_default();
            cfg.random_unitaries = random.unwrap_or(cfg.random_unitaries);
            (resolved(&cfg)?, commands::gates(&cfg, seed, &mut out)?)
        }
        Command::Tomo { dim, shots } => {
            let mut cfg = file.tomo.unwrap_or_default();
            cfg.dim = dim.unwrap_or(cfg.dim);
            cfg.shots = shots.or(cfg.shots);
            (resolved(&cfg)?, commands::tomo(&cfg, seed, &mut out)?)
        }
        Command::Qkd { d, bases, rounds, eve, log } => {
            let mut cfg = file.qkd.unwrap_or_default();
            cfg.d = d.unwrap_or(cfg.d);
            cfg.n_bases = bases.or(cfg.n_bases);
            cfg.rounds = rounds.unwrap_or(cfg.rounds);
            cfg.eve = eve.unwrap_or(cfg.eve);
            cfg.log |= log;
            (resolved(&cfg)?, commands::qkd(&cfg, seed, &mut out)?)
        }
        Command::Fuse => {
            let cfg = file.fuse.unwrap_or_default();
            (resolved(&cfg)?, commands::fuse(&cfg, seed, &mut out)?)
        }
        Command::Cluster { target_n, trials, strategy } => {
            let mut cfg = file.cluster.unwrap_or_default();
            cfg.target_n = target_n.unwrap_or(cfg.target_n);
            cfg.trials = trials.unwrap_or(cfg.trials);
            cfg.strategy = strategy.unwrap_or(cfg.strategy);
            (resolved(&cfg)?, commands::cluster(&cfg, seed, &mut out)?)
        }
    };

    let manifest = Manifest {
        command: cli.command.name().to_string(),
        seed,
        config,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let path = out.finish(manifest)?;
    Ok(serde_json::json!({"manifest": path, "summary": summary}))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let err = CliError::Config(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(report) => {
            println!("{}", serde_json::to_string_pretty(&report).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
