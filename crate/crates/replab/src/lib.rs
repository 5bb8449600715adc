//! Command-line front end: corpus ingestion, simulation, curves, entropy
//! tables, verification suites and law fits, written as CSV and JSON.

pub mod commands;
pub mod config;
pub mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_rho, parse_symbols, Mode, ModelSpec, OrderSpec, RunConfig, Suite};

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    ChecksFailed,
}

impl Outcome {
    pub fn exit_code(self) -> ExitCode {
        match self {
            Outcome::Success => ExitCode::SUCCESS,
            Outcome::ChecksFailed => ExitCode::from(1),
        }
    }
}

/// Exit code for usage and configuration errors.
pub const USAGE_EXIT: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "replab",
    version,
    about = "Recurrence and repetition statistics of symbol sequences"
)]
pub struct Cli {
    /// JSON run configuration; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config file and REPLAB_SEED.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Curves and law fits of a text or binary file.
    Analyze(AnalyzeArgs),
    /// Samples a path from a source model and writes it with its curves.
    Simulate(SimulateArgs),
    /// Runs a verification suite and writes report.json.
    Verify(VerifyArgs),
    /// Exact entropy table of a source model.
    Entropy(EntropyArgs),
}

#[derive(Debug, Args, Default)]
pub struct GridArgs {
    /// Indices n of the length curves: dyadic, dyadic:M, a..=b or a list.
    #[arg(long)]
    pub n_grid: Option<String>,
    /// Block lengths k: dyadic, dyadic:M, a..=b or a list.
    #[arg(long)]
    pub k_grid: Option<String>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[command(flatten)]
    pub grids: GridArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model: inline JSON or a shorthand (fair-coin, uniform:4, iid:0.3,0.7,
    /// two-state:0.1,0.2, markov:0.9,0.1;0.2,0.8, cycle:3, constant,
    /// copy:0.3,40).
    #[arg(long)]
    pub model: Option<String>,
    /// Path length.
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub grids: GridArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Option<Suite>,
    #[arg(long)]
    pub model: Option<String>,
    /// Block length for kac and chenmoy.
    #[arg(long)]
    pub k: Option<usize>,
    /// Block as comma-separated symbols; defaults to the modal block.
    #[arg(long)]
    pub block: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub paths: Option<usize>,
    /// Path length.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k_grid: Option<String>,
    /// k_pow_minus_2 or table:k=rho,...
    #[arg(long)]
    pub rho: Option<String>,
    #[arg(long)]
    pub k0: Option<usize>,
    #[arg(long)]
    pub pass_fraction: Option<f64>,
    #[arg(long)]
    pub slack: Option<f64>,
    #[arg(long)]
    pub truncation: Option<u64>,
    #[arg(long)]
    pub limit: Option<u64>,
    /// Debug: moves every theoretical bound by this signed fraction
    /// (negative tightens), for negative controls.
    #[arg(long, allow_hyphen_values = true)]
    pub perturb_bound: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EntropyArgs {
    #[arg(long)]
    pub model: Option<String>,
    /// Comma-separated orders; `inf` for the min-entropy.
    #[arg(long)]
    pub orders: Option<String>,
    #[arg(long)]
    pub k_grid: Option<String>,
    /// Comma-separated conditioning lengths i (0 = unconditional).
    #[arg(long)]
    pub conditioning: Option<String>,
    #[arg(long)]
    pub truncation: Option<u64>,
    #[arg(long)]
    pub limit: Option<u64>,
    /// Display in bits; files stay in nats.
    #[arg(long)]
    pub bits: bool,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

/// Layers config file, environment and flags into one configuration.
pub fn resolve(cli: Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply_env()?;
    set(&mut cfg.seed, cli.seed);
    set(&mut cfg.output, cli.output);
    let model = |m: Option<String>| m.as_deref().map(ModelSpec::parse).transpose();
    match cli.command {
        Command::Analyze(a) => {
            cfg.command = "analyze".into();
            set_opt(&mut cfg.input, a.input);
            set(&mut cfg.mode, a.mode);
            set_opt(&mut cfg.n_grid, a.grids.n_grid);
            set_opt(&mut cfg.k_grid, a.grids.k_grid);
        }
        Command::Simulate(a) => {
            cfg.command = "simulate".into();
            set_opt(&mut cfg.model, model(a.model)?);
            set_opt(&mut cfg.n, a.n);
            set_opt(&mut cfg.n_grid, a.grids.n_grid);
            set_opt(&mut cfg.k_grid, a.grids.k_grid);
        }
        Command::Verify(a) => {
            cfg.command = "verify".into();
            set_opt(&mut cfg.suite, a.suite);
            set_opt(&mut cfg.model, model(a.model)?);
            set_opt(&mut cfg.k, a.k);
            set_opt(&mut cfg.block, a.block.as_deref().map(parse_symbols).transpose()?);
            set_opt(&mut cfg.trials, a.trials);
            set_opt(&mut cfg.paths, a.paths);
            set_opt(&mut cfg.n, a.n);
            set_opt(&mut cfg.k_grid, a.k_grid);
            set(&mut cfg.rho, a.rho.as_deref().map(parse_rho).transpose()?);
            set(&mut cfg.k0, a.k0);
            set(&mut cfg.pass_fraction, a.pass_fraction);
            set(&mut cfg.slack, a.slack);
            set(&mut cfg.truncation, a.truncation);
            set(&mut cfg.enumeration_limit, a.limit);
            set(&mut cfg.perturbation, a.perturb_bound);
        }
        Command::Entropy(a) => {
            cfg.command = "entropy".into();
            set_opt(&mut cfg.model, model(a.model)?);
            set(
                &mut cfg.orders,
                a.orders.map(|o| o.split(',').map(OrderSpec::parse).collect()),
            );
            set_opt(&mut cfg.k_grid, a.k_grid);
            if let Some(c) = a.conditioning {
                cfg.conditioning = c
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse()
                            .map_err(|_| config::config_error(format!("conditioning: cannot parse {t:?}")))
                    })
                    .collect::<anyhow::Result<_>>()?;
            }
            set(&mut cfg.truncation, a.truncation);
            set(&mut cfg.enumeration_limit, a.limit);
            cfg.bits |= a.bits;
        }
    }
    Ok(cfg)
}

pub fn run(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    match cfg.command.as_str() {
        "analyze" => commands::analyze(cfg),
        "simulate" => commands::simulate(cfg),
        "verify" => commands::verify(cfg),
        "entropy" => commands::entropy(cfg),
        other => Err(config::config_error(format!("unknown command {other:?}"))),
    }
}
