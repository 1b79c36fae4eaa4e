//! `numetric`: ν-gap distances, stability margins and robust stabilization
//! certificates from plant files.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use numetric::config::{validate_grid_size, DEFAULT_GRID, MAX_GRID_POINTS};
use numetric::{Config, ToleranceProfile};

/// Exit statuses.
pub mod exit {
    pub const OK: u8 = 0;
    /// Not certified, not stabilizing, or an axiom failed.
    pub const NEGATIVE: u8 = 1;
    /// Unreadable, malformed or invalid input, or bad arguments.
    pub const INPUT: u8 = 2;
    /// An index could not be resolved on the available grid.
    pub const UNRESOLVED: u8 = 3;
    pub const OTHER: u8 = 4;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "numetric", version, about = "nu-gap metric and robust stability margins")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Grid points (power of two in [16, 2^20]).
    #[arg(long, global = true, env = "NUMETRIC_GRID")]
    pub grid: Option<usize>,
    /// Tolerance profile: default, strict or loose.
    #[arg(long = "tol", global = true, default_value = "default")]
    pub tol: String,
    /// Largest grid the index computations may refine to.
    #[arg(long, global = true)]
    pub refinement_limit: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    pub format: Format,
    /// Evaluate grid points on all cores.
    #[arg(long, global = true)]
    pub parallel: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// nu-gap distance between two plants.
    Dist { plant1: PathBuf, plant2: PathBuf },
    /// Stability margin of a plant and a controller.
    Margin { plant: PathBuf, controller: PathBuf },
    /// Whether a controller stabilizes a plant.
    Stabilizes { plant: PathBuf, controller: PathBuf },
    /// Robust stabilization certificate for a perturbed plant.
    Certify {
        nominal: PathBuf,
        controller: PathBuf,
        plant: PathBuf,
    },
    /// Metric axioms over plant files or seeded random plants.
    Axioms(AxiomsArgs),
    /// Distance and margin along the family k * BASE.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct AxiomsArgs {
    /// Plant files, or directories of `*.json` plant files.
    pub paths: Vec<PathBuf>,
    /// Use this many seeded random plants instead of files.
    #[arg(long, conflicts_with = "paths")]
    pub random: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub outputs: usize,
    #[arg(long, default_value_t = 1)]
    pub inputs: usize,
    /// Random plant orders range over 0..=max-order.
    #[arg(long, default_value_t = 4)]
    pub max_order: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Nominal plant the distances are measured from.
    pub nominal: PathBuf,
    /// Plant scaled by each parameter (default: the scalar constant 1).
    #[arg(long)]
    pub base: Option<PathBuf>,
    /// Controller for the margin column (default: zero).
    #[arg(long)]
    pub controller: Option<PathBuf>,
    /// Comma-separated parameter values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub values: Vec<f64>,
    /// Evenly spaced parameters from `--from` to `--to`.
    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
}

impl Global {
    pub fn config(&self) -> Result<Config, String> {
        let mut cfg = Config {
            grid_size: self.grid.unwrap_or(DEFAULT_GRID),
            ..Config::default()
        };
        validate_grid_size(cfg.grid_size).map_err(|e| e.to_string())?;
        cfg.refinement_limit = self.refinement_limit.unwrap_or(MAX_GRID_POINTS);
        cfg.tolerances = ToleranceProfile::by_name(&self.tol)
            .ok_or_else(|| format!("unknown tolerance profile '{}' (default, strict, loose)", self.tol))?;
        cfg.parallel = self.parallel;
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::INPUT } else { exit::OK });
        }
    };
    ExitCode::from(commands::run(&cli))
}
