//! Command-line grammar and JSON config files.
//!
//! Every flag has a config-file key of the same name. Values given on the
//! command line take precedence over the file.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::{usage, CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "welfare-bounds",
    version,
    about = "Bounds and confidence intervals for the welfare gain of switching treatment policies"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate welfare-gain bounds from a CSV dataset.
    Estimate(EstimateArgs),
    /// Run a coverage study on the built-in data-generating process.
    Simulate(SimulateArgs),
    /// Compute exact population values of the data-generating process.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Text,
}

fn read_config<T: DeserializeOwned>(path: &PathBuf) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("invalid config {}: {e}", path.display())))
}

macro_rules! prefer_flags {
    ($flags:ident, $file:ident; $($opt:ident),*; $($list:ident),*) => {{
        $( if $flags.$opt.is_none() { $flags.$opt = $file.$opt; } )*
        $( if $flags.$list.is_empty() { $flags.$list = $file.$list; } )*
        $flags
    }};
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct EstimateArgs {
    /// JSON file with any of the options below, keyed by flag name.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// CSV file with a header row.
    #[arg(long)]
    pub data: Option<String>,
    /// Outcome column.
    #[arg(long)]
    pub y: Option<String>,
    /// Binary treatment column.
    #[arg(long)]
    pub d: Option<String>,
    /// Covariate column; repeat for several.
    #[arg(long)]
    pub x: Vec<String>,
    /// Instrument column, required by IV and MIV regimes.
    #[arg(long)]
    pub z: Option<String>,
    /// Status-quo policy, e.g. "education <= 11".
    #[arg(long)]
    pub policy_star: Option<String>,
    /// New policy.
    #[arg(long)]
    pub policy: Option<String>,
    /// worst-case, mtr, iv-worst-case, iv-mtr, miv-worst-case or miv-mtr;
    /// repeat for several.
    #[arg(long)]
    pub regime: Vec<String>,
    /// binary-monotone or general-discrete.
    #[arg(long)]
    pub iv_mode: Option<String>,
    /// Outcome support.
    #[arg(long, num_args = 2, value_names = ["LOWER", "UPPER"], allow_negative_numbers = true)]
    pub support: Option<Vec<f64>>,
    /// Cross-fitting folds; 1 fits and evaluates on the full sample.
    #[arg(long)]
    pub k: Option<usize>,
    /// Fold-assignment seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Confidence level.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// cell-means or polynomial.
    #[arg(long)]
    pub method: Option<String>,
    /// Polynomial degree.
    #[arg(long)]
    pub degree: Option<u32>,
    /// error or zero.
    #[arg(long)]
    pub empty_cell_policy: Option<String>,
    /// instrument-weighted or paper-faithful.
    #[arg(long)]
    pub adjustment_mode: Option<String>,
    /// debiased or original.
    #[arg(long)]
    pub moment: Option<String>,
    /// Replace the instrument by this many quantile bins for MIV regimes.
    #[arg(long)]
    pub miv_bins: Option<usize>,
    #[arg(long)]
    pub output: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads; defaults to WELFARE_BOUNDS_THREADS or all cores.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl EstimateArgs {
    pub fn resolve(mut self) -> Result<Self> {
        let Some(path) = self.config.take() else {
            return Ok(self);
        };
        let file: EstimateArgs = read_config(&path)?;
        Ok(prefer_flags!(self, file;
            data, y, d, z, policy_star, policy, iv_mode, support, k, seed, alpha, method, degree,
            empty_cell_policy, adjustment_mode, moment, miv_bins, output, format, threads;
            x, regime))
    }
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct SimulateArgs {
    /// JSON file with any of the options below, keyed by flag name.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Master seed; required.
    #[arg(long)]
    pub seed: Option<u64>,
    /// "builtin" or a JSON file describing the process.
    #[arg(long)]
    pub dgp: Option<String>,
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ns: Vec<usize>,
    /// Replications per sample size.
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub regime: Option<String>,
    /// lower or upper.
    #[arg(long)]
    pub side: Option<String>,
    #[arg(long)]
    pub policy_star: Option<String>,
    #[arg(long)]
    pub policy: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub adjustment_mode: Option<String>,
    #[arg(long)]
    pub empty_cell_policy: Option<String>,
    /// Largest tolerated share of failed replications per cell.
    #[arg(long)]
    pub max_failure_rate: Option<f64>,
    #[arg(long)]
    pub output: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub threads: Option<usize>,
}

impl SimulateArgs {
    pub fn resolve(mut self) -> Result<Self> {
        let Some(path) = self.config.take() else {
            return Ok(self);
        };
        let file: SimulateArgs = read_config(&path)?;
        Ok(prefer_flags!(self, file;
            seed, dgp, reps, regime, side, policy_star, policy, alpha, k, adjustment_mode,
            empty_cell_policy, max_failure_rate, output, format, threads;
            ns))
    }
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct OracleArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// "builtin" or a JSON file describing the process.
    #[arg(long)]
    pub dgp: Option<String>,
    #[arg(long)]
    pub policy_star: Option<String>,
    #[arg(long)]
    pub policy: Option<String>,
    /// gain, worst-case, mtr, iv-worst-case or iv-mtr.
    #[arg(long)]
    pub regime: Option<String>,
    #[arg(long)]
    pub output: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl OracleArgs {
    pub fn resolve(mut self) -> Result<Self> {
        let Some(path) = self.config.take() else {
            return Ok(self);
        };
        let file: OracleArgs = read_config(&path)?;
        Ok(prefer_flags!(self, file; dgp, policy_star, policy, regime, output, format;))
    }
}
