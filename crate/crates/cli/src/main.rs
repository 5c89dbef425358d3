mod args;
mod render;

use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use log::info;
use serde::Serialize;

use args::{Cli, Command, EstimateArgs, Format, OracleArgs, SimulateArgs};
use welfare_bounds::data::{load_dataset, Schema};
use welfare_bounds::identification::{quantile_bins, AssumptionSpec, IvMode, Regime};
use welfare_bounds::inference::{lr_estimate, EstimationConfig, MomentKind};
use welfare_bounds::policy::PolicyPair;
use welfare_bounds::simulation::{
    monte_carlo, population_oracle, DgpSpec, MonteCarloConfig, OracleTarget, OracleValue,
};
use welfare_bounds::{
    AdjustmentMode, EmptyCellPolicy, ErrorKind, FirstStageConfig, FirstStageMethod, Side, Support,
};

const THREADS_ENV: &str = "WELFARE_BOUNDS_THREADS";
const DEFAULT_SEED: u64 = 1;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(String),
    Core(welfare_bounds::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<welfare_bounds::Error> for CliError {
    fn from(e: welfare_bounds::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Usage => 1,
                ErrorKind::Data => 2,
                ErrorKind::Numerical => 3,
            },
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

/// Parses a kebab-case enum name through its serde representation.
fn parse_name<T: serde::de::DeserializeOwned>(what: &str, value: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(value.to_string()))
        .map_err(|_| usage(format!("unknown {what} '{value}'")))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Estimate(a) => estimate(a.resolve()?),
        Command::Simulate(a) => simulate(a.resolve()?),
        Command::Oracle(a) => oracle(a.resolve()?),
    }
}

fn configure_threads(threads: Option<usize>) -> Result<()> {
    let threads = match threads {
        Some(t) => Some(t),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.parse()
                    .map_err(|_| usage(format!("{THREADS_ENV}='{v}' is not a thread count")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(usage("thread count must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| usage(format!("cannot configure {t} worker threads: {e}")))?;
    }
    Ok(())
}

fn emit<T: Serialize>(value: &T, text: impl FnOnce() -> String, format: Format, output: Option<&str>) -> Result<()> {
    let body = match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(value).expect("output records serialize");
            s.push('\n');
            s
        }
        Format::Text => text(),
    };
    match output {
        Some(path) => fs::write(path, body).map_err(|e| CliError::Io(format!("cannot write {path}: {e}"))),
        None => std::io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| CliError::Io(format!("cannot write output: {e}"))),
    }
}

fn estimate(a: EstimateArgs) -> Result<()> {
    let data_path = a.data.clone().ok_or_else(|| usage("--data is required"))?;
    let y = a.y.clone().ok_or_else(|| usage("--y is required"))?;
    let d = a.d.clone().ok_or_else(|| usage("--d is required"))?;
    if a.x.is_empty() {
        return Err(usage("at least one --x covariate is required"));
    }
    let policy_star = a.policy_star.clone().ok_or_else(|| usage("--policy-star is required"))?;
    let policy = a.policy.clone().ok_or_else(|| usage("--policy is required"))?;
    let support = match a.support.as_deref() {
        Some([lo, hi]) => Support::new(*lo, *hi)?,
        Some(_) => return Err(usage("--support takes exactly two values")),
        None => return Err(usage("--support LOWER UPPER is required")),
    };
    let regimes: Vec<Regime> = if a.regime.is_empty() {
        vec![Regime::WorstCase]
    } else {
        a.regime.iter().map(|r| parse_name("regime", r)).collect::<Result<_>>()?
    };
    if a.z.is_none() {
        if let Some(r) = regimes.iter().find(|r| r.uses_instrument()) {
            return Err(usage(format!("regime {r} requires an instrument column mapping (--z)")));
        }
    }
    let iv_mode: Option<IvMode> = a.iv_mode.as_deref().map(|m| parse_name("iv mode", m)).transpose()?;
    let method = match a.method.as_deref().unwrap_or("cell-means") {
        "cell-means" => {
            if a.degree.is_some() {
                return Err(usage("--degree applies to the polynomial method only"));
            }
            FirstStageMethod::CellMeans
        }
        "polynomial" => FirstStageMethod::Polynomial {
            degree: a.degree.unwrap_or(2),
        },
        other => return Err(usage(format!("unknown first-stage method '{other}'"))),
    };
    let empty_cell_policy: EmptyCellPolicy = a
        .empty_cell_policy
        .as_deref()
        .map(|p| parse_name("empty-cell policy", p))
        .transpose()?
        .unwrap_or_default();
    let adjustment_mode: AdjustmentMode = a
        .adjustment_mode
        .as_deref()
        .map(|m| parse_name("adjustment mode", m))
        .transpose()?
        .unwrap_or_default();
    let moment: MomentKind = a
        .moment
        .as_deref()
        .map(|m| parse_name("moment", m))
        .transpose()?
        .unwrap_or_default();
    let seed = match a.seed {
        Some(s) => s,
        None => {
            info!("no --seed given; fold assignment uses seed {DEFAULT_SEED}");
            DEFAULT_SEED
        }
    };
    let alpha = a.alpha.unwrap_or(0.95);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(usage(format!("--alpha {alpha} must lie strictly between 0 and 1")));
    }
    if a.miv_bins.is_some() && !regimes.iter().any(|r| r.is_miv()) {
        return Err(usage("--miv-bins applies to MIV regimes only"));
    }
    let format = a.format.unwrap_or(Format::Json);
    configure_threads(a.threads)?;

    let x: Vec<&str> = a.x.iter().map(String::as_str).collect();
    let schema = Schema::new(y, d, &x, a.z.as_deref());
    let data = load_dataset(&data_path, &schema, support)?;
    let pair = PolicyPair::parse(&policy_star, &policy)?;
    let config = EstimationConfig {
        first_stage: FirstStageConfig {
            method,
            empty_cell_policy,
            k: a.k.unwrap_or(2),
            seed,
        },
        alpha,
        adjustment_mode,
        moment,
    };
    let mut estimates = Vec::with_capacity(regimes.len());
    for regime in regimes {
        let run_data = match (regime.is_miv(), a.miv_bins) {
            (true, Some(bins)) => {
                let z = data.z().expect("instrument mapped");
                let name = data.z_name().expect("instrument mapped").to_string();
                data.with_instrument(name, quantile_bins(z, bins)?)?
            }
            _ => data.clone(),
        };
        let spec = AssumptionSpec::from_data(regime, iv_mode, &run_data)?;
        let est = lr_estimate(&run_data, &pair, &spec, &config)?;
        for message in &est.diagnostics {
            log::warn!("{regime}: {message}");
        }
        estimates.push(est);
    }
    emit(
        &estimates,
        || render::estimates(&estimates),
        format,
        a.output.as_deref(),
    )
}

fn load_dgp(dgp: Option<&str>) -> Result<DgpSpec> {
    match dgp.unwrap_or("builtin") {
        "builtin" => Ok(DgpSpec::default()),
        path => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {path}: {e}")))?;
            let spec: DgpSpec = serde_json::from_str(&text)
                .map_err(|e| usage(format!("invalid data-generating process in {path}: {e}")))?;
            spec.validate()?;
            Ok(spec)
        }
    }
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let seed = a.seed.ok_or_else(|| usage("simulate requires --seed"))?;
    let spec = load_dgp(a.dgp.as_deref())?;
    let pair = PolicyPair::parse(
        a.policy_star.as_deref().unwrap_or("x <= 11"),
        a.policy.as_deref().unwrap_or("x <= 12"),
    )?;
    let defaults = MonteCarloConfig::default();
    let config = MonteCarloConfig {
        ns: if a.ns.is_empty() { defaults.ns.clone() } else { a.ns.clone() },
        reps: a.reps.unwrap_or(defaults.reps),
        seed,
        variants: defaults.variants.clone(),
        regime: a
            .regime
            .as_deref()
            .map(|r| parse_name("regime", r))
            .transpose()?
            .unwrap_or(defaults.regime),
        side: a
            .side
            .as_deref()
            .map(|s| parse_name::<Side>("side", s))
            .transpose()?
            .unwrap_or(defaults.side),
        alpha: a.alpha.unwrap_or(defaults.alpha),
        k: a.k.unwrap_or(defaults.k),
        adjustment_mode: a
            .adjustment_mode
            .as_deref()
            .map(|m| parse_name("adjustment mode", m))
            .transpose()?
            .unwrap_or(defaults.adjustment_mode),
        empty_cell_policy: a
            .empty_cell_policy
            .as_deref()
            .map(|p| parse_name("empty-cell policy", p))
            .transpose()?
            .unwrap_or(defaults.empty_cell_policy),
        max_failure_rate: a.max_failure_rate.unwrap_or(defaults.max_failure_rate),
    };
    configure_threads(a.threads)?;
    let report = monte_carlo(&spec, &pair, &config)?;
    emit(
        &report,
        || report.to_text(),
        a.format.unwrap_or(Format::Json),
        a.output.as_deref(),
    )
}

#[derive(Debug, Serialize)]
struct OracleRecord {
    spec_version: &'static str,
    target: OracleTarget,
    delta_star: String,
    delta: String,
    #[serde(flatten)]
    value: OracleValue,
}

fn oracle(a: OracleArgs) -> Result<()> {
    let spec = load_dgp(a.dgp.as_deref())?;
    let target: OracleTarget = a
        .regime
        .as_deref()
        .unwrap_or("gain")
        .parse()
        .map_err(|_| usage(format!("unknown oracle target '{}'", a.regime.as_deref().unwrap_or(""))))?;
    let pair = PolicyPair::parse(
        a.policy_star.as_deref().unwrap_or("x <= 11"),
        a.policy.as_deref().unwrap_or("x <= 12"),
    )?;
    let value = population_oracle(&spec, &pair, target)?;
    let record = OracleRecord {
        spec_version: welfare_bounds::SPEC_VERSION,
        target,
        delta_star: pair.delta_star.to_string(),
        delta: pair.delta.to_string(),
        value,
    };
    emit(
        &record,
        || render::oracle(&record.target, &record.value),
        a.format.unwrap_or(Format::Json),
        a.output.as_deref(),
    )
}
