//! Coverage study of the endpoint confidence intervals.

use std::fmt::Write as _;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dgp::{dgp_sample_with, DgpNuisance, DgpSpec};
use super::oracle::{population_oracle, OracleTarget, OracleValue};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::first_stage::{
    fit_cross_fitted, make_folds, EmptyCellPolicy, FirstStageMethod, FoldAssignment, Nuisance,
    NuisanceFit, NuisanceNeeds,
};
use crate::identification::{AssumptionSpec, Regime};
use crate::inference::{
    estimate_endpoints, normal_quantile, AdjustmentMode, MomentKind, Side, SideEstimate,
};
use crate::policy::{policy_indicators, PolicyPair};
use crate::SPEC_VERSION;

/// How the nuisances entering the moment are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fitting {
    /// Fit on the full sample and evaluated on the same rows.
    NoCrossfit,
    /// Cross-fitted with the configured number of folds.
    Crossfit,
    /// The exact nuisances of the data-generating process.
    TrueNuisance,
}

impl Fitting {
    fn label(self) -> &'static str {
        match self {
            Fitting::NoCrossfit => "without cross-fitting",
            Fitting::Crossfit => "with cross-fitting",
            Fitting::TrueNuisance => "true nuisance values",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Variant {
    pub moment: MomentKind,
    pub fitting: Fitting,
}

impl Variant {
    /// All six moment/fitting combinations.
    pub fn all() -> Vec<Variant> {
        let mut out = Vec::new();
        for fitting in [Fitting::NoCrossfit, Fitting::Crossfit, Fitting::TrueNuisance] {
            for moment in [MomentKind::Original, MomentKind::Debiased] {
                out.push(Variant { moment, fitting });
            }
        }
        out
    }
}

/// Settings of a coverage run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub ns: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub variants: Vec<Variant>,
    pub regime: Regime,
    pub side: Side,
    pub alpha: f64,
    /// Folds for the cross-fitted variants.
    pub k: usize,
    pub adjustment_mode: AdjustmentMode,
    pub empty_cell_policy: EmptyCellPolicy,
    /// Largest tolerated share of failed replications per cell.
    pub max_failure_rate: f64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            ns: vec![100, 1000, 5000, 10000],
            reps: 1000,
            seed: 1,
            variants: Variant::all(),
            regime: Regime::WorstCase,
            side: Side::Lower,
            alpha: 0.95,
            k: 2,
            adjustment_mode: AdjustmentMode::default(),
            empty_cell_policy: EmptyCellPolicy::Error,
            max_failure_rate: 0.01,
        }
    }
}

/// Coverage and average length for one sample size and variant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageCell {
    pub n: usize,
    pub moment: MomentKind,
    pub fitting: Fitting,
    pub coverage: f64,
    pub average_length: f64,
    pub successes: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub spec_version: &'static str,
    pub regime: Regime,
    pub side: Side,
    /// Population value of the targeted endpoint.
    pub target: f64,
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
    pub rng: &'static str,
    pub cells: Vec<CoverageCell>,
}

/// How per-replication generators are derived.
pub const RNG_DESCRIPTION: &str =
    "ChaCha20 seeded with the master seed; replication r at sample-size index j uses stream \
     j * 2^32 + r; fold seed is the next u64 after the sample";

/// Stream of replication `rep` at sample-size index `n_index`.
pub fn replication_rng(seed: u64, n_index: usize, rep: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(((n_index as u64) << 32) | rep as u64);
    rng
}

impl CoverageReport {
    pub fn cell(&self, n: usize, moment: MomentKind, fitting: Fitting) -> Option<&CoverageCell> {
        self.cells
            .iter()
            .find(|c| c.n == n && c.moment == moment && c.fitting == fitting)
    }

    /// Aligned text table: one block per fitting, one row per sample
    /// size, original and debiased columns side by side.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:.0}% confidence interval for the {} {} bound (population value {:.2})",
            self.alpha * 100.0,
            self.regime,
            match self.side {
                Side::Lower => "lower",
                Side::Upper => "upper",
            },
            self.target
        );
        let _ = writeln!(
            out,
            "{:>11} | {:>24} | {:>24}",
            "", "original moment", "debiased moment"
        );
        let _ = writeln!(
            out,
            "{:>11} | {:>8} {:>15} | {:>8} {:>15}",
            "sample size", "coverage", "average length", "coverage", "average length"
        );
        let mut fittings: Vec<Fitting> = Vec::new();
        for c in &self.cells {
            if !fittings.contains(&c.fitting) {
                fittings.push(c.fitting);
            }
        }
        let mut ns: Vec<usize> = Vec::new();
        for c in &self.cells {
            if !ns.contains(&c.n) {
                ns.push(c.n);
            }
        }
        let fmt_cell = |c: Option<&CoverageCell>| match c {
            Some(c) => format!("{:>8.3} {:>15.0}", c.coverage, c.average_length),
            None => format!("{:>8} {:>15}", "-", "-"),
        };
        for f in fittings {
            let _ = writeln!(out, "{}", f.label());
            for &n in &ns {
                let _ = writeln!(
                    out,
                    "{:>11} | {} | {}",
                    n,
                    fmt_cell(self.cell(n, MomentKind::Original, f)),
                    fmt_cell(self.cell(n, MomentKind::Debiased, f)),
                );
            }
        }
        let failures: usize = self.cells.iter().map(|c| c.failures).sum();
        let _ = writeln!(
            out,
            "replications: {}, seed: {}, failed replications: {}",
            self.reps, self.seed, failures
        );
        out
    }
}

fn target_for(regime: Regime) -> Result<OracleTarget> {
    match regime {
        Regime::WorstCase => Ok(OracleTarget::WorstCase),
        Regime::Mtr => Ok(OracleTarget::Mtr),
        Regime::IvWorstCase => Ok(OracleTarget::IvWorstCase),
        Regime::IvMtr => Ok(OracleTarget::IvMtr),
        _ => Err(Error::argument(
            "simulation",
            format!("coverage runs support worst-case, mtr, iv-worst-case and iv-mtr, not {regime}"),
        )),
    }
}

/// Outcome of one variant in one replication: `(covered, length)`.
type Outcome = Option<(bool, f64)>;

struct Replication<'a> {
    data: Dataset,
    fold_seed: u64,
    config: &'a MonteCarloConfig,
    spec: &'a AssumptionSpec,
    pair: &'a PolicyPair,
    truth: &'a DgpNuisance,
}

impl Replication<'_> {
    fn side(&self, est: &crate::inference::EndpointEstimates) -> SideEstimate {
        match self.config.side {
            Side::Lower => est.lower,
            Side::Upper => est.upper,
        }
    }

    fn estimate<F: Nuisance>(
        &self,
        fits: &[F],
        folds: &FoldAssignment,
        moment: MomentKind,
    ) -> Result<SideEstimate> {
        let ind = policy_indicators(self.pair, &self.data)?;
        let est = estimate_endpoints(
            &self.data,
            &ind,
            self.spec,
            fits,
            folds,
            self.config.adjustment_mode,
            moment,
        )?;
        Ok(self.side(&est))
    }

    fn fitted(&self, folds: &FoldAssignment) -> Result<Vec<NuisanceFit>> {
        let needs = NuisanceNeeds {
            instrument: self.spec.regime.uses_instrument(),
            instrument_share: self.spec.regime.is_iv()
                && self.config.adjustment_mode == AdjustmentMode::InstrumentWeighted,
        };
        fit_cross_fitted(
            &self.data,
            folds,
            FirstStageMethod::CellMeans,
            self.config.empty_cell_policy,
            needs,
        )
    }

    fn run(&self, target: f64, critical: f64) -> Vec<Outcome> {
        let n = self.data.len();
        let single = FoldAssignment::single(n);
        let full_fit = lazy(|| self.fitted(&single));
        let cross = lazy(|| {
            let folds = make_folds(n, self.config.k, self.fold_seed)?;
            let fits = self.fitted(&folds)?;
            Ok((folds, fits))
        });
        self.config
            .variants
            .iter()
            .map(|v| {
                let est = match v.fitting {
                    Fitting::NoCrossfit => full_fit
                        .get()
                        .and_then(|fits| self.estimate(fits, &single, v.moment)),
                    Fitting::Crossfit => cross
                        .get()
                        .and_then(|(folds, fits)| self.estimate(fits, folds, v.moment)),
                    Fitting::TrueNuisance => {
                        self.estimate(std::slice::from_ref(self.truth), &single, v.moment)
                    }
                };
                est.ok().map(|e| {
                    let [lo, hi] = e.interval(critical);
                    (lo <= target && target <= hi, hi - lo)
                })
            })
            .collect()
    }
}

/// Memoized fallible computation.
struct Lazy<T, F: Fn() -> Result<T>> {
    cell: std::cell::OnceCell<std::result::Result<T, Error>>,
    make: F,
}

fn lazy<T, F: Fn() -> Result<T>>(make: F) -> Lazy<T, F> {
    Lazy {
        cell: std::cell::OnceCell::new(),
        make,
    }
}

impl<T, F: Fn() -> Result<T>> Lazy<T, F> {
    fn get(&self) -> Result<&T> {
        self.cell
            .get_or_init(|| (self.make)())
            .as_ref()
            .map_err(Error::duplicate)
    }
}

/// Runs the coverage study.
///
/// Replications run in parallel; each owns a generator derived from
/// `(seed, sample-size index, replication index)` and results are reduced
/// in replication order, so the report does not depend on the number of
/// worker threads. A replication whose first stage fails for a variant is
/// excluded from that variant's cell and counted; a failure share above
/// `max_failure_rate` in any cell is an error.
pub fn monte_carlo(spec: &DgpSpec, pair: &PolicyPair, config: &MonteCarloConfig) -> Result<CoverageReport> {
    if config.reps == 0 || config.ns.is_empty() || config.variants.is_empty() {
        return Err(Error::argument(
            "simulation",
            "coverage runs need at least one replication, sample size and variant",
        ));
    }
    if config.ns.iter().any(|&n| n < config.k.max(2)) {
        return Err(Error::argument(
            "simulation",
            format!("every sample size must be at least the fold count {}", config.k),
        ));
    }
    let assumption = if config.regime.is_iv() {
        AssumptionSpec::binary_iv(config.regime)?
    } else {
        AssumptionSpec::new(config.regime)?
    };
    let target = match population_oracle(spec, pair, target_for(config.regime)?)? {
        OracleValue::Bounds { beta_l, beta_u } => match config.side {
            Side::Lower => beta_l,
            Side::Upper => beta_u,
        },
        OracleValue::Gain { .. } => unreachable!("bound targets return bounds"),
    };
    let critical = normal_quantile(config.alpha)?;
    let truth = DgpNuisance::new(spec)?;
    let mut cells = Vec::new();
    for (j, &n) in config.ns.iter().enumerate() {
        let outcomes: Vec<Vec<Outcome>> = (0..config.reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = replication_rng(config.seed, j, r);
                let data = dgp_sample_with(spec, n, &mut rng)?;
                let fold_seed = rng.next_u64();
                let rep = Replication {
                    data,
                    fold_seed,
                    config,
                    spec: &assumption,
                    pair,
                    truth: &truth,
                };
                Ok(rep.run(target, critical))
            })
            .collect::<Result<_>>()?;
        for (v_idx, v) in config.variants.iter().enumerate() {
            let mut covered = 0usize;
            let mut length = 0.0;
            let mut successes = 0usize;
            for rep in &outcomes {
                if let Some((c, l)) = rep[v_idx] {
                    successes += 1;
                    covered += c as usize;
                    length += l;
                }
            }
            let failures = config.reps - successes;
            if failures as f64 > config.max_failure_rate * config.reps as f64 {
                return Err(Error::numerical(
                    "simulation",
                    format!(
                        "{failures} of {} replications failed at n = {n} for {:?}/{:?}, above the \
                         tolerated share {}",
                        config.reps, v.moment, v.fitting, config.max_failure_rate
                    ),
                ));
            }
            cells.push(CoverageCell {
                n,
                moment: v.moment,
                fitting: v.fitting,
                coverage: covered as f64 / successes as f64,
                average_length: length / successes as f64,
                successes,
                failures,
            });
        }
    }
    Ok(CoverageReport {
        spec_version: SPEC_VERSION,
        regime: config.regime,
        side: config.side,
        target,
        alpha: config.alpha,
        reps: config.reps,
        seed: config.seed,
        rng: RNG_DESCRIPTION,
        cells,
    })
}
