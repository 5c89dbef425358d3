//! Cross-fitting folds and nuisance estimators.
//!
//! A nuisance fit supplies the conditional means `eta(d, x)`, the
//! propensity `p(x)` and, for instrument-based regimes, their
//! instrument-conditional versions together with the instrument shares
//! `P(Z = z | X = x)`.

mod cell_means;
mod folds;
mod logistic;
mod polynomial;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

pub use cell_means::{fit_cell_means, CellMeans, EmptyCellPolicy};
pub use folds::{make_folds, FoldAssignment};
pub use logistic::{fit_logistic, LogisticModel};
pub use polynomial::{fit_outcome_regression, OutcomeRegression, PolynomialBasis};

fn missing(what: &'static str) -> Error {
    Error::MissingEvaluator {
        module: "first-stage",
        what,
    }
}

/// Evaluators of the first-stage nuisance functions.
///
/// Only `eta` and `propensity` are mandatory; instrument-conditional
/// evaluators default to a missing-evaluator error.
pub trait Nuisance: Send + Sync {
    /// `E[Y | D = d, X = x]`.
    fn eta(&self, d: u8, x: &[f64]) -> Result<f64>;

    /// `P(D = 1 | X = x)`.
    fn propensity(&self, x: &[f64]) -> Result<f64>;

    /// `E[Y | D = d, X = x, Z = z]`.
    fn eta_z(&self, _d: u8, _x: &[f64], _z: f64) -> Result<f64> {
        Err(missing("E[Y|D,X,Z]"))
    }

    /// `P(D = 1 | X = x, Z = z)`.
    fn propensity_z(&self, _x: &[f64], _z: f64) -> Result<f64> {
        Err(missing("P(D=1|X,Z)"))
    }

    /// `P(Z = z | X = x)`.
    fn instrument_share(&self, _z: f64, _x: &[f64]) -> Result<f64> {
        Err(missing("P(Z=z|X)"))
    }
}

impl<T: Nuisance + ?Sized> Nuisance for &T {
    fn eta(&self, d: u8, x: &[f64]) -> Result<f64> {
        (**self).eta(d, x)
    }
    fn propensity(&self, x: &[f64]) -> Result<f64> {
        (**self).propensity(x)
    }
    fn eta_z(&self, d: u8, x: &[f64], z: f64) -> Result<f64> {
        (**self).eta_z(d, x, z)
    }
    fn propensity_z(&self, x: &[f64], z: f64) -> Result<f64> {
        (**self).propensity_z(x, z)
    }
    fn instrument_share(&self, z: f64, x: &[f64]) -> Result<f64> {
        (**self).instrument_share(z, x)
    }
}

impl<T: Nuisance + ?Sized> Nuisance for Box<T> {
    fn eta(&self, d: u8, x: &[f64]) -> Result<f64> {
        (**self).eta(d, x)
    }
    fn propensity(&self, x: &[f64]) -> Result<f64> {
        (**self).propensity(x)
    }
    fn eta_z(&self, d: u8, x: &[f64], z: f64) -> Result<f64> {
        (**self).eta_z(d, x, z)
    }
    fn propensity_z(&self, x: &[f64], z: f64) -> Result<f64> {
        (**self).propensity_z(x, z)
    }
    fn instrument_share(&self, z: f64, x: &[f64]) -> Result<f64> {
        (**self).instrument_share(z, x)
    }
}

/// Nuisance estimator family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum FirstStageMethod {
    /// Empirical means within each covariate (and instrument) cell.
    CellMeans,
    /// Polynomial least squares for `eta`, polynomial logistic regression
    /// for the propensity and instrument shares.
    Polynomial { degree: u32 },
}

/// First-stage settings recorded with every estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FirstStageConfig {
    #[serde(flatten)]
    pub method: FirstStageMethod,
    pub empty_cell_policy: EmptyCellPolicy,
    pub k: usize,
    pub seed: u64,
}

impl Default for FirstStageConfig {
    fn default() -> Self {
        FirstStageConfig {
            method: FirstStageMethod::CellMeans,
            empty_cell_policy: EmptyCellPolicy::Error,
            k: 2,
            seed: 1,
        }
    }
}

/// Which instrument-dependent evaluators a fit has to provide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NuisanceNeeds {
    pub instrument: bool,
    pub instrument_share: bool,
}

/// A fitted first stage together with its provenance.
pub struct NuisanceFit {
    inner: Box<dyn Nuisance>,
    method: FirstStageMethod,
    training_rows: usize,
}

impl std::fmt::Debug for NuisanceFit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NuisanceFit")
            .field("method", &self.method)
            .field("training_rows", &self.training_rows)
            .finish()
    }
}

impl NuisanceFit {
    pub fn method(&self) -> FirstStageMethod {
        self.method
    }

    pub fn training_rows(&self) -> usize {
        self.training_rows
    }
}

impl Nuisance for NuisanceFit {
    fn eta(&self, d: u8, x: &[f64]) -> Result<f64> {
        self.inner.eta(d, x)
    }
    fn propensity(&self, x: &[f64]) -> Result<f64> {
        self.inner.propensity(x)
    }
    fn eta_z(&self, d: u8, x: &[f64], z: f64) -> Result<f64> {
        self.inner.eta_z(d, x, z)
    }
    fn propensity_z(&self, x: &[f64], z: f64) -> Result<f64> {
        self.inner.propensity_z(x, z)
    }
    fn instrument_share(&self, z: f64, x: &[f64]) -> Result<f64> {
        self.inner.instrument_share(z, x)
    }
}

/// Fits the first stage on `rows`.
///
/// Polynomial components that fail to fit (an empty arm within one
/// instrument level, say) are kept as stored failures and reported only
/// if the corresponding evaluator is actually called.
pub fn fit_first_stage(
    data: &Dataset,
    rows: &[usize],
    method: FirstStageMethod,
    empty_cell_policy: EmptyCellPolicy,
    needs: NuisanceNeeds,
) -> Result<NuisanceFit> {
    if (needs.instrument || needs.instrument_share) && !data.has_instrument() {
        return Err(Error::argument(
            "first-stage",
            "instrument-conditional nuisances requested but the dataset has no instrument",
        ));
    }
    let inner: Box<dyn Nuisance> = match method {
        FirstStageMethod::CellMeans => Box::new(fit_cell_means(data, rows, empty_cell_policy)?),
        FirstStageMethod::Polynomial { degree } => {
            Box::new(PolynomialNuisance::fit(data, rows, degree, needs))
        }
    };
    Ok(NuisanceFit {
        inner,
        method,
        training_rows: rows.len(),
    })
}

/// Fits one first stage per fold, each on the complement of its fold.
///
/// With a single-fold assignment the only fit uses every row. Folds are
/// fitted concurrently; a failure is reported with its one-based fold
/// number.
pub fn fit_cross_fitted(
    data: &Dataset,
    folds: &FoldAssignment,
    method: FirstStageMethod,
    empty_cell_policy: EmptyCellPolicy,
    needs: NuisanceNeeds,
) -> Result<Vec<NuisanceFit>> {
    if folds.n() != data.len() {
        return Err(Error::argument(
            "first-stage",
            format!(
                "fold assignment covers {} rows but the dataset has {}",
                folds.n(),
                data.len()
            ),
        ));
    }
    (0..folds.k())
        .into_par_iter()
        .map(|k| {
            let train = folds.training(k);
            fit_first_stage(data, &train, method, empty_cell_policy, needs)
                .map_err(|e| e.in_fold(k + 1))
        })
        .collect()
}

type Stored<T> = std::result::Result<T, Error>;

fn recall<T>(stored: &Stored<T>) -> Result<&T> {
    stored.as_ref().map_err(Error::duplicate)
}

/// Probabilities of each instrument level given `x`.
#[derive(Debug)]
enum ShareModel {
    /// Logistic regression of `1{Z = levels[1]}` on `x`.
    Binary(LogisticModel),
    /// One-vs-rest logistic regressions, normalized to sum to one.
    OneVsRest(Vec<LogisticModel>),
}

#[derive(Debug)]
struct LevelModels {
    level: f64,
    eta: [Stored<OutcomeRegression>; 2],
    propensity: Stored<LogisticModel>,
}

#[derive(Debug)]
struct PolynomialNuisance {
    eta: [Stored<OutcomeRegression>; 2],
    propensity: Stored<LogisticModel>,
    levels: Vec<LevelModels>,
    shares: Option<Stored<ShareModel>>,
    level_values: Vec<f64>,
}

fn instrument_levels(z: &[f64], rows: &[usize]) -> Vec<f64> {
    let mut levels: Vec<f64> = rows.iter().map(|&i| z[i] + 0.0).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    levels
}

impl PolynomialNuisance {
    fn fit(data: &Dataset, rows: &[usize], degree: u32, needs: NuisanceNeeds) -> Self {
        let propensity_on = |subset: &[usize]| {
            let xs: Vec<&[f64]> = subset.iter().map(|&i| data.covariates(i)).collect();
            let labels: Vec<u8> = subset.iter().map(|&i| data.d()[i]).collect();
            fit_logistic(data.x_names(), &xs, &labels, degree)
        };
        let eta = [
            fit_outcome_regression(data, rows, 0, degree),
            fit_outcome_regression(data, rows, 1, degree),
        ];
        let propensity = propensity_on(rows);
        let mut levels = Vec::new();
        let mut level_values = Vec::new();
        let mut shares = None;
        if let Some(z) = data.z() {
            level_values = instrument_levels(z, rows);
            if needs.instrument {
                for &level in &level_values {
                    let subset: Vec<usize> =
                        rows.iter().copied().filter(|&i| z[i] + 0.0 == level).collect();
                    levels.push(LevelModels {
                        level,
                        eta: [
                            fit_outcome_regression(data, &subset, 0, degree),
                            fit_outcome_regression(data, &subset, 1, degree),
                        ],
                        propensity: propensity_on(&subset),
                    });
                }
            }
            if needs.instrument_share {
                shares = Some(Self::fit_shares(data, rows, z, &level_values, degree));
            }
        }
        PolynomialNuisance {
            eta,
            propensity,
            levels,
            shares,
            level_values,
        }
    }

    fn fit_shares(
        data: &Dataset,
        rows: &[usize],
        z: &[f64],
        levels: &[f64],
        degree: u32,
    ) -> Stored<ShareModel> {
        let xs: Vec<&[f64]> = rows.iter().map(|&i| data.covariates(i)).collect();
        let labels_for =
            |level: f64| -> Vec<u8> { rows.iter().map(|&i| (z[i] + 0.0 == level) as u8).collect() };
        match levels.len() {
            0 | 1 => Err(Error::argument(
                "first-stage",
                "instrument shares need at least two instrument levels in the training rows",
            )),
            2 => fit_logistic(data.x_names(), &xs, &labels_for(levels[1]), degree)
                .map(ShareModel::Binary),
            _ => levels
                .iter()
                .map(|&level| fit_logistic(data.x_names(), &xs, &labels_for(level), degree))
                .collect::<Result<Vec<_>>>()
                .map(ShareModel::OneVsRest),
        }
    }

    fn level(&self, x: &[f64], z: f64) -> Result<&LevelModels> {
        if self.levels.is_empty() {
            return Err(missing("E[Y|D,X,Z]"));
        }
        let z = z + 0.0;
        self.levels.iter().find(|m| m.level == z).ok_or_else(|| Error::EmptyCell {
            cell: format!("instrument level z={z} absent from training rows (x={x:?})"),
        })
    }
}

impl Nuisance for PolynomialNuisance {
    fn eta(&self, d: u8, x: &[f64]) -> Result<f64> {
        Ok(recall(&self.eta[d as usize])?.predict(x))
    }

    fn propensity(&self, x: &[f64]) -> Result<f64> {
        Ok(recall(&self.propensity)?.predict(x))
    }

    fn eta_z(&self, d: u8, x: &[f64], z: f64) -> Result<f64> {
        Ok(recall(&self.level(x, z)?.eta[d as usize])?.predict(x))
    }

    fn propensity_z(&self, x: &[f64], z: f64) -> Result<f64> {
        Ok(recall(&self.level(x, z)?.propensity)?.predict(x))
    }

    fn instrument_share(&self, z: f64, x: &[f64]) -> Result<f64> {
        let model = recall(self.shares.as_ref().ok_or_else(|| missing("P(Z=z|X)"))?)?;
        let z = z + 0.0;
        let Some(pos) = self.level_values.iter().position(|&l| l == z) else {
            return Ok(0.0);
        };
        Ok(match model {
            ShareModel::Binary(m) => {
                let p = m.predict(x);
                if pos == 1 {
                    p
                } else {
                    1.0 - p
                }
            }
            ShareModel::OneVsRest(ms) => {
                let total: f64 = ms.iter().map(|m| m.predict(x)).sum();
                ms[pos].predict(x) / total
            }
        })
    }
}
