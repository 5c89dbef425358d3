use rayon::prelude::*;
use serde::Serialize;

use super::assumptions::{AssumptionSpec, IvMode};
use super::cate::{cate_bounds, CateBounds};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::first_stage::{FoldAssignment, Nuisance};
use crate::policy::{policy_indicators, PolicyPair};

/// Bounds `[beta_l, beta_u]` on the welfare gain, with any per-row
/// warnings raised while computing them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainBounds {
    pub beta_l: f64,
    pub beta_u: f64,
    pub diagnostics: Vec<String>,
}

/// Per-row weights on the CATE bounds: `gain` multiplies the lower bound in
/// `beta_l` (upper bound in `beta_u`), `loss` multiplies the upper bound in
/// `beta_l` (lower bound in `beta_u`) with a minus sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct RowWeights {
    pub gain: f64,
    pub loss: f64,
}

impl RowWeights {
    pub fn is_zero(&self) -> bool {
        self.gain == 0.0 && self.loss == 0.0
    }
}

#[derive(Debug, Default)]
pub(crate) struct RowWarnings {
    pub crossed: Vec<usize>,
    pub non_monotone: Vec<usize>,
}

impl RowWarnings {
    pub fn into_messages(self) -> Vec<String> {
        let mut out = Vec::new();
        let summarize = |rows: &[usize], what: &str, out: &mut Vec<String>| {
            if let Some(first) = rows.first() {
                out.push(format!("{what} at {} row(s), first at row {first}", rows.len()));
            }
        };
        summarize(
            &self.crossed,
            "CATE lower bound exceeds upper bound (not clamped)",
            &mut out,
        );
        summarize(
            &self.non_monotone,
            "estimated p(x,1) < p(x,0) although the binary-monotone IV mode assumes otherwise",
            &mut out,
        );
        out
    }
}

/// Evaluates the CATE bounds for one row and records warnings.
pub(crate) fn row_cate(
    spec: &AssumptionSpec,
    fit: &dyn Nuisance,
    x: &[f64],
    data: &Dataset,
) -> Result<(CateBounds, bool, bool)> {
    let b = cate_bounds(spec, fit, x, data.support())?;
    let non_monotone = if spec.iv_mode == IvMode::BinaryMonotone {
        fit.propensity_z(x, 1.0)? < fit.propensity_z(x, 0.0)?
    } else {
        false
    };
    Ok((b, b.is_crossed(), non_monotone))
}

pub(crate) fn check_fits(data: &Dataset, folds: &FoldAssignment, fits: usize) -> Result<()> {
    if folds.n() != data.len() {
        return Err(Error::argument(
            "identification",
            format!("fold assignment covers {} rows, dataset has {}", folds.n(), data.len()),
        ));
    }
    if fits != folds.k() {
        return Err(Error::argument(
            "identification",
            format!("{fits} nuisance fits supplied for {} folds", folds.k()),
        ));
    }
    Ok(())
}

/// Averages the weighted CATE-bound combinations over rows, each row
/// evaluated under its own fold's fit.
pub(crate) fn weighted_sum<F: Nuisance>(
    data: &Dataset,
    spec: &AssumptionSpec,
    fits: &[F],
    folds: &FoldAssignment,
    weights: &[RowWeights],
) -> Result<GainBounds> {
    spec.check_data(data)?;
    check_fits(data, folds, fits.len())?;
    let rows: Vec<Option<(f64, f64, bool, bool)>> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let w = weights[i];
            if w.is_zero() {
                return Ok(None);
            }
            let fit = &fits[folds.fold_of(i)];
            let (b, crossed, non_monotone) =
                row_cate(spec, fit, data.covariates(i), data).map_err(|e| e.in_row(i))?;
            Ok(Some((
                w.gain * b.lower - w.loss * b.upper,
                w.gain * b.upper - w.loss * b.lower,
                crossed,
                non_monotone,
            )))
        })
        .collect::<Result<_>>()?;
    let mut lower = 0.0;
    let mut upper = 0.0;
    let mut warnings = RowWarnings::default();
    for (i, row) in rows.into_iter().enumerate() {
        if let Some((l, u, crossed, non_monotone)) = row {
            lower += l;
            upper += u;
            if crossed {
                warnings.crossed.push(i);
            }
            if non_monotone {
                warnings.non_monotone.push(i);
            }
        }
    }
    let n = data.len() as f64;
    Ok(GainBounds {
        beta_l: lower / n,
        beta_u: upper / n,
        diagnostics: warnings.into_messages(),
    })
}

/// Plug-in estimate of the welfare-gain bounds for switching from
/// `pair.delta_star` to `pair.delta`.
///
/// `fits[k]` is the nuisance fit applied to the rows of fold `k`.
pub fn plug_in_gain_bounds<F: Nuisance>(
    data: &Dataset,
    pair: &PolicyPair,
    spec: &AssumptionSpec,
    fits: &[F],
    folds: &FoldAssignment,
) -> Result<GainBounds> {
    let ind = policy_indicators(pair, data)?;
    let weights: Vec<RowWeights> = (0..data.len())
        .map(|i| {
            let (t10, t01) = ind.at(i);
            RowWeights {
                gain: t10 as f64,
                loss: t01 as f64,
            }
        })
        .collect();
    weighted_sum(data, spec, fits, folds, &weights)
}

/// A map from covariates to a real value, such as a randomized treatment
/// rule or a weighting function.
pub type CovariateFn<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

/// Welfare-gain bounds for randomized rules `delta`, `delta_star` (values
/// in [0, 1]) and a nonnegative weighting function `w`.
pub fn weighted_gain_bounds<F: Nuisance>(
    data: &Dataset,
    delta: CovariateFn<'_>,
    delta_star: CovariateFn<'_>,
    w: CovariateFn<'_>,
    spec: &AssumptionSpec,
    fits: &[F],
    folds: &FoldAssignment,
) -> Result<GainBounds> {
    let mut weights = Vec::with_capacity(data.len());
    for i in 0..data.len() {
        let x = data.covariates(i);
        let (new, old, weight) = (delta(x), delta_star(x), w(x));
        for (name, v) in [("delta", new), ("delta_star", old)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::argument(
                    "identification",
                    format!("{name} = {v} outside [0, 1] at row {i}"),
                ));
            }
        }
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(Error::argument(
                "identification",
                format!("weight {weight} at row {i} is not a nonnegative number"),
            ));
        }
        let psi = weight * (new - old);
        weights.push(if psi >= 0.0 {
            RowWeights { gain: psi, loss: 0.0 }
        } else {
            RowWeights { gain: 0.0, loss: -psi }
        });
    }
    weighted_sum(data, spec, fits, folds, &weights)
}
