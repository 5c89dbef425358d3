//! Cross-fitted point estimates, variances and confidence intervals for
//! the bound endpoints.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::moments::{adjustment_phi, supports_inference, AdjustmentMode, MomentContext, Side};
use super::quantile::normal_quantile;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::first_stage::{
    fit_cross_fitted, make_folds, FirstStageConfig, FoldAssignment, Nuisance, NuisanceNeeds,
};
use crate::identification::{
    check_fits, plug_in_gain_bounds, row_cate, AssumptionSpec, IvMode, Regime, RowWarnings,
};
use crate::policy::{policy_indicators, IndicatorVectors, PolicyPair};
use crate::SPEC_VERSION;

/// Whether the moment includes the first-stage adjustment term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentKind {
    /// The plug-in moment `m` alone.
    Original,
    /// The orthogonalized moment `m + phi`.
    #[default]
    Debiased,
}

/// Estimate and variance of one bound endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SideEstimate {
    pub estimate: f64,
    /// Sample second moment of the estimated moment function at the
    /// estimate.
    pub variance: f64,
    pub n: usize,
}

impl SideEstimate {
    pub fn standard_error(&self) -> f64 {
        (self.variance / self.n as f64).sqrt()
    }

    /// `estimate -/+ critical * sqrt(variance / n)`.
    pub fn interval(&self, critical: f64) -> [f64; 2] {
        let half = critical * self.standard_error();
        [self.estimate - half, self.estimate + half]
    }
}

/// Both endpoints, estimated in one pass over the rows.
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointEstimates {
    pub lower: SideEstimate,
    pub upper: SideEstimate,
    pub diagnostics: Vec<String>,
}

fn summarize(values: &[f64]) -> SideEstimate {
    let n = values.len();
    let estimate = values.iter().sum::<f64>() / n as f64;
    let variance = values.iter().map(|v| (v - estimate).powi(2)).sum::<f64>() / n as f64;
    SideEstimate {
        estimate,
        variance,
        n,
    }
}

/// Estimates both endpoints given per-fold nuisance fits.
///
/// Because each moment is linear in the endpoint with slope -1, the
/// solution of the empirical moment equation is the sample mean of the
/// moment evaluated at zero; the variance is the sample mean of the
/// squared moment at the solution.
pub fn estimate_endpoints<F: Nuisance>(
    data: &Dataset,
    indicators: &IndicatorVectors,
    spec: &AssumptionSpec,
    fits: &[F],
    folds: &FoldAssignment,
    adjustment_mode: AdjustmentMode,
    kind: MomentKind,
) -> Result<EndpointEstimates> {
    spec.check_data(data)?;
    check_fits(data, folds, fits.len())?;
    if indicators.len() != data.len() {
        return Err(Error::argument(
            "inference",
            "indicator vectors and dataset differ in length",
        ));
    }
    let lower_ctx = MomentContext::new(Side::Lower, spec, data.support(), adjustment_mode)?;
    let upper_ctx = MomentContext::new(Side::Upper, spec, data.support(), adjustment_mode)?;
    let rows: Vec<(f64, f64, bool, bool)> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let theta = indicators.at(i);
            if theta == (0, 0) {
                return Ok((0.0, 0.0, false, false));
            }
            let fit: &dyn Nuisance = &fits[folds.fold_of(i)];
            let obs = data.observation(i);
            let eval = || -> Result<(f64, f64, bool, bool)> {
                let (b, crossed, non_monotone) = row_cate(spec, fit, obs.x, data)?;
                let (t10, t01) = (theta.0 as f64, theta.1 as f64);
                let mut lower = b.lower * t10 - b.upper * t01;
                let mut upper = b.upper * t10 - b.lower * t01;
                if kind == MomentKind::Debiased {
                    lower += adjustment_phi(&obs, fit, &lower_ctx, theta)?;
                    upper += adjustment_phi(&obs, fit, &upper_ctx, theta)?;
                }
                Ok((lower, upper, crossed, non_monotone))
            };
            eval().map_err(|e| e.in_row(i))
        })
        .collect::<Result<_>>()?;
    let mut warnings = RowWarnings::default();
    for (i, r) in rows.iter().enumerate() {
        if r.2 {
            warnings.crossed.push(i);
        }
        if r.3 {
            warnings.non_monotone.push(i);
        }
    }
    let lower: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let upper: Vec<f64> = rows.iter().map(|r| r.1).collect();
    Ok(EndpointEstimates {
        lower: summarize(&lower),
        upper: summarize(&upper),
        diagnostics: warnings.into_messages(),
    })
}

/// Settings for [`lr_estimate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationConfig {
    pub first_stage: FirstStageConfig,
    pub alpha: f64,
    pub adjustment_mode: AdjustmentMode,
    pub moment: MomentKind,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            first_stage: FirstStageConfig::default(),
            alpha: 0.95,
            adjustment_mode: AdjustmentMode::default(),
            moment: MomentKind::default(),
        }
    }
}

/// How the reported numbers were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InferenceKind {
    /// Cross-fitted moment estimates with confidence intervals.
    Asymptotic,
    /// Plug-in point estimates only; no influence function is available.
    PointEstimateOnly,
}

/// Policy expressions as written.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyText {
    pub delta_star: String,
    pub delta: String,
}

/// Result record of [`lr_estimate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsEstimate {
    pub spec_version: &'static str,
    pub regime: Regime,
    pub iv_mode: IvMode,
    pub policy: PolicyText,
    pub inference: InferenceKind,
    pub moment: MomentKind,
    pub beta_l: f64,
    pub beta_u: f64,
    pub omega_l: Option<f64>,
    pub omega_u: Option<f64>,
    pub ci_l: Option<[f64; 2]>,
    pub ci_u: Option<[f64; 2]>,
    pub alpha: f64,
    pub critical_value: Option<f64>,
    pub n: usize,
    pub k: usize,
    pub seed: Option<u64>,
    pub first_stage: FirstStageConfig,
    pub adjustment_mode: Option<AdjustmentMode>,
    pub diagnostics: Vec<String>,
}

/// Folds for a first-stage configuration: `k == 1` means no sample
/// splitting.
pub fn folds_for(n: usize, config: &FirstStageConfig) -> Result<FoldAssignment> {
    if config.k == 1 {
        Ok(FoldAssignment::single(n))
    } else {
        make_folds(n, config.k, config.seed)
    }
}

/// Cross-fitted, locally robust estimates of both endpoints of the
/// welfare-gain bounds, with confidence intervals where the regime admits
/// them.
pub fn lr_estimate(
    data: &Dataset,
    pair: &PolicyPair,
    spec: &AssumptionSpec,
    config: &EstimationConfig,
) -> Result<BoundsEstimate> {
    spec.check_data(data)?;
    let critical = normal_quantile(config.alpha)?;
    let fs = config.first_stage;
    if fs.k > data.len() {
        return Err(Error::argument(
            "inference",
            format!("fold count {} exceeds the sample size {}", fs.k, data.len()),
        ));
    }
    let folds = folds_for(data.len(), &fs)?;
    let asymptotic = supports_inference(spec);
    let is_iv = spec.regime.is_iv();
    let needs = NuisanceNeeds {
        instrument: spec.regime.uses_instrument(),
        instrument_share: asymptotic
            && is_iv
            && config.moment == MomentKind::Debiased
            && config.adjustment_mode == AdjustmentMode::InstrumentWeighted,
    };
    let fits = fit_cross_fitted(data, &folds, fs.method, fs.empty_cell_policy, needs)?;
    let policy = PolicyText {
        delta_star: pair.delta_star.to_string(),
        delta: pair.delta.to_string(),
    };
    let mut out = BoundsEstimate {
        spec_version: SPEC_VERSION,
        regime: spec.regime,
        iv_mode: spec.iv_mode,
        policy,
        inference: InferenceKind::PointEstimateOnly,
        moment: config.moment,
        beta_l: 0.0,
        beta_u: 0.0,
        omega_l: None,
        omega_u: None,
        ci_l: None,
        ci_u: None,
        alpha: config.alpha,
        critical_value: None,
        n: data.len(),
        k: folds.k(),
        seed: folds.seed(),
        first_stage: fs,
        adjustment_mode: None,
        diagnostics: Vec::new(),
    };
    if !asymptotic {
        let plug_in = plug_in_gain_bounds(data, pair, spec, &fits, &folds)?;
        out.beta_l = plug_in.beta_l;
        out.beta_u = plug_in.beta_u;
        out.diagnostics = plug_in.diagnostics;
        out.diagnostics.push(format!(
            "point estimate only: no influence-function adjustment is available for regime {} \
             with IV mode {:?}",
            spec.regime, spec.iv_mode
        ));
        return Ok(out);
    }
    let indicators = policy_indicators(pair, data)?;
    let est = estimate_endpoints(
        data,
        &indicators,
        spec,
        &fits,
        &folds,
        config.adjustment_mode,
        config.moment,
    )?;
    out.inference = InferenceKind::Asymptotic;
    out.beta_l = est.lower.estimate;
    out.beta_u = est.upper.estimate;
    out.omega_l = Some(est.lower.variance);
    out.omega_u = Some(est.upper.variance);
    out.ci_l = Some(est.lower.interval(critical));
    out.ci_u = Some(est.upper.interval(critical));
    out.critical_value = Some(critical);
    if is_iv && config.moment == MomentKind::Debiased {
        out.adjustment_mode = Some(config.adjustment_mode);
    }
    out.diagnostics = est.diagnostics;
    Ok(out)
}
