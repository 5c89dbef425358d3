//! Moment functions for the bound endpoints and their first-stage
//! adjustment terms.

use serde::{Deserialize, Serialize};

use crate::data::{Observation, Support};
use crate::error::{Error, Result};
use crate::first_stage::Nuisance;
use crate::identification::{cate_bounds, AssumptionSpec, IvMode, Regime};

/// Which endpoint of the identified interval a moment targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Lower,
    Upper,
}

/// Form of the adjustment term in the binary-instrument regimes.
///
/// `InstrumentWeighted` divides each instrument branch by the estimated
/// share `P(Z = z | X = x)`, which makes the moment orthogonal to
/// perturbations of the instrument-conditional nuisances.
/// `PaperFaithful` omits that division; it is still mean zero at the
/// truth but is orthogonal only when the share equals one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdjustmentMode {
    PaperFaithful,
    #[default]
    InstrumentWeighted,
}

impl std::str::FromStr for AdjustmentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-faithful" => Ok(AdjustmentMode::PaperFaithful),
            "instrument-weighted" => Ok(AdjustmentMode::InstrumentWeighted),
            _ => Err(Error::argument(
                "inference",
                format!("unknown adjustment mode '{s}' (expected paper-faithful or instrument-weighted)"),
            )),
        }
    }
}

/// Everything a moment evaluation needs besides the observation and the
/// nuisance fit.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentContext {
    pub side: Side,
    pub regime: Regime,
    pub support: Support,
    pub adjustment_mode: AdjustmentMode,
    spec: AssumptionSpec,
}

/// Whether the regime has an influence-function adjustment (and hence a
/// confidence interval).
pub fn supports_inference(spec: &AssumptionSpec) -> bool {
    match spec.regime {
        Regime::WorstCase | Regime::Mtr => true,
        Regime::IvWorstCase | Regime::IvMtr => spec.iv_mode == IvMode::BinaryMonotone,
        Regime::MivWorstCase | Regime::MivMtr => false,
    }
}

impl MomentContext {
    pub fn new(
        side: Side,
        spec: &AssumptionSpec,
        support: Support,
        adjustment_mode: AdjustmentMode,
    ) -> Result<Self> {
        spec.validate()?;
        if !supports_inference(spec) {
            return Err(Error::argument(
                "inference",
                format!(
                    "regime {} ({:?} instrument mode) has no orthogonal moment; only plug-in point \
                     estimates are available",
                    spec.regime, spec.iv_mode
                ),
            ));
        }
        Ok(MomentContext {
            side,
            regime: spec.regime,
            support,
            adjustment_mode,
            spec: spec.clone(),
        })
    }

    pub fn spec(&self) -> &AssumptionSpec {
        &self.spec
    }

    /// Coefficients `(a, b)` of the CATE lower and upper bounds in the
    /// moment at indicators `(theta10, theta01)`. Under MTR the lower
    /// bound is identically zero and gets no coefficient in the
    /// adjustment.
    fn coefficients(&self, theta: (u8, u8)) -> (f64, f64) {
        let (t10, t01) = (theta.0 as f64, theta.1 as f64);
        let (a, b) = match self.side {
            Side::Lower => (t10, -t01),
            Side::Upper => (-t01, t10),
        };
        if self.regime.is_mtr() {
            (0.0, b)
        } else {
            (a, b)
        }
    }
}

/// The moment `m(w, beta, gamma)`: the combination of CATE bounds for the
/// chosen side minus `beta`.
pub fn moment_m(
    obs: &Observation<'_>,
    beta: f64,
    fit: &dyn Nuisance,
    ctx: &MomentContext,
    theta: (u8, u8),
) -> Result<f64> {
    if theta == (0, 0) {
        return Ok(-beta);
    }
    let b = cate_bounds(&ctx.spec, fit, obs.x, ctx.support)?;
    let (t10, t01) = (theta.0 as f64, theta.1 as f64);
    let value = match ctx.side {
        Side::Lower => b.lower * t10 - b.upper * t01,
        Side::Upper => b.upper * t10 - b.lower * t01,
    };
    Ok(value - beta)
}

/// The first-stage adjustment `phi(w, gamma)` added to the moment.
pub fn adjustment_phi(
    obs: &Observation<'_>,
    fit: &dyn Nuisance,
    ctx: &MomentContext,
    theta: (u8, u8),
) -> Result<f64> {
    let (a, b) = ctx.coefficients(theta);
    if a == 0.0 && b == 0.0 {
        return Ok(0.0);
    }
    match ctx.regime {
        Regime::WorstCase | Regime::Mtr => worst_case_phi(obs, fit, ctx.support, a + b),
        Regime::IvWorstCase | Regime::IvMtr => binary_iv_phi(obs, fit, ctx, a, b),
        Regime::MivWorstCase | Regime::MivMtr => Err(Error::argument(
            "inference",
            format!("regime {} has no adjustment term", ctx.regime),
        )),
    }
}

/// Orthogonalized moment `psi = m + phi`.
pub fn moment_psi(
    obs: &Observation<'_>,
    beta: f64,
    fit: &dyn Nuisance,
    ctx: &MomentContext,
    theta: (u8, u8),
) -> Result<f64> {
    Ok(moment_m(obs, beta, fit, ctx, theta)? + adjustment_phi(obs, fit, ctx, theta)?)
}

fn worst_case_phi(obs: &Observation<'_>, fit: &dyn Nuisance, s: Support, coef: f64) -> Result<f64> {
    let x = obs.x;
    let p = fit.propensity(x)?;
    let d = obs.d as f64;
    // an arm mean enters only through terms that vanish when its weight
    // and its own residual are both absent
    let eta1 = if p > 0.0 || obs.d == 1 { fit.eta(1, x)? } else { 0.0 };
    let eta0 = if p < 1.0 || obs.d == 0 { fit.eta(0, x)? } else { 0.0 };
    let phi1 = (eta1 + eta0 - s.lower - s.upper) * (d - p);
    let phi2 = if obs.d == 1 { obs.y - eta1 } else { -(obs.y - eta0) };
    Ok(coef * (phi1 + phi2))
}

fn binary_iv_phi(
    obs: &Observation<'_>,
    fit: &dyn Nuisance,
    ctx: &MomentContext,
    a: f64,
    b: f64,
) -> Result<f64> {
    let x = obs.x;
    let s = ctx.support;
    let z = obs.z.ok_or_else(|| {
        Error::argument("inference", "IV adjustment requires an instrument value")
    })?;
    let weight = |z: f64| -> Result<f64> {
        match ctx.adjustment_mode {
            AdjustmentMode::PaperFaithful => Ok(1.0),
            AdjustmentMode::InstrumentWeighted => {
                let r = fit.instrument_share(z, x)?;
                if r > 0.0 {
                    Ok(r)
                } else {
                    Err(Error::numerical(
                        "inference",
                        format!("estimated P(Z={z}|X={x:?}) is zero at an observed instrument value"),
                    ))
                }
            }
        }
    };
    let d = obs.d as f64;
    if z == 1.0 {
        let p1 = fit.propensity_z(x, 1.0)?;
        let eta1 = if p1 > 0.0 || obs.d == 1 { fit.eta_z(1, x, 1.0)? } else { 0.0 };
        let w = weight(1.0)?;
        let phi1 = (a * (eta1 - s.lower) + b * (eta1 - s.upper)) * (d - p1);
        let phi2 = if obs.d == 1 { (a + b) * (obs.y - eta1) } else { 0.0 };
        Ok((phi1 + phi2) / w)
    } else if z == 0.0 {
        let p0 = fit.propensity_z(x, 0.0)?;
        let eta0 = if p0 < 1.0 || obs.d == 0 { fit.eta_z(0, x, 0.0)? } else { 0.0 };
        let w = weight(0.0)?;
        let phi1 = (a * (eta0 - s.upper) + b * (eta0 - s.lower)) * (d - p0);
        let phi2 = if obs.d == 0 { -(a + b) * (obs.y - eta0) } else { 0.0 };
        Ok((phi1 + phi2) / w)
    } else {
        Err(Error::argument(
            "inference",
            format!("binary-monotone IV adjustment needs z in {{0, 1}}, got {z}"),
        ))
    }
}
