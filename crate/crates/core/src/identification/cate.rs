use serde::Serialize;

use super::assumptions::{AssumptionSpec, IvMode, Regime};
use crate::data::Support;
use crate::error::{Error, Result};
use crate::first_stage::Nuisance;

/// Bounds `(lower, upper)` on the conditional average treatment effect at
/// one covariate value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CateBounds {
    pub lower: f64,
    pub upper: f64,
}

impl CateBounds {
    /// `lower > upper`, which cannot happen at the true nuisances but can
    /// with estimated ones.
    pub fn is_crossed(&self) -> bool {
        self.lower > self.upper
    }
}

/// Mean outcome in arm `d`, evaluated only when the arm has positive
/// weight `share`; an arm with zero weight contributes nothing.
fn weighted_arm(share: f64, eval: impl FnOnce() -> Result<f64>) -> Result<f64> {
    if share == 0.0 {
        Ok(0.0)
    } else {
        Ok(share * eval()?)
    }
}

/// The pieces of the worst-case support functions at one `(x, z)` cell:
/// `E[Y 1{D=1}]`-type terms padded with the support bounds.
#[derive(Debug, Clone, Copy)]
struct TreatedTerms {
    /// `eta(1) p + y_lo (1 - p)`
    low: f64,
    /// `eta(1) p + y_hi (1 - p)`
    high: f64,
}

#[derive(Debug, Clone, Copy)]
struct ControlTerms {
    /// `y_lo p + eta(0) (1 - p)`
    low: f64,
    /// `y_hi p + eta(0) (1 - p)`
    high: f64,
}

fn treated_terms(p: f64, eta1: impl FnOnce() -> Result<f64>, s: Support) -> Result<TreatedTerms> {
    let mass = weighted_arm(p, eta1)?;
    Ok(TreatedTerms {
        low: mass + s.lower * (1.0 - p),
        high: mass + s.upper * (1.0 - p),
    })
}

fn control_terms(p: f64, eta0: impl FnOnce() -> Result<f64>, s: Support) -> Result<ControlTerms> {
    let mass = weighted_arm(1.0 - p, eta0)?;
    Ok(ControlTerms {
        low: s.lower * p + mass,
        high: s.upper * p + mass,
    })
}

fn check_probability(p: f64, what: &str) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(Error::numerical(
            "identification",
            format!("{what} = {p} lies outside [0, 1]"),
        ))
    }
}

/// Worst-case bounds from the pooled nuisances.
fn worst_case(fit: &dyn Nuisance, x: &[f64], s: Support) -> Result<CateBounds> {
    let p = check_probability(fit.propensity(x)?, "p(x)")?;
    let t = treated_terms(p, || fit.eta(1, x), s)?;
    let c = control_terms(p, || fit.eta(0, x), s)?;
    // (eta1 - y_hi) p + (y_lo - eta0)(1 - p) = t.low - c.high
    Ok(CateBounds {
        lower: t.low - c.high,
        upper: t.high - c.low,
    })
}

fn level_treated(fit: &dyn Nuisance, x: &[f64], z: f64, s: Support) -> Result<TreatedTerms> {
    let p = check_probability(fit.propensity_z(x, z)?, "p(x, z)")?;
    treated_terms(p, || fit.eta_z(1, x, z), s)
}

fn level_control(fit: &dyn Nuisance, x: &[f64], z: f64, s: Support) -> Result<ControlTerms> {
    let p = check_probability(fit.propensity_z(x, z)?, "p(x, z)")?;
    control_terms(p, || fit.eta_z(0, x, z), s)
}

/// Intersection bounds over the instrument levels.
fn iv_bounds(spec: &AssumptionSpec, fit: &dyn Nuisance, x: &[f64], s: Support) -> Result<CateBounds> {
    match spec.iv_mode {
        IvMode::BinaryMonotone => {
            let t = level_treated(fit, x, 1.0, s)?;
            let c = level_control(fit, x, 0.0, s)?;
            Ok(CateBounds {
                lower: t.low - c.high,
                upper: t.high - c.low,
            })
        }
        IvMode::GeneralDiscrete => {
            let mut sup_t_low = f64::NEG_INFINITY;
            let mut inf_t_high = f64::INFINITY;
            let mut inf_c_high = f64::INFINITY;
            let mut sup_c_low = f64::NEG_INFINITY;
            for level in &spec.levels {
                let t = level_treated(fit, x, level.value, s)?;
                let c = level_control(fit, x, level.value, s)?;
                sup_t_low = sup_t_low.max(t.low);
                inf_t_high = inf_t_high.min(t.high);
                inf_c_high = inf_c_high.min(c.high);
                sup_c_low = sup_c_low.max(c.low);
            }
            Ok(CateBounds {
                lower: sup_t_low - inf_c_high,
                upper: inf_t_high - sup_c_low,
            })
        }
        IvMode::None => Err(Error::argument("identification", "IV regime without an IV mode")),
    }
}

/// `out[j] = max(v[0..=j])`
fn prefix_max(v: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = f64::NEG_INFINITY;
    v.map(|x| {
        acc = acc.max(x);
        acc
    })
    .collect()
}

/// `out[j] = min(v[j..])`
fn suffix_min(v: impl DoubleEndedIterator<Item = f64>) -> Vec<f64> {
    let mut acc = f64::INFINITY;
    let mut out: Vec<f64> = v
        .rev()
        .map(|x| {
            acc = acc.min(x);
            acc
        })
        .collect();
    out.reverse();
    out
}

/// Monotone-instrument bounds: weighted running suprema over lower levels
/// and infima over higher levels.
fn miv_bounds(spec: &AssumptionSpec, fit: &dyn Nuisance, x: &[f64], s: Support) -> Result<CateBounds> {
    let levels = &spec.levels;
    let mut treated = Vec::with_capacity(levels.len());
    let mut control = Vec::with_capacity(levels.len());
    let mut mean_y = Vec::with_capacity(levels.len());
    for level in levels {
        let z = level.value;
        let p = check_probability(fit.propensity_z(x, z)?, "p(x, z)")?;
        let m1 = weighted_arm(p, || fit.eta_z(1, x, z))?;
        let m0 = weighted_arm(1.0 - p, || fit.eta_z(0, x, z))?;
        treated.push(TreatedTerms {
            low: m1 + s.lower * (1.0 - p),
            high: m1 + s.upper * (1.0 - p),
        });
        control.push(ControlTerms {
            low: s.lower * p + m0,
            high: s.upper * p + m0,
        });
        mean_y.push(m1 + m0);
    }
    let t_low = prefix_max(treated.iter().map(|t| t.low));
    let d_low = prefix_max(control.iter().map(|c| c.low));
    let b_high = suffix_min(control.iter().map(|c| c.high));
    let c_high = suffix_min(treated.iter().map(|t| t.high));
    let y_sup = prefix_max(mean_y.iter().copied());
    let y_inf = suffix_min(mean_y.iter().copied());
    let mut lower = 0.0;
    let mut upper = 0.0;
    for (j, level) in levels.iter().enumerate() {
        let low_term = if spec.regime == Regime::MivMtr {
            y_sup[j] - y_inf[j]
        } else {
            t_low[j] - b_high[j]
        };
        lower += level.weight * low_term;
        upper += level.weight * (c_high[j] - d_low[j]);
    }
    Ok(CateBounds { lower, upper })
}

/// CATE bounds at covariate value `x` under the given regime.
pub fn cate_bounds(
    spec: &AssumptionSpec,
    fit: &dyn Nuisance,
    x: &[f64],
    support: Support,
) -> Result<CateBounds> {
    let mut bounds = match spec.regime {
        Regime::WorstCase | Regime::Mtr => worst_case(fit, x, support)?,
        Regime::IvWorstCase | Regime::IvMtr => iv_bounds(spec, fit, x, support)?,
        Regime::MivWorstCase | Regime::MivMtr => miv_bounds(spec, fit, x, support)?,
    };
    if matches!(spec.regime, Regime::Mtr | Regime::IvMtr) {
        bounds.lower = 0.0;
    }
    Ok(bounds)
}
