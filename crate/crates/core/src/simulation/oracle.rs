//! Exact population quantities of the data-generating process.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::dgp::{DgpNuisance, DgpSpec};
use crate::error::{Error, Result};
use crate::identification::{cate_bounds, AssumptionSpec, Regime};
use crate::policy::PolicyPair;

/// Population quantity to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleTarget {
    /// The welfare gain itself, `E[(Y_1 - Y_0)(delta - delta_star)]`.
    Gain,
    WorstCase,
    Mtr,
    IvWorstCase,
    IvMtr,
}

impl OracleTarget {
    pub fn name(self) -> &'static str {
        match self {
            OracleTarget::Gain => "gain",
            OracleTarget::WorstCase => "worst-case",
            OracleTarget::Mtr => "mtr",
            OracleTarget::IvWorstCase => "iv-worst-case",
            OracleTarget::IvMtr => "iv-mtr",
        }
    }

    fn regime(self) -> Option<Regime> {
        match self {
            OracleTarget::Gain => None,
            OracleTarget::WorstCase => Some(Regime::WorstCase),
            OracleTarget::Mtr => Some(Regime::Mtr),
            OracleTarget::IvWorstCase => Some(Regime::IvWorstCase),
            OracleTarget::IvMtr => Some(Regime::IvMtr),
        }
    }
}

impl fmt::Display for OracleTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OracleTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            OracleTarget::Gain,
            OracleTarget::WorstCase,
            OracleTarget::Mtr,
            OracleTarget::IvWorstCase,
            OracleTarget::IvMtr,
        ]
        .into_iter()
        .find(|t| t.name() == s)
        .ok_or_else(|| {
            Error::argument(
                "simulation",
                format!("unknown oracle target '{s}' (expected gain, worst-case, mtr, iv-worst-case or iv-mtr)"),
            )
        })
    }
}

/// A population value: the gain, or the two bound endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum OracleValue {
    Gain { gain: f64 },
    Bounds { beta_l: f64, beta_u: f64 },
}

/// Computes the target from the exact nuisance functions of `spec`.
///
/// Policies read the single covariate `x`.
pub fn population_oracle(spec: &DgpSpec, pair: &PolicyPair, target: OracleTarget) -> Result<OracleValue> {
    let truth = DgpNuisance::new(spec)?;
    let bound = pair.bind(&["x".to_string()])?;
    let assumption = match target.regime() {
        None => None,
        Some(r) if r.is_iv() => Some(AssumptionSpec::binary_iv(r)?),
        Some(r) => Some(AssumptionSpec::new(r)?),
    };
    let mut gain = 0.0;
    let mut beta_l = 0.0;
    let mut beta_u = 0.0;
    for (&x, &mass) in spec.x_levels.iter().zip(&spec.x_pmf) {
        let (t10, t01) = bound.indicators(&[x])?;
        if mass == 0.0 || (t10 == 0 && t01 == 0) {
            continue;
        }
        let (t10, t01) = (t10 as f64, t01 as f64);
        match &assumption {
            None => gain += mass * (t10 - t01) * truth.cate(x)?,
            Some(a) => {
                let b = cate_bounds(a, &truth, &[x], spec.support)?;
                beta_l += mass * (b.lower * t10 - b.upper * t01);
                beta_u += mass * (b.upper * t10 - b.lower * t01);
            }
        }
    }
    Ok(match assumption {
        None => OracleValue::Gain { gain },
        Some(_) => OracleValue::Bounds { beta_l, beta_u },
    })
}
