use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

const WEIGHT_TOLERANCE: f64 = 1e-12;

/// Identification regime: which maintained assumptions shape the CATE
/// bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    WorstCase,
    Mtr,
    IvWorstCase,
    IvMtr,
    MivWorstCase,
    MivMtr,
}

impl Regime {
    pub const ALL: [Regime; 6] = [
        Regime::WorstCase,
        Regime::Mtr,
        Regime::IvWorstCase,
        Regime::IvMtr,
        Regime::MivWorstCase,
        Regime::MivMtr,
    ];

    /// Monotone treatment response: the CATE lower bound is zero.
    pub fn is_mtr(self) -> bool {
        matches!(self, Regime::Mtr | Regime::IvMtr | Regime::MivMtr)
    }

    pub fn is_iv(self) -> bool {
        matches!(self, Regime::IvWorstCase | Regime::IvMtr)
    }

    pub fn is_miv(self) -> bool {
        matches!(self, Regime::MivWorstCase | Regime::MivMtr)
    }

    pub fn uses_instrument(self) -> bool {
        self.is_iv() || self.is_miv()
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::WorstCase => "worst-case",
            Regime::Mtr => "mtr",
            Regime::IvWorstCase => "iv-worst-case",
            Regime::IvMtr => "iv-mtr",
            Regime::MivWorstCase => "miv-worst-case",
            Regime::MivMtr => "miv-mtr",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Regime::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| {
                Error::argument(
                    "identification",
                    format!(
                        "unknown regime '{s}' (expected one of worst-case, mtr, iv-worst-case, \
                         iv-mtr, miv-worst-case, miv-mtr)"
                    ),
                )
            })
    }
}

/// How the intersection over instrument values is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IvMode {
    #[default]
    None,
    /// `Z` in {0, 1} with `p(x, 1) >= p(x, 0)`: the supremum and infimum
    /// are attained at `z = 1` for treated-arm terms and `z = 0` for
    /// control-arm terms.
    BinaryMonotone,
    /// Exhaustive scan over the listed instrument levels.
    GeneralDiscrete,
}

impl FromStr for IvMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(IvMode::None),
            "binary-monotone" => Ok(IvMode::BinaryMonotone),
            "general-discrete" => Ok(IvMode::GeneralDiscrete),
            _ => Err(Error::argument(
                "identification",
                format!("unknown IV mode '{s}' (expected none, binary-monotone or general-discrete)"),
            )),
        }
    }
}

/// A discrete instrument value and its marginal probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstrumentLevel {
    pub value: f64,
    pub weight: f64,
}

/// Regime plus the instrument metadata it needs.
///
/// For IV regimes `levels` lists the instrument values scanned by the
/// intersection (weights unused). For MIV regimes the levels are in
/// ascending order and the weights are `P(Z = z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionSpec {
    pub regime: Regime,
    pub iv_mode: IvMode,
    pub levels: Vec<InstrumentLevel>,
}

impl AssumptionSpec {
    /// A regime that does not use an instrument.
    pub fn new(regime: Regime) -> Result<Self> {
        let spec = AssumptionSpec {
            regime,
            iv_mode: IvMode::None,
            levels: Vec::new(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// IV regime with binary instrument and monotone first step.
    pub fn binary_iv(regime: Regime) -> Result<Self> {
        let spec = AssumptionSpec {
            regime,
            iv_mode: IvMode::BinaryMonotone,
            levels: [0.0, 1.0]
                .map(|value| InstrumentLevel { value, weight: 0.5 })
                .to_vec(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// IV regime scanning the given instrument values.
    pub fn discrete_iv(regime: Regime, values: &[f64]) -> Result<Self> {
        let weight = 1.0 / values.len().max(1) as f64;
        let spec = AssumptionSpec {
            regime,
            iv_mode: IvMode::GeneralDiscrete,
            levels: values
                .iter()
                .map(|&value| InstrumentLevel { value, weight })
                .collect(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// MIV regime over ordered levels with marginal weights.
    pub fn miv(regime: Regime, levels: Vec<InstrumentLevel>) -> Result<Self> {
        let spec = AssumptionSpec {
            regime,
            iv_mode: IvMode::None,
            levels,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Builds the specification from the dataset's instrument column.
    ///
    /// IV regimes default to the binary-monotone mode when the instrument
    /// takes only the values 0 and 1, and to the exhaustive scan otherwise.
    /// MIV levels and weights are the observed values and their sample
    /// shares.
    pub fn from_data(regime: Regime, iv_mode: Option<IvMode>, data: &Dataset) -> Result<Self> {
        if !regime.uses_instrument() {
            return AssumptionSpec::new(regime);
        }
        let z = data.z().ok_or_else(|| {
            Error::argument(
                "identification",
                format!("regime {regime} requires an instrument column"),
            )
        })?;
        let levels = empirical_levels(z);
        if regime.is_miv() {
            return AssumptionSpec::miv(regime, levels);
        }
        let binary = levels.iter().all(|l| l.value == 0.0 || l.value == 1.0);
        let mode = match iv_mode {
            Some(IvMode::None) | None => {
                if binary {
                    IvMode::BinaryMonotone
                } else {
                    IvMode::GeneralDiscrete
                }
            }
            Some(mode) => mode,
        };
        match mode {
            IvMode::BinaryMonotone => {
                if !binary {
                    return Err(Error::argument(
                        "identification",
                        "binary-monotone IV mode requires an instrument in {0, 1}",
                    ));
                }
                AssumptionSpec::binary_iv(regime)
            }
            _ => {
                let values: Vec<f64> = levels.iter().map(|l| l.value).collect();
                AssumptionSpec::discrete_iv(regime, &values)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::argument("identification", msg));
        let regime = self.regime;
        if regime.is_iv() {
            match self.iv_mode {
                IvMode::None => return fail(format!("regime {regime} requires an IV mode")),
                IvMode::BinaryMonotone => {
                    let values: Vec<f64> = self.levels.iter().map(|l| l.value).collect();
                    if values != [0.0, 1.0] {
                        return fail("binary-monotone IV mode requires levels {0, 1}".into());
                    }
                }
                IvMode::GeneralDiscrete => {
                    if self.levels.is_empty() {
                        return fail("general-discrete IV mode requires instrument levels".into());
                    }
                }
            }
        } else if regime.is_miv() {
            if self.levels.len() < 2 {
                return fail(format!("regime {regime} requires at least two instrument levels"));
            }
            if self.levels.windows(2).any(|w| !(w[0].value < w[1].value)) {
                return fail("MIV levels must be strictly increasing".into());
            }
            if self.levels.iter().any(|l| !(l.weight >= 0.0)) {
                return fail("MIV weights must be nonnegative".into());
            }
            let total: f64 = self.levels.iter().map(|l| l.weight).sum();
            if (total - 1.0).abs() > WEIGHT_TOLERANCE {
                return fail(format!("MIV weights sum to {total}, not 1"));
            }
        } else if self.iv_mode != IvMode::None {
            return fail(format!("regime {regime} does not take an IV mode"));
        }
        Ok(())
    }

    /// Checks the instrument column against the declared levels.
    pub fn check_data(&self, data: &Dataset) -> Result<()> {
        self.validate()?;
        if !self.regime.uses_instrument() {
            return Ok(());
        }
        let z = data.z().ok_or_else(|| {
            Error::argument(
                "identification",
                format!("regime {} requires an instrument column", self.regime),
            )
        })?;
        for (i, &v) in z.iter().enumerate() {
            if !self.levels.iter().any(|l| l.value == v) {
                return Err(Error::Domain {
                    row: i,
                    message: format!(
                        "instrument value {v} is not among the declared levels of regime {}",
                        self.regime
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Observed instrument values in ascending order with their sample shares.
pub fn empirical_levels(z: &[f64]) -> Vec<InstrumentLevel> {
    let mut sorted: Vec<f64> = z.iter().map(|v| v + 0.0).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut levels: Vec<InstrumentLevel> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for v in sorted {
        match levels.last() {
            Some(l) if l.value == v => *counts.last_mut().unwrap() += 1,
            _ => {
                levels.push(InstrumentLevel { value: v, weight: 0.0 });
                counts.push(1);
            }
        }
    }
    for (l, c) in levels.iter_mut().zip(counts) {
        l.weight = c as f64 / n;
    }
    levels
}

/// Replaces a continuous instrument by ordered quantile-bin codes
/// `0, 1, ...`.
///
/// Cut points are the empirical `j / bins` quantiles; tied values always
/// share a bin, so fewer than `bins` codes may result.
pub fn quantile_bins(values: &[f64], bins: usize) -> Result<Vec<f64>> {
    if bins < 2 {
        return Err(Error::argument("identification", "at least two instrument bins are needed"));
    }
    if values.is_empty() {
        return Err(Error::argument("identification", "cannot bin an empty instrument"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut cuts: Vec<f64> = (1..bins).map(|j| sorted[j * n / bins]).collect();
    cuts.dedup();
    cuts.retain(|&c| c > sorted[0]);
    Ok(values
        .iter()
        .map(|&v| cuts.iter().filter(|&&c| c <= v).count() as f64)
        .collect())
}
