//! Numerical check that a moment is first-order insensitive to
//! perturbations of its nuisance functions.

use serde::Serialize;

use super::moments::{adjustment_phi, moment_m, MomentContext, Side};
use crate::data::Observation;
use crate::error::{Error, Result};
use crate::first_stage::Nuisance;
use crate::identification::{population_gain_bounds, DiscreteDistribution};
use crate::policy::PolicyPair;

const SLOPE_TOLERANCE: f64 = 1e-8;
const MIN_ORDER: f64 = 1.9;
/// Residuals below this multiple of the scale count as exactly zero.
const EXACT_FLOOR: f64 = 1e-11;

/// A nuisance coordinate that a perturbation may move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    /// `eta(d, x)`
    Eta(u8),
    /// `p(x)`
    Propensity,
    /// `eta(d, x, z)`
    EtaZ(u8),
    /// `p(x, z)`
    PropensityZ,
    /// `P(Z = z | X = x)`
    InstrumentShare,
}

/// Perturbation direction: the amount added to a component at `(x, z)`
/// per unit of the step size.
pub type Direction<'a> = &'a (dyn Fn(Component, &[f64], Option<f64>) -> f64 + Sync);

/// `gamma_0 + tau * direction`.
pub struct Perturbed<'a> {
    base: &'a dyn Nuisance,
    direction: Direction<'a>,
    tau: f64,
}

impl<'a> Perturbed<'a> {
    pub fn new(base: &'a dyn Nuisance, direction: Direction<'a>, tau: f64) -> Self {
        Perturbed {
            base,
            direction,
            tau,
        }
    }
}

impl Nuisance for Perturbed<'_> {
    fn eta(&self, d: u8, x: &[f64]) -> Result<f64> {
        Ok(self.base.eta(d, x)? + self.tau * (self.direction)(Component::Eta(d), x, None))
    }
    fn propensity(&self, x: &[f64]) -> Result<f64> {
        Ok(self.base.propensity(x)? + self.tau * (self.direction)(Component::Propensity, x, None))
    }
    fn eta_z(&self, d: u8, x: &[f64], z: f64) -> Result<f64> {
        Ok(self.base.eta_z(d, x, z)? + self.tau * (self.direction)(Component::EtaZ(d), x, Some(z)))
    }
    fn propensity_z(&self, x: &[f64], z: f64) -> Result<f64> {
        Ok(self.base.propensity_z(x, z)?
            + self.tau * (self.direction)(Component::PropensityZ, x, Some(z)))
    }
    fn instrument_share(&self, z: f64, x: &[f64]) -> Result<f64> {
        Ok(self.base.instrument_share(z, x)?
            + self.tau * (self.direction)(Component::InstrumentShare, x, Some(z)))
    }
}

/// Outcome of [`orthogonality_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrthogonalityReport {
    /// Population bound endpoint at the true nuisances.
    pub beta0: f64,
    /// `E[psi]` at `tau = 0`.
    pub value_at_zero: f64,
    /// Central-difference derivative of `E[psi]` at `tau = 0`.
    pub slope: f64,
    /// Log-log slope of the remainder `E[psi](tau) - E[psi](0) - slope *
    /// tau` against `tau`; `None` when the remainder is zero to rounding.
    pub order: Option<f64>,
    /// `(tau, remainder)` pairs.
    pub remainders: Vec<(f64, f64)>,
    /// `max(1, y_hi - y_lo)`.
    pub scale: f64,
    pub pass: bool,
}

fn check_range(value: f64, lo: f64, hi: f64, what: &str, tau: f64) -> Result<()> {
    if value >= lo && value <= hi {
        Ok(())
    } else {
        Err(Error::argument(
            "inference",
            format!("perturbed {what} = {value} at tau = {tau} leaves [{lo}, {hi}]"),
        ))
    }
}

/// Every perturbed nuisance that the population defines must stay in its
/// natural range.
fn validate_perturbation(dist: &DiscreteDistribution, gamma: &dyn Nuisance, tau: f64, lo: f64, hi: f64) -> Result<()> {
    for atom in dist.atoms() {
        let x = &atom.x;
        for d in [0, 1] {
            if let Ok(v) = gamma.eta(d, x) {
                check_range(v, lo, hi, "eta(d,x)", tau)?;
            }
        }
        if let Ok(v) = gamma.propensity(x) {
            check_range(v, 0.0, 1.0, "p(x)", tau)?;
        }
        if let Some(z) = atom.z {
            for d in [0, 1] {
                if let Ok(v) = gamma.eta_z(d, x, z) {
                    check_range(v, lo, hi, "eta(d,x,z)", tau)?;
                }
            }
            if let Ok(v) = gamma.propensity_z(x, z) {
                check_range(v, 0.0, 1.0, "p(x,z)", tau)?;
            }
            if let Ok(v) = gamma.instrument_share(z, x) {
                check_range(v, 0.0, 1.0, "P(Z=z|X)", tau)?;
            }
        }
    }
    Ok(())
}

/// Population mean of the moment at `beta` under nuisance `gamma`.
pub fn expected_moment(
    dist: &DiscreteDistribution,
    pair: &PolicyPair,
    ctx: &MomentContext,
    gamma: &dyn Nuisance,
    beta: f64,
    with_adjustment: bool,
) -> Result<f64> {
    let bound = pair.bind(dist.x_names())?;
    let mut total = 0.0;
    for (i, atom) in dist.atoms().iter().enumerate() {
        if atom.prob == 0.0 {
            continue;
        }
        let obs = Observation {
            y: atom.y,
            d: atom.d,
            x: &atom.x,
            z: atom.z,
        };
        let theta = bound.indicators(&atom.x)?;
        let mut psi = moment_m(&obs, beta, gamma, ctx, theta).map_err(|e| e.in_row(i))?;
        if with_adjustment {
            psi += adjustment_phi(&obs, gamma, ctx, theta).map_err(|e| e.in_row(i))?;
        }
        total += atom.prob * psi;
    }
    Ok(total)
}

/// Gateaux-derivative check of `E[psi(w, beta0, gamma_0 + tau * dir)]`.
///
/// `taus` are positive step sizes; the slope at zero is the central
/// difference at the smallest step, and the remainder order is the
/// least-squares log-log slope over all steps. The check passes when
/// `|slope| <= 1e-8 * scale` and the order is at least 1.9 (or the
/// remainder vanishes). `with_adjustment = false` checks the plug-in
/// moment `m` instead of `m + phi`.
pub fn orthogonality_check(
    dist: &DiscreteDistribution,
    pair: &PolicyPair,
    ctx: &MomentContext,
    direction: Direction<'_>,
    taus: &[f64],
    with_adjustment: bool,
) -> Result<OrthogonalityReport> {
    if taus.is_empty() || taus.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::argument("inference", "step sizes must be positive and finite"));
    }
    let truth = dist.nuisance();
    let s = ctx.support;
    let bounds = population_gain_bounds(dist, pair, ctx.spec(), s)?;
    let beta0 = match ctx.side {
        Side::Lower => bounds.beta_l,
        Side::Upper => bounds.beta_u,
    };
    let value_at = |tau: f64| -> Result<f64> {
        let gamma = Perturbed::new(&truth, direction, tau);
        validate_perturbation(dist, &gamma, tau, s.lower, s.upper)?;
        expected_moment(dist, pair, ctx, &gamma, beta0, with_adjustment)
    };
    let value_at_zero = value_at(0.0)?;
    let mut sorted = taus.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = sorted[0];
    let slope = (value_at(h)? - value_at(-h)?) / (2.0 * h);
    let scale = s.width().max(1.0);
    let mut remainders = Vec::with_capacity(sorted.len());
    for &tau in &sorted {
        let r = value_at(tau)? - value_at_zero - slope * tau;
        remainders.push((tau, r));
    }
    let floor = EXACT_FLOOR * scale;
    let order = if remainders.iter().all(|(_, r)| r.abs() <= floor) {
        None
    } else {
        let pts: Vec<(f64, f64)> = remainders
            .iter()
            .filter(|(_, r)| r.abs() > floor)
            .map(|&(t, r)| (t.ln(), r.abs().ln()))
            .collect();
        Some(log_log_slope(&pts))
    };
    let order_ok = order.map_or(true, |o| o >= MIN_ORDER);
    Ok(OrthogonalityReport {
        beta0,
        value_at_zero,
        slope,
        order,
        remainders,
        scale,
        pass: slope.abs() <= SLOPE_TOLERANCE * scale && order_ok,
    })
}

fn log_log_slope(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
