use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::assumptions::{AssumptionSpec, InstrumentLevel};
use super::cate::cate_bounds;
use super::gain::GainBounds;
use crate::data::Support;
use crate::error::{Error, Result};
use crate::first_stage::Nuisance;
use crate::policy::PolicyPair;

const MASS_TOLERANCE: f64 = 1e-12;

/// One support point of a discrete joint distribution of `(Y, D, X, Z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub y: f64,
    pub d: u8,
    pub x: Vec<f64>,
    pub z: Option<f64>,
    pub prob: f64,
}

/// A fully enumerated discrete distribution of the observables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    x_names: Vec<String>,
    atoms: Vec<Atom>,
}

impl DiscreteDistribution {
    pub fn new(x_names: Vec<String>, atoms: Vec<Atom>) -> Result<Self> {
        let fail = |m: String| Err(Error::argument("identification", m));
        if atoms.is_empty() {
            return fail("a distribution needs at least one atom".into());
        }
        let with_z = atoms[0].z.is_some();
        let mut total = 0.0;
        for (i, a) in atoms.iter().enumerate() {
            if a.x.len() != x_names.len() {
                return fail(format!("atom {i} has {} covariates, expected {}", a.x.len(), x_names.len()));
            }
            if a.d > 1 {
                return fail(format!("atom {i} has treatment {}", a.d));
            }
            if a.z.is_some() != with_z {
                return fail("either every atom or none carries an instrument value".into());
            }
            if !(a.prob >= 0.0) {
                return fail(format!("atom {i} has negative probability {}", a.prob));
            }
            total += a.prob;
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return fail(format!("probabilities sum to {total}, not 1"));
        }
        Ok(DiscreteDistribution { x_names, atoms })
    }

    pub fn x_names(&self) -> &[String] {
        &self.x_names
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Distinct covariate values with their probabilities, in order of
    /// first appearance.
    pub fn covariate_cells(&self) -> Vec<(Vec<f64>, f64)> {
        let mut out: Vec<(Vec<f64>, f64)> = Vec::new();
        for a in &self.atoms {
            match out.iter_mut().find(|(x, _)| key_of(x) == key_of(&a.x)) {
                Some((_, m)) => *m += a.prob,
                None => out.push((a.x.clone(), a.prob)),
            }
        }
        out
    }

    /// Instrument values in ascending order with their marginal
    /// probabilities.
    pub fn instrument_levels(&self) -> Vec<InstrumentLevel> {
        let mut levels: Vec<InstrumentLevel> = Vec::new();
        for a in &self.atoms {
            let Some(z) = a.z else { continue };
            match levels.iter_mut().find(|l| l.value == z + 0.0) {
                Some(l) => l.weight += a.prob,
                None => levels.push(InstrumentLevel {
                    value: z + 0.0,
                    weight: a.prob,
                }),
            }
        }
        levels.sort_by(|a, b| a.value.total_cmp(&b.value));
        levels
    }

    /// Exact conditional means and probabilities of this distribution.
    pub fn nuisance(&self) -> PopulationNuisance {
        PopulationNuisance::new(self)
    }
}

fn key_of(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| (v + 0.0).to_bits()).collect()
}

#[derive(Debug, Clone, Copy, Default)]
struct Mass {
    total: f64,
    arm: [f64; 2],
    y_arm: [f64; 2],
}

impl Mass {
    fn add(&mut self, a: &Atom) {
        self.total += a.prob;
        self.arm[a.d as usize] += a.prob;
        self.y_arm[a.d as usize] += a.prob * a.y;
    }
}

#[derive(Debug, Clone, Default)]
struct CellMass {
    pooled: Mass,
    by_instrument: Vec<(f64, Mass)>,
}

/// The true nuisance functions of a [`DiscreteDistribution`].
#[derive(Debug, Clone)]
pub struct PopulationNuisance {
    cells: HashMap<Vec<u64>, CellMass>,
}

fn zero_cell(what: &str, x: &[f64], z: Option<f64>) -> Error {
    let at = match z {
        Some(z) => format!("x={x:?}, z={z}"),
        None => format!("x={x:?}"),
    };
    Error::EmptyCell {
        cell: format!("{what} conditions on a zero-probability cell ({at})"),
    }
}

impl PopulationNuisance {
    fn new(dist: &DiscreteDistribution) -> Self {
        let mut cells: HashMap<Vec<u64>, CellMass> = HashMap::new();
        for a in &dist.atoms {
            if a.prob == 0.0 {
                continue;
            }
            let cell = cells.entry(key_of(&a.x)).or_default();
            cell.pooled.add(a);
            if let Some(z) = a.z {
                let z = z + 0.0;
                match cell.by_instrument.iter_mut().find(|(v, _)| *v == z) {
                    Some((_, m)) => m.add(a),
                    None => {
                        let mut m = Mass::default();
                        m.add(a);
                        cell.by_instrument.push((z, m));
                    }
                }
            }
        }
        PopulationNuisance { cells }
    }

    fn cell(&self, x: &[f64]) -> Option<&CellMass> {
        self.cells.get(&key_of(x))
    }

    fn level(&self, x: &[f64], z: f64) -> Option<&Mass> {
        let z = z + 0.0;
        self.cell(x)?
            .by_instrument
            .iter()
            .find(|(v, _)| *v == z)
            .map(|(_, m)| m)
    }

    fn arm_mean(m: Option<&Mass>, d: u8, x: &[f64], z: Option<f64>) -> Result<f64> {
        match m {
            Some(m) if m.arm[d as usize] > 0.0 => Ok(m.y_arm[d as usize] / m.arm[d as usize]),
            _ => Err(zero_cell(&format!("E[Y|D={d}]"), x, z)),
        }
    }

    fn share(m: Option<&Mass>, x: &[f64], z: Option<f64>) -> Result<f64> {
        match m {
            Some(m) if m.total > 0.0 => Ok(m.arm[1] / m.total),
            _ => Err(zero_cell("P(D=1)", x, z)),
        }
    }

    /// `P(X = x)`.
    pub fn covariate_mass(&self, x: &[f64]) -> f64 {
        self.cell(x).map_or(0.0, |c| c.pooled.total)
    }
}

impl Nuisance for PopulationNuisance {
    fn eta(&self, d: u8, x: &[f64]) -> Result<f64> {
        Self::arm_mean(self.cell(x).map(|c| &c.pooled), d, x, None)
    }

    fn propensity(&self, x: &[f64]) -> Result<f64> {
        Self::share(self.cell(x).map(|c| &c.pooled), x, None)
    }

    fn eta_z(&self, d: u8, x: &[f64], z: f64) -> Result<f64> {
        Self::arm_mean(self.level(x, z), d, x, Some(z))
    }

    fn propensity_z(&self, x: &[f64], z: f64) -> Result<f64> {
        Self::share(self.level(x, z), x, Some(z))
    }

    fn instrument_share(&self, z: f64, x: &[f64]) -> Result<f64> {
        let cell = self.cell(x).ok_or_else(|| zero_cell("P(Z=z)", x, Some(z)))?;
        Ok(self.level(x, z).map_or(0.0, |m| m.total) / cell.pooled.total)
    }
}

/// Exact welfare-gain bounds of an enumerated population.
pub fn population_gain_bounds(
    dist: &DiscreteDistribution,
    pair: &PolicyPair,
    spec: &AssumptionSpec,
    support: Support,
) -> Result<GainBounds> {
    spec.validate()?;
    if spec.regime.uses_instrument() && dist.atoms[0].z.is_none() {
        return Err(Error::argument(
            "identification",
            format!("regime {} requires an instrument in the distribution", spec.regime),
        ));
    }
    for (i, a) in dist.atoms.iter().enumerate() {
        if !support.contains(a.y) {
            return Err(Error::Domain {
                row: i,
                message: format!("atom outcome {} outside the support", a.y),
            });
        }
    }
    let bound = pair.bind(&dist.x_names)?;
    let nuisance = dist.nuisance();
    let mut beta_l = 0.0;
    let mut beta_u = 0.0;
    let mut diagnostics = Vec::new();
    for (x, mass) in dist.covariate_cells() {
        if mass == 0.0 {
            continue;
        }
        let (t10, t01) = bound.indicators(&x)?;
        if t10 == 0 && t01 == 0 {
            continue;
        }
        let b = cate_bounds(spec, &nuisance, &x, support)?;
        if b.is_crossed() {
            diagnostics.push(format!("CATE lower bound exceeds upper bound at x={x:?}"));
        }
        let (t10, t01) = (t10 as f64, t01 as f64);
        beta_l += mass * (b.lower * t10 - b.upper * t01);
        beta_u += mass * (b.upper * t10 - b.lower * t01);
    }
    Ok(GainBounds {
        beta_l,
        beta_u,
        diagnostics,
    })
}
