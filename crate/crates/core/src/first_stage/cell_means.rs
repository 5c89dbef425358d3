//! Empirical-mean nuisances for discrete conditioning variables.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::Nuisance;
use crate::data::Dataset;
use crate::error::{Error, Result};

/// What to return when a nuisance is requested for a cell with no training
/// observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmptyCellPolicy {
    #[default]
    Error,
    Zero,
}

#[derive(Debug, Clone, Copy, Default)]
struct Arm {
    count: usize,
    sum_y: f64,
}

#[derive(Debug, Clone, Default)]
struct Cell {
    count: usize,
    arms: [Arm; 2],
}

impl Cell {
    fn add(&mut self, y: f64, d: u8) {
        self.count += 1;
        let arm = &mut self.arms[d as usize];
        arm.count += 1;
        arm.sum_y += y;
    }
}

#[derive(Debug, Clone, Default)]
struct CovariateCell {
    pooled: Cell,
    by_instrument: Vec<(f64, Cell)>,
}

fn key_of(x: &[f64]) -> Vec<u64> {
    // +0.0 and -0.0 share a cell
    x.iter().map(|v| (v + 0.0).to_bits()).collect()
}

fn describe(x: &[f64], z: Option<f64>) -> String {
    let xs: Vec<String> = x.iter().map(|v| v.to_string()).collect();
    match z {
        Some(z) => format!("x=({}), z={z}", xs.join(", ")),
        None => format!("x=({})", xs.join(", ")),
    }
}

/// Cell means of `Y` by `(D, X)` and `(D, X, Z)`, treatment shares by `X`
/// and `(X, Z)`, and instrument shares by `X`.
#[derive(Debug, Clone)]
pub struct CellMeans {
    cells: HashMap<Vec<u64>, CovariateCell>,
    policy: EmptyCellPolicy,
}

/// Fits cell means on the given training rows.
pub fn fit_cell_means(data: &Dataset, rows: &[usize], policy: EmptyCellPolicy) -> Result<CellMeans> {
    if rows.is_empty() {
        return Err(Error::argument("first-stage", "cell means need at least one training row"));
    }
    let mut cells: HashMap<Vec<u64>, CovariateCell> = HashMap::new();
    for &i in rows {
        let obs = data.observation(i);
        let cell = cells.entry(key_of(obs.x)).or_default();
        cell.pooled.add(obs.y, obs.d);
        if let Some(z) = obs.z {
            let z = z + 0.0;
            match cell.by_instrument.iter_mut().find(|(level, _)| *level == z) {
                Some((_, c)) => c.add(obs.y, obs.d),
                None => {
                    let mut c = Cell::default();
                    c.add(obs.y, obs.d);
                    cell.by_instrument.push((z, c));
                }
            }
        }
    }
    Ok(CellMeans { cells, policy })
}

impl CellMeans {
    fn empty(&self, x: &[f64], z: Option<f64>, what: &str) -> Result<f64> {
        match self.policy {
            EmptyCellPolicy::Zero => Ok(0.0),
            EmptyCellPolicy::Error => Err(Error::EmptyCell {
                cell: format!("{what} at {}", describe(x, z)),
            }),
        }
    }

    fn covariate_cell(&self, x: &[f64]) -> Option<&CovariateCell> {
        self.cells.get(&key_of(x))
    }

    fn instrument_cell(&self, x: &[f64], z: f64) -> Option<&Cell> {
        let z = z + 0.0;
        self.covariate_cell(x)?
            .by_instrument
            .iter()
            .find(|(level, _)| *level == z)
            .map(|(_, c)| c)
    }

    fn arm_mean(&self, cell: Option<&Cell>, d: u8, x: &[f64], z: Option<f64>) -> Result<f64> {
        match cell.map(|c| c.arms[d as usize]) {
            Some(arm) if arm.count > 0 => Ok(arm.sum_y / arm.count as f64),
            _ => self.empty(x, z, &format!("E[Y|D={d}]")),
        }
    }

    fn share(&self, cell: Option<&Cell>, x: &[f64], z: Option<f64>) -> Result<f64> {
        match cell {
            Some(c) if c.count > 0 => Ok(c.arms[1].count as f64 / c.count as f64),
            _ => self.empty(x, z, "P(D=1)"),
        }
    }

    /// Number of training rows in the covariate cell of `x`.
    pub fn cell_count(&self, x: &[f64]) -> usize {
        self.covariate_cell(x).map_or(0, |c| c.pooled.count)
    }
}

impl Nuisance for CellMeans {
    fn eta(&self, d: u8, x: &[f64]) -> Result<f64> {
        self.arm_mean(self.covariate_cell(x).map(|c| &c.pooled), d, x, None)
    }

    fn propensity(&self, x: &[f64]) -> Result<f64> {
        self.share(self.covariate_cell(x).map(|c| &c.pooled), x, None)
    }

    fn eta_z(&self, d: u8, x: &[f64], z: f64) -> Result<f64> {
        self.arm_mean(self.instrument_cell(x, z), d, x, Some(z))
    }

    fn propensity_z(&self, x: &[f64], z: f64) -> Result<f64> {
        self.share(self.instrument_cell(x, z), x, Some(z))
    }

    fn instrument_share(&self, z: f64, x: &[f64]) -> Result<f64> {
        let Some(cell) = self.covariate_cell(x) else {
            return self.empty(x, Some(z), "P(Z=z)");
        };
        let count = self.instrument_cell(x, z).map_or(0, |c| c.count);
        Ok(count as f64 / cell.pooled.count as f64)
    }
}
