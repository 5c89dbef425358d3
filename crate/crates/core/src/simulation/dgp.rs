//! The lognormal selection model used for the coverage study.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::LogNormal;
use serde::{Deserialize, Serialize};

use super::quadrature::integrate;
use crate::data::{Dataset, Support};
use crate::error::{Error, Result};
use crate::first_stage::Nuisance;

const QUAD_TOL: f64 = 1e-10;

/// Parameters of the data-generating process.
///
/// `X` is discrete, `Z ~ Bernoulli(z_prob)` and `U ~ Uniform[0, 1]` are
/// independent of `X`, `D = 1{p(X, Z) >= U}` with logistic `p`, and
/// `Y_d | X, Z, U` is lognormal with mean `m_d(X, U)` and standard
/// deviation `sigma_d`, where `m_d(x, u) = c0 + c1 x + c2 u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub x_levels: Vec<f64>,
    pub x_pmf: Vec<f64>,
    pub z_prob: f64,
    /// Intercept, `x` and `z` coefficients of the logistic index.
    pub propensity: [f64; 3],
    pub m1: [f64; 3],
    pub m0: [f64; 3],
    pub sigma1: f64,
    pub sigma0: f64,
    pub support: Support,
}

impl Default for DgpSpec {
    fn default() -> Self {
        DgpSpec {
            x_levels: (7..=18).map(f64::from).collect(),
            x_pmf: vec![
                0.01, 0.06, 0.07, 0.11, 0.13, 0.43, 0.07, 0.06, 0.02, 0.02, 0.01, 0.01,
            ],
            z_prob: 2.0 / 3.0,
            propensity: [-4.89, 0.05, 5.0],
            m1: [5591.0, 1027.0, 2000.0],
            m0: [-1127.0, 1389.0, 1000.0],
            sigma1: 11000.0,
            sigma0: 11000.0,
            support: Support {
                lower: 0.0,
                upper: 160000.0,
            },
        }
    }
}

/// Underlying normal parameters `(mu, s)` of a lognormal with the given
/// mean and standard deviation.
pub fn lognormal_params(mean: f64, sd: f64) -> (f64, f64) {
    let mu = (mean * mean / (sd * sd + mean * mean).sqrt()).ln();
    let s = (sd * sd / (mean * mean) + 1.0).ln().sqrt();
    (mu, s)
}

impl DgpSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::argument("simulation", m));
        if self.x_levels.is_empty() || self.x_levels.len() != self.x_pmf.len() {
            return fail("x_levels and x_pmf must be nonempty and of equal length".into());
        }
        if self.x_pmf.iter().any(|&p| !(p >= 0.0)) {
            return fail("x_pmf entries must be nonnegative".into());
        }
        let total: f64 = self.x_pmf.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return fail(format!("x_pmf sums to {total}, not 1"));
        }
        if !(self.z_prob >= 0.0 && self.z_prob <= 1.0) {
            return fail(format!("z_prob {} outside [0, 1]", self.z_prob));
        }
        if !(self.sigma1 > 0.0 && self.sigma0 > 0.0) {
            return fail("sigmas must be positive".into());
        }
        for &x in &self.x_levels {
            for u in [0.0, 1.0] {
                for d in [0, 1] {
                    if !(self.mean(d, x, u) > 0.0) {
                        return fail(format!("m{d}({x}, {u}) is not positive; lognormal mean undefined"));
                    }
                }
            }
        }
        Ok(())
    }

    /// `p(x, z)`.
    pub fn propensity(&self, x: f64, z: f64) -> f64 {
        let [a, b, c] = self.propensity;
        1.0 / (1.0 + (-(a + b * x + c * z)).exp())
    }

    /// `m_d(x, u)`.
    pub fn mean(&self, d: u8, x: f64, u: f64) -> f64 {
        let [a, b, c] = if d == 1 { self.m1 } else { self.m0 };
        a + b * x + c * u
    }

    pub fn sigma(&self, d: u8) -> f64 {
        if d == 1 {
            self.sigma1
        } else {
            self.sigma0
        }
    }

    /// `P(Z = z)`.
    pub fn z_mass(&self, z: f64) -> f64 {
        if z == 1.0 {
            self.z_prob
        } else if z == 0.0 {
            1.0 - self.z_prob
        } else {
            0.0
        }
    }
}

/// Draws `n` observations into `(y, d, x, z)` columns named `y`, `d`, `x`
/// and `z`.
///
/// Per observation the generator consumes, in order: the `X` index, the
/// `Z` uniform, `U`, and the lognormal draw for the realized arm. Outcome
/// draws above the upper support bound are set to it.
pub fn dgp_sample_with<R: Rng + ?Sized>(spec: &DgpSpec, n: usize, rng: &mut R) -> Result<Dataset> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::argument("simulation", "sample size must be at least 1"));
    }
    let x_dist = WeightedIndex::new(&spec.x_pmf)
        .map_err(|e| Error::argument("simulation", format!("invalid x_pmf: {e}")))?;
    let mut y = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    for _ in 0..n {
        let xi = spec.x_levels[x_dist.sample(rng)];
        let zi = if rng.random::<f64>() < spec.z_prob { 1.0 } else { 0.0 };
        let u: f64 = rng.random();
        let di = (spec.propensity(xi, zi) >= u) as u8;
        let (mu, s) = lognormal_params(spec.mean(di, xi, u), spec.sigma(di));
        let draw = LogNormal::new(mu, s)
            .map_err(|e| Error::numerical("simulation", format!("lognormal parameters: {e}")))?
            .sample(rng);
        y.push(draw.min(spec.support.upper));
        d.push(di);
        x.push(xi);
        z.push(zi);
    }
    Dataset::new(y, d, vec!["x".into()], x, Some(("z".into(), z)), spec.support)
}

/// [`dgp_sample_with`] on a ChaCha20 stream seeded with `seed`.
pub fn dgp_sample(spec: &DgpSpec, n: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    dgp_sample_with(spec, n, &mut rng)
}

/// The true nuisance functions of a [`DgpSpec`].
///
/// Conditional means are integrals of `m_d(x, u)` over the `U` values that
/// select each arm, computed once per `(x, z, d)` by adaptive quadrature;
/// pooled means average them with the Bayes weights `P(Z = z | D = d, X = x)`.
#[derive(Debug, Clone)]
pub struct DgpNuisance {
    spec: DgpSpec,
    /// `eta_z[x index][z][d]`
    eta_z: Vec<[[Option<f64>; 2]; 2]>,
}

impl DgpNuisance {
    pub fn new(spec: &DgpSpec) -> Result<Self> {
        spec.validate()?;
        let mut eta_z = Vec::with_capacity(spec.x_levels.len());
        for &x in &spec.x_levels {
            let mut table = [[None; 2]; 2];
            for z in [0usize, 1] {
                let p = spec.propensity(x, z as f64);
                for d in [0u8, 1] {
                    let f = |u: f64| spec.mean(d, x, u);
                    let (lo, hi, prob) = if d == 1 { (0.0, p, p) } else { (p, 1.0, 1.0 - p) };
                    if prob > 0.0 {
                        table[z][d as usize] = Some(integrate(&f, lo, hi, QUAD_TOL)? / prob);
                    }
                }
            }
            eta_z.push(table);
        }
        Ok(DgpNuisance {
            spec: spec.clone(),
            eta_z,
        })
    }

    pub fn spec(&self) -> &DgpSpec {
        &self.spec
    }

    fn x_index(&self, x: &[f64]) -> Result<usize> {
        match x {
            [v] => self.spec.x_levels.iter().position(|l| l == v),
            _ => None,
        }
        .ok_or_else(|| Error::EmptyCell {
            cell: format!("x={x:?} is not a support point of the data-generating process"),
        })
    }

    fn z_index(z: f64) -> Result<usize> {
        if z == 0.0 {
            Ok(0)
        } else if z == 1.0 {
            Ok(1)
        } else {
            Err(Error::EmptyCell {
                cell: format!("z={z} is not a support point of the data-generating process"),
            })
        }
    }

    fn arm_probability(&self, d: u8, x: f64, z: f64) -> f64 {
        let p = self.spec.propensity(x, z);
        if d == 1 {
            p
        } else {
            1.0 - p
        }
    }

    /// `P(Z = z | D = d, X = x)`.
    pub fn instrument_given_arm(&self, z: f64, d: u8, x: f64) -> Result<f64> {
        Self::z_index(z)?;
        let num = self.spec.z_mass(z) * self.arm_probability(d, x, z);
        let den: f64 = [0.0, 1.0]
            .iter()
            .map(|&v| self.spec.z_mass(v) * self.arm_probability(d, x, v))
            .sum();
        if den == 0.0 {
            return Err(Error::EmptyCell {
                cell: format!("P(D={d}|X={x}) is zero"),
            });
        }
        Ok(num / den)
    }

    /// `E[Y_1 - Y_0 | X = x]`, the integral of `m_1 - m_0` over `u`.
    pub fn cate(&self, x: f64) -> Result<f64> {
        integrate(&|u| self.spec.mean(1, x, u) - self.spec.mean(0, x, u), 0.0, 1.0, QUAD_TOL)
    }
}

impl Nuisance for DgpNuisance {
    fn eta(&self, d: u8, x: &[f64]) -> Result<f64> {
        let xv = self.spec.x_levels[self.x_index(x)?];
        let mut total = 0.0;
        for z in [0.0, 1.0] {
            let w = self.instrument_given_arm(z, d, xv)?;
            if w > 0.0 {
                total += w * self.eta_z(d, x, z)?;
            }
        }
        Ok(total)
    }

    fn propensity(&self, x: &[f64]) -> Result<f64> {
        let xv = self.spec.x_levels[self.x_index(x)?];
        Ok([0.0, 1.0]
            .iter()
            .map(|&z| self.spec.z_mass(z) * self.spec.propensity(xv, z))
            .sum())
    }

    fn eta_z(&self, d: u8, x: &[f64], z: f64) -> Result<f64> {
        let i = self.x_index(x)?;
        self.eta_z[i][Self::z_index(z)?][d as usize].ok_or_else(|| Error::EmptyCell {
            cell: format!(
                "P(D={d}|X={},Z={z}) = 0; E[Y|D={d},X,Z] is undefined",
                self.spec.x_levels[i]
            ),
        })
    }

    fn propensity_z(&self, x: &[f64], z: f64) -> Result<f64> {
        let xv = self.spec.x_levels[self.x_index(x)?];
        Self::z_index(z)?;
        Ok(self.spec.propensity(xv, z))
    }

    fn instrument_share(&self, z: f64, x: &[f64]) -> Result<f64> {
        self.x_index(x)?;
        Self::z_index(z)?;
        Ok(self.spec.z_mass(z))
    }
}
