//! Polynomial outcome regressions fit by least squares on a QR
//! decomposition of the standardized design.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::error::{Error, Result};

const RANK_TOLERANCE: f64 = 1e-10;

/// All monomials up to a total degree in standardized covariates.
///
/// Covariates are centred and scaled with training moments before
/// expansion; a constant covariate keeps scale 1 so that its monomials are
/// identically zero and show up as rank deficient.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialBasis {
    names: Vec<String>,
    mean: Vec<f64>,
    scale: Vec<f64>,
    exponents: Vec<Vec<u32>>,
}

fn exponents_up_to(p: usize, degree: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for total in 0..=degree {
        let mut current = vec![0u32; p];
        fill(&mut out, &mut current, 0, total);
    }
    out
}

fn fill(out: &mut Vec<Vec<u32>>, current: &mut Vec<u32>, pos: usize, remaining: u32) {
    if pos + 1 >= current.len() {
        if let Some(last) = current.len().checked_sub(1) {
            current[last] = remaining;
            out.push(current.clone());
            current[last] = 0;
        } else if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        fill(out, current, pos + 1, remaining - e);
    }
    current[pos] = 0;
}

impl PolynomialBasis {
    /// Builds the basis from the training covariate rows.
    pub fn fit(names: &[String], rows: &[&[f64]], degree: u32) -> Self {
        let p = names.len();
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; p];
        for row in rows {
            for j in 0..p {
                mean[j] += row[j];
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut scale = vec![0.0; p];
        for row in rows {
            for j in 0..p {
                scale[j] += (row[j] - mean[j]).powi(2);
            }
        }
        for s in scale.iter_mut() {
            *s = (*s / n).sqrt();
            if !(*s > 0.0) {
                *s = 1.0;
            }
        }
        PolynomialBasis {
            names: names.to_vec(),
            mean,
            scale,
            exponents: exponents_up_to(p, degree),
        }
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn features(&self, x: &[f64]) -> Vec<f64> {
        let u: Vec<f64> = x
            .iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect();
        self.exponents
            .iter()
            .map(|e| e.iter().zip(&u).map(|(&k, &v)| v.powi(k as i32)).product())
            .collect()
    }

    pub fn monomial_name(&self, idx: usize) -> String {
        let parts: Vec<String> = self.exponents[idx]
            .iter()
            .zip(&self.names)
            .filter(|(&k, _)| k > 0)
            .map(|(&k, name)| if k == 1 { name.clone() } else { format!("{name}^{k}") })
            .collect();
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }

    pub fn design(&self, rows: &[&[f64]]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(rows.len(), self.len());
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in self.features(row).into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Re-expresses coefficients on standardized monomials as coefficients
    /// on raw monomials, keyed by exponent vector.
    pub fn raw_coefficients(&self, coef: &[f64]) -> BTreeMap<Vec<u32>, f64> {
        let mut out: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (e, &c) in self.exponents.iter().zip(coef) {
            // prod_j ((x_j - m_j) / s_j)^{e_j}, expanded binomially
            let mut terms: Vec<(Vec<u32>, f64)> = vec![(vec![0; e.len()], c)];
            for (j, &k) in e.iter().enumerate() {
                let s = self.scale[j].powi(k as i32);
                let mut next = Vec::new();
                for (exp, coef) in &terms {
                    for i in 0..=k {
                        let mut exp = exp.clone();
                        exp[j] = i;
                        let w = binomial(k, i) * (-self.mean[j]).powi((k - i) as i32) / s;
                        next.push((exp, coef * w));
                    }
                }
                terms = next;
            }
            for (exp, v) in terms {
                *out.entry(exp).or_insert(0.0) += v;
            }
        }
        out
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Solves `min ||a b - y||` by Householder QR.
///
/// A column whose R diagonal falls below a relative tolerance is reported
/// by name as collinear with the columns before it.
pub(crate) fn least_squares(
    a: DMatrix<f64>,
    y: DVector<f64>,
    column_name: impl Fn(usize) -> String,
) -> Result<DVector<f64>> {
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::RankDeficient {
            monomials: (m..n).map(&column_name).collect(),
        });
    }
    let qr = a.qr();
    let r = qr.r();
    let max_diag = (0..n).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    let collinear: Vec<String> = (0..n)
        .filter(|&j| !(r[(j, j)].abs() > RANK_TOLERANCE * max_diag))
        .map(&column_name)
        .collect();
    if !collinear.is_empty() {
        return Err(Error::RankDeficient {
            monomials: collinear,
        });
    }
    let qty = qr.q().transpose() * y;
    r.solve_upper_triangular(&qty)
        .ok_or_else(|| Error::numerical("first-stage", "triangular solve failed"))
}

/// Fitted polynomial model of `E[Y | D = d, X = x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRegression {
    basis: PolynomialBasis,
    coef: Vec<f64>,
}

impl OutcomeRegression {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.basis
            .features(x)
            .iter()
            .zip(&self.coef)
            .map(|(f, c)| f * c)
            .sum()
    }

    pub fn basis(&self) -> &PolynomialBasis {
        &self.basis
    }

    /// Coefficients on standardized monomials.
    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    pub fn raw_coefficients(&self) -> BTreeMap<Vec<u32>, f64> {
        self.basis.raw_coefficients(&self.coef)
    }
}

/// Least-squares regression of `y` on all monomials of the covariates up
/// to `degree`, using training rows with `D = d`.
pub fn fit_outcome_regression(
    data: &Dataset,
    rows: &[usize],
    d: u8,
    degree: u32,
) -> Result<OutcomeRegression> {
    let arm: Vec<usize> = rows.iter().copied().filter(|&i| data.d()[i] == d).collect();
    fit_regression_rows(data, &arm, degree)
        .map_err(|e| match e {
            Error::Argument { .. } => Error::argument(
                "first-stage",
                format!("no training rows with D = {d} for the outcome regression"),
            ),
            other => other,
        })
}

pub(crate) fn fit_regression_rows(
    data: &Dataset,
    rows: &[usize],
    degree: u32,
) -> Result<OutcomeRegression> {
    if rows.is_empty() {
        return Err(Error::argument("first-stage", "empty regression sample"));
    }
    let xs: Vec<&[f64]> = rows.iter().map(|&i| data.covariates(i)).collect();
    let basis = PolynomialBasis::fit(data.x_names(), &xs, degree);
    let design = basis.design(&xs);
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| data.y()[i]));
    let coef = least_squares(design, y, |j| basis.monomial_name(j))?;
    Ok(OutcomeRegression {
        coef: coef.iter().copied().collect(),
        basis,
    })
}
