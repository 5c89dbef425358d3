//! Logistic regression by iteratively reweighted least squares.

use nalgebra::{DMatrix, DVector};

use super::polynomial::{least_squares, PolynomialBasis};
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 100;
const COEF_TOLERANCE: f64 = 1e-8;
const LOGLIK_TOLERANCE: f64 = 1e-10;
const DIVERGENCE_NORM: f64 = 1e4;
const PERFECT_FIT: f64 = 1e-6;

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(t))` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn log_likelihood(eta: &DVector<f64>, labels: &[u8]) -> f64 {
    eta.iter()
        .zip(labels)
        .map(|(&t, &d)| d as f64 * t - softplus(t))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    basis: PolynomialBasis,
    coef: Vec<f64>,
    iterations: usize,
}

impl LogisticModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let t: f64 = self
            .basis
            .features(x)
            .iter()
            .zip(&self.coef)
            .map(|(f, c)| f * c)
            .sum();
        sigmoid(t)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

fn separation(detail: &str) -> Error {
    Error::Separation(format!(
        "logistic regression does not converge ({detail}); the treatment is (quasi-)separated by \
         the covariates; use cell means for this first stage"
    ))
}

/// Maximum-likelihood logistic regression of `labels` on all monomials of
/// the covariate rows up to `degree`.
///
/// Iterates until the largest coefficient update drops below 1e-8 or the
/// log-likelihood changes by less than 1e-10, for at most 100 iterations.
pub fn fit_logistic(
    names: &[String],
    rows: &[&[f64]],
    labels: &[u8],
    degree: u32,
) -> Result<LogisticModel> {
    if rows.is_empty() {
        return Err(Error::argument("first-stage", "empty logistic regression sample"));
    }
    let treated = labels.iter().filter(|&&d| d == 1).count();
    if treated == 0 || treated == labels.len() {
        return Err(Error::argument(
            "first-stage",
            "logistic regression needs both treatment values in the training sample",
        ));
    }
    let basis = PolynomialBasis::fit(names, rows, degree);
    let x = basis.design(rows);
    let (n, k) = x.shape();
    let mut beta = DVector::zeros(k);
    let mut eta = &x * &beta;
    let mut loglik = log_likelihood(&eta, labels);
    let mut converged = false;
    let mut iterations = 0;
    for iter in 1..=MAX_ITERATIONS {
        iterations = iter;
        let mut a = DMatrix::zeros(n, k);
        let mut rhs = DVector::zeros(n);
        for i in 0..n {
            let p = sigmoid(eta[i]);
            let w = p * (1.0 - p);
            if !(w > 0.0) {
                return Err(separation("fitted probabilities reached 0 or 1"));
            }
            let sw = w.sqrt();
            for j in 0..k {
                a[(i, j)] = sw * x[(i, j)];
            }
            rhs[i] = sw * (eta[i] + (labels[i] as f64 - p) / w);
        }
        let next = least_squares(a, rhs, |j| basis.monomial_name(j))?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(separation("non-finite coefficients"));
        }
        let step = (&next - &beta).amax();
        beta = next;
        eta = &x * &beta;
        let next_loglik = log_likelihood(&eta, labels);
        let change = (next_loglik - loglik).abs();
        loglik = next_loglik;
        if step < COEF_TOLERANCE || change < LOGLIK_TOLERANCE {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(separation(&format!("no convergence in {MAX_ITERATIONS} iterations")));
    }
    if beta.norm() > DIVERGENCE_NORM {
        return Err(separation(&format!("coefficient norm {:.3e}", beta.norm())));
    }
    let max_residual = eta
        .iter()
        .zip(labels)
        .map(|(&t, &d)| (d as f64 - sigmoid(t)).abs())
        .fold(0.0, f64::max);
    if max_residual < PERFECT_FIT {
        return Err(separation("every observation is fitted perfectly"));
    }
    Ok(LogisticModel {
        basis,
        coef: beta.iter().copied().collect(),
        iterations,
    })
}
