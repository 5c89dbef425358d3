//! Gauss-Legendre quadrature with adaptive interval bisection.

use std::sync::OnceLock;

use crate::error::{Error, Result};

const NODES: usize = 64;
const MAX_DEPTH: u32 = 40;

/// Nodes and weights of the 64-point rule on [-1, 1], from Newton
/// iteration on the Legendre polynomial.
fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = NODES;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // three-term recurrence for P_n(x) and its derivative
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        (nodes, weights)
    })
}

/// Single application of the 64-point rule on `[a, b]`.
pub fn gauss_legendre(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (nodes, weights) = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    half * nodes
        .iter()
        .zip(weights)
        .map(|(&t, &w)| w * f(mid + half * t))
        .sum::<f64>()
}

/// Integral of `f` over `[a, b]` to relative tolerance `rel_tol`.
///
/// An interval is accepted when the rule on the whole interval agrees
/// with the sum over its two halves to within `rel_tol` of the running
/// estimate (with an absolute floor for integrals near zero); otherwise
/// both halves are refined.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::argument("simulation", "integration limits must be finite"));
    }
    if a == b {
        return Ok(0.0);
    }
    let whole = gauss_legendre(f, a, b);
    let value = refine(f, a, b, whole, rel_tol, whole.abs().max(1e-300), 0)?;
    if !value.is_finite() {
        return Err(Error::numerical("simulation", "non-finite integral"));
    }
    Ok(value)
}

fn refine(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    whole: f64,
    rel_tol: f64,
    magnitude: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let left = gauss_legendre(f, a, m);
    let right = gauss_legendre(f, m, b);
    let split = left + right;
    if (split - whole).abs() <= rel_tol * magnitude.max(split.abs()) {
        return Ok(split);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::numerical(
            "simulation",
            format!("quadrature did not reach relative tolerance {rel_tol} on [{a}, {b}]"),
        ));
    }
    Ok(refine(f, a, m, left, rel_tol, magnitude, depth + 1)?
        + refine(f, m, b, right, rel_tol, magnitude, depth + 1)?)
}
