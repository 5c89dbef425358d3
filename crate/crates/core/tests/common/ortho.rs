//! Four-cell population for the local-robustness checks.

use welfare_bounds::identification::{Atom, AssumptionSpec, DiscreteDistribution, Regime};
use welfare_bounds::inference::{orthogonality_check, Component, MomentContext, OrthogonalityReport};
use welfare_bounds::policy::PolicyPair;
use welfare_bounds::{AdjustmentMode, Side, Support};

pub const MASS: [f64; 4] = [0.2, 0.3, 0.25, 0.25];
pub const P: [f64; 4] = [0.3, 0.5, 0.6, 0.45];
// two equally likely outcomes per arm
pub const Y1: [[f64; 2]; 4] = [[12.0, 16.0], [8.0, 11.0], [14.0, 18.0], [3.0, 9.0]];
pub const Y0: [[f64; 2]; 4] = [[4.0, 7.0], [6.0, 10.0], [2.0, 5.0], [9.0, 12.0]];
// delta* = 1{x <= 1}, delta = 1{x >= 1}
pub const THETA10: [f64; 4] = [0.0, 0.0, 1.0, 1.0];
pub const THETA01: [f64; 4] = [1.0, 0.0, 0.0, 0.0];

pub const H1: [f64; 4] = [1.0, -0.5, 0.8, 0.3];
pub const H0: [f64; 4] = [0.4, 1.0, -0.7, 0.2];
pub const HP: [f64; 4] = [0.1, -0.2, 0.15, 0.05];

pub const TAUS: [f64; 4] = [1e-3, 2e-3, 4e-3, 8e-3];

pub fn population() -> DiscreteDistribution {
    let mut atoms = Vec::new();
    for x in 0..4 {
        for y in Y1[x] {
            atoms.push(Atom { y, d: 1, x: vec![x as f64], z: None, prob: MASS[x] * P[x] / 2.0 });
        }
        for y in Y0[x] {
            atoms.push(Atom { y, d: 0, x: vec![x as f64], z: None, prob: MASS[x] * (1.0 - P[x]) / 2.0 });
        }
    }
    DiscreteDistribution::new(vec!["x".into()], atoms).unwrap()
}

pub fn pair() -> PolicyPair {
    PolicyPair::parse("x <= 1", "x >= 1").unwrap()
}

pub fn support() -> Support {
    Support::new(0.0, 20.0).unwrap()
}

#[derive(Clone, Copy, Debug)]
pub enum Dir {
    Treated,
    Control,
    Propensity,
    Joint,
}

pub fn weight(dir: Dir, c: Component, x: usize) -> f64 {
    match (dir, c) {
        (Dir::Treated | Dir::Joint, Component::Eta(1)) => H1[x],
        (Dir::Control | Dir::Joint, Component::Eta(0)) => H0[x],
        (Dir::Propensity | Dir::Joint, Component::Propensity) => HP[x],
        _ => 0.0,
    }
}

/// Derivative of the plug-in moment's expectation along `dir`, from the
/// closed-form worst-case CATE bounds: both bounds move by
/// `p h1 - (1 - p) h0 + (eta1 + eta0 - lo - hi) hp`.
pub fn analytic_slope(regime: Regime, side: Side, dir: Dir) -> f64 {
    let mut total = 0.0;
    for x in 0..4 {
        let eta1 = (Y1[x][0] + Y1[x][1]) / 2.0;
        let eta0 = (Y0[x][0] + Y0[x][1]) / 2.0;
        let g = P[x] * weight(dir, Component::Eta(1), x)
            - (1.0 - P[x]) * weight(dir, Component::Eta(0), x)
            + (eta1 + eta0 - 0.0 - 20.0) * weight(dir, Component::Propensity, x);
        let (a, b) = match side {
            Side::Lower => (THETA10[x], -THETA01[x]),
            Side::Upper => (-THETA01[x], THETA10[x]),
        };
        let a = if regime == Regime::Mtr { 0.0 } else { a };
        total += MASS[x] * (a + b) * g;
    }
    total
}

pub fn run(regime: Regime, side: Side, dir: Dir, with_adjustment: bool) -> OrthogonalityReport {
    let spec = AssumptionSpec::new(regime).unwrap();
    let ctx = MomentContext::new(side, &spec, support(), AdjustmentMode::default()).unwrap();
    let direction = move |c: Component, x: &[f64], _z: Option<f64>| weight(dir, c, x[0] as usize);
    orthogonality_check(&population(), &pair(), &ctx, &direction, &TAUS, with_adjustment).unwrap()
}

pub const CASES: [(Regime, Side); 4] = [
    (Regime::WorstCase, Side::Lower),
    (Regime::WorstCase, Side::Upper),
    (Regime::Mtr, Side::Lower),
    (Regime::Mtr, Side::Upper),
];

