mod common;

use common::ortho::*;
use welfare_bounds::identification::{Atom, AssumptionSpec, DiscreteDistribution, Regime};
use welfare_bounds::inference::{orthogonality_check, Component, MomentContext, OrthogonalityReport};
use welfare_bounds::policy::PolicyPair;
use welfare_bounds::{AdjustmentMode, Side};

#[test]
fn adjusted_moment_is_locally_insensitive() {
    for (regime, side) in CASES {
        for dir in [Dir::Treated, Dir::Control, Dir::Propensity, Dir::Joint] {
            let r = run(regime, side, dir, true);
            assert!(r.pass, "{regime} {side:?} {dir:?}: {r:?}");
            assert!(r.slope.abs() <= 1e-8 * r.scale);
            assert!(r.value_at_zero.abs() < 1e-10, "{r:?}");
            if let Some(order) = r.order {
                assert!(order >= 1.9, "{regime} {side:?} {dir:?}: {r:?}");
            }
        }
    }
}

#[test]
fn joint_perturbation_cross_terms_cancel() {
    // the tau^2 * hp * (h1 + h0) terms of m and phi cancel, so the
    // expectation is exactly linear along a joint direction
    for (regime, side) in CASES {
        let r = run(regime, side, Dir::Joint, true);
        assert_eq!(r.order, None, "{r:?}");
        let plug_in = run(regime, side, Dir::Joint, false);
        if regime == Regime::WorstCase || side == Side::Upper {
            let order = plug_in.order.expect("plug-in moment has a quadratic term");
            assert!((order - 2.0).abs() < 0.05, "{plug_in:?}");
        }
    }
}

#[test]
fn plug_in_moment_has_its_analytic_slope() {
    let mut failures = 0;
    for (regime, side) in CASES {
        for dir in [Dir::Treated, Dir::Control, Dir::Propensity] {
            let r = run(regime, side, dir, false);
            let expected = analytic_slope(regime, side, dir);
            assert!(
                (r.slope - expected).abs() <= 1e-6 * expected.abs().max(1e-3),
                "{regime} {side:?} {dir:?}: {} vs {expected}",
                r.slope
            );
            if expected.abs() > 1e-3 {
                assert!(!r.pass);
                failures += 1;
            }
        }
    }
    assert_eq!(failures, 12);
}

/// Population with a binary instrument, `P(Z = 1 | X)` varying with `x`,
/// and instrument-specific treatment shares.
fn instrument_population() -> DiscreteDistribution {
    const R1: [f64; 2] = [0.4, 0.7];
    const PZ: [[f64; 2]; 2] = [[0.2, 0.6], [0.3, 0.8]];
    let mut atoms = Vec::new();
    for x in 0..2 {
        for z in 0..2 {
            let rz = if z == 1 { R1[x] } else { 1.0 - R1[x] };
            let p = PZ[x][z];
            for (k, y) in Y1[x + 2 * z].into_iter().enumerate() {
                let y = y + k as f64 * z as f64;
                atoms.push(Atom { y, d: 1, x: vec![x as f64], z: Some(z as f64), prob: 0.5 * rz * p / 2.0 });
            }
            for y in Y0[x + 2 * z] {
                atoms.push(Atom { y, d: 0, x: vec![x as f64], z: Some(z as f64), prob: 0.5 * rz * (1.0 - p) / 2.0 });
            }
        }
    }
    DiscreteDistribution::new(vec!["x".into()], atoms).unwrap()
}

fn iv_report(regime: Regime, side: Side, c: Component, mode: AdjustmentMode) -> OrthogonalityReport {
    let spec = AssumptionSpec::binary_iv(regime).unwrap();
    let ctx = MomentContext::new(side, &spec, support(), mode).unwrap();
    let direction = move |comp: Component, x: &[f64], z: Option<f64>| {
        if comp == c { 0.1 + 0.2 * x[0] + 0.3 * z.unwrap_or(0.0) } else { 0.0 }
    };
    let pair = PolicyPair::parse("x <= 0", "x <= 1").unwrap();
    orthogonality_check(&instrument_population(), &pair, &ctx, &direction, &TAUS, true).unwrap()
}

#[test]
fn instrument_weighted_adjustment_is_orthogonal_for_iv() {
    for regime in [Regime::IvWorstCase, Regime::IvMtr] {
        for side in [Side::Lower, Side::Upper] {
            for c in [Component::EtaZ(1), Component::EtaZ(0), Component::PropensityZ] {
                let r = iv_report(regime, side, c, AdjustmentMode::InstrumentWeighted);
                assert!(r.pass, "{regime} {side:?} {c:?}: {r:?}");
            }
        }
    }
}

#[test]
fn unweighted_adjustment_leaves_a_slope_when_the_instrument_is_not_degenerate() {
    let r = iv_report(Regime::IvWorstCase, Side::Lower, Component::EtaZ(1), AdjustmentMode::PaperFaithful);
    assert!(!r.pass, "{r:?}");
}
