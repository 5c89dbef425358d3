mod common;

use common::{from_groups, support, Group, Threshold};
use proptest::prelude::*;
use welfare_bounds::identification::{
    cate_bounds, population_gain_bounds, AssumptionSpec, GainBounds, Regime,
};
use welfare_bounds::policy::PolicyPair;
use welfare_bounds::{DiscreteDistribution, Nuisance, Result};

/// Arbitrary nuisance values, constant in `x`.
#[derive(Debug, Clone)]
struct Fixed {
    eta: [f64; 2],
    p: f64,
    eta_z: [[f64; 2]; 2],
    p_z: [f64; 2],
}

impl Nuisance for Fixed {
    fn eta(&self, d: u8, _x: &[f64]) -> Result<f64> {
        Ok(self.eta[d as usize])
    }
    fn propensity(&self, _x: &[f64]) -> Result<f64> {
        Ok(self.p)
    }
    fn eta_z(&self, d: u8, _x: &[f64], z: f64) -> Result<f64> {
        Ok(self.eta_z[z as usize][d as usize])
    }
    fn propensity_z(&self, _x: &[f64], z: f64) -> Result<f64> {
        Ok(self.p_z[z as usize])
    }
}

fn fixed_strategy() -> impl Strategy<Value = Fixed> {
    (
        [0.0..=20.0f64, 0.0..=20.0f64],
        0.0..=1.0f64,
        [[0.0..=20.0f64, 0.0..=20.0f64], [0.0..=20.0f64, 0.0..=20.0f64]],
        [0.0..=1.0f64, 0.0..=1.0f64],
    )
        .prop_map(|(eta, p, eta_z, p_z)| Fixed { eta, p, eta_z, p_z })
}

fn general_population() -> impl Strategy<Value = Vec<Group>> {
    prop::collection::vec((0u8..=20, 0u8..2, 0u8..3, 0u8..2, 1u32..5), 2..24).prop_map(|rows| {
        rows.into_iter()
            .map(|(y, d, x, z, count)| Group {
                y: y as f64,
                d,
                x: x as f64,
                z: z as f64,
                count,
            })
            .collect()
    })
}

fn threshold_population() -> impl Strategy<Value = Threshold> {
    (
        prop::collection::vec(1u32..5, 1..=3),
        (1u32..5, 1u32..5),
        prop::collection::vec((0usize..=4, 0usize..=4), 3),
        prop::collection::vec(prop::collection::vec(0u8..=20, 4), 3),
        prop::collection::vec(prop::collection::vec(0u8..=20, 4), 3),
    )
        .prop_map(|(x_mass, (z0, z1), ks, y1, y0)| {
            let nx = x_mass.len();
            Threshold {
                k: ks[..nx].iter().map(|&(a, b)| [a.min(b), a.max(b)]).collect(),
                y1: y1[..nx].iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect(),
                y0: y0[..nx].iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect(),
                x_mass,
                z_mass: [z0, z1],
            }
        })
}

const EXPANSION: (&str, &str) = ("x <= 0", "x <= 1");
const CONTRACTION: (&str, &str) = ("x <= 1", "x <= 0");
const MIXED: (&str, &str) = ("x >= 1", "x <= 1");

fn bounds(dist: &DiscreteDistribution, pair: (&str, &str), spec: &AssumptionSpec) -> GainBounds {
    let pair = PolicyPair::parse(pair.0, pair.1).unwrap();
    population_gain_bounds(dist, &pair, spec, support()).unwrap()
}

fn contains(outer: &GainBounds, inner: &GainBounds) -> bool {
    let tol = 1e-9;
    inner.beta_l >= outer.beta_l - tol && inner.beta_u <= outer.beta_u + tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn worst_case_cate_straddles_zero(fit in fixed_strategy()) {
        for regime in [Regime::WorstCase, Regime::Mtr] {
            let spec = AssumptionSpec::new(regime).unwrap();
            let b = cate_bounds(&spec, &fit, &[0.0], support()).unwrap();
            prop_assert!(b.lower <= 1e-12 && b.upper >= -1e-12, "{regime}: {b:?}");
            prop_assert!(b.upper - b.lower <= 20.0 + 1e-9);
        }
    }

    #[test]
    fn iv_cate_lies_inside_the_scan_of_each_level(fit in fixed_strategy()) {
        // every IV bound is the intersection over levels, so it cannot be
        // wider than the single-level worst-case bound at either level
        let spec = AssumptionSpec::discrete_iv(Regime::IvWorstCase, &[0.0, 1.0]).unwrap();
        let b = cate_bounds(&spec, &fit, &[0.0], support()).unwrap();
        for z in 0..2 {
            let (e1, e0, p) = (fit.eta_z[z][1], fit.eta_z[z][0], fit.p_z[z]);
            let lo = (e1 - 20.0) * p + (0.0 - e0) * (1.0 - p);
            let hi = (e1 - 0.0) * p + (20.0 - e0) * (1.0 - p);
            prop_assert!(b.lower >= lo - 1e-9 && b.upper <= hi + 1e-9);
        }
    }

    #[test]
    fn worst_case_gain_bounds_straddle_zero(groups in general_population()) {
        let (dist, _) = from_groups(&groups);
        let spec = AssumptionSpec::new(Regime::WorstCase).unwrap();
        for pair in [EXPANSION, CONTRACTION, MIXED] {
            let b = bounds(&dist, pair, &spec);
            prop_assert!(b.beta_l <= b.beta_u);
            prop_assert!(b.beta_l <= 1e-12 && b.beta_u >= -1e-12, "{b:?}");
        }
    }

    #[test]
    fn mtr_is_one_sided_under_ordered_policies(groups in general_population()) {
        let (dist, _) = from_groups(&groups);
        let mtr = AssumptionSpec::new(Regime::Mtr).unwrap();
        let wc = AssumptionSpec::new(Regime::WorstCase).unwrap();
        let up = bounds(&dist, EXPANSION, &mtr);
        prop_assert_eq!(up.beta_l, 0.0);
        prop_assert!(up.beta_u >= 0.0);
        let down = bounds(&dist, CONTRACTION, &mtr);
        prop_assert_eq!(down.beta_u, 0.0);
        prop_assert!(down.beta_l <= 0.0);
        for pair in [EXPANSION, CONTRACTION, MIXED] {
            prop_assert!(contains(&bounds(&dist, pair, &wc), &bounds(&dist, pair, &mtr)));
        }
    }

    #[test]
    fn instrument_bounds_nest_inside_worst_case(t in threshold_population()) {
        let (dist, _) = from_groups(&t.groups());
        let levels = dist.instrument_levels();
        for pair in [EXPANSION, CONTRACTION, MIXED] {
            let wc = bounds(&dist, pair, &AssumptionSpec::new(Regime::WorstCase).unwrap());
            let mtr = bounds(&dist, pair, &AssumptionSpec::new(Regime::Mtr).unwrap());
            let iv = bounds(&dist, pair, &AssumptionSpec::binary_iv(Regime::IvWorstCase).unwrap());
            let iv_mtr = bounds(&dist, pair, &AssumptionSpec::binary_iv(Regime::IvMtr).unwrap());
            let miv = bounds(&dist, pair, &AssumptionSpec::miv(Regime::MivWorstCase, levels.clone()).unwrap());
            prop_assert!(iv.beta_l <= iv.beta_u + 1e-9, "{iv:?}");
            prop_assert!(contains(&wc, &iv), "{wc:?} {iv:?}");
            prop_assert!(contains(&mtr, &iv_mtr), "{mtr:?} {iv_mtr:?}");
            prop_assert!(contains(&wc, &miv), "{wc:?} {miv:?}");
            prop_assert!(contains(&miv, &iv), "{miv:?} {iv:?}");
        }
    }
}
