mod common;

use common::{from_groups, support, Group, Threshold};
use proptest::prelude::*;
use welfare_bounds::identification::{
    cate_bounds, plug_in_gain_bounds, population_gain_bounds, AssumptionSpec, Regime,
};
use welfare_bounds::policy::PolicyPair;
use welfare_bounds::first_stage::fit_cell_means;
use welfare_bounds::{DiscreteDistribution, EmptyCellPolicy, FoldAssignment};

const PAIRS: [(&str, &str); 4] = [
    ("x <= 0", "x <= 1"),
    ("x >= 1", "x <= 1"),
    ("x == 2", "x <= 0"),
    ("x <= 2", "x == 1"),
];

fn spec_for(regime: Regime, dist: &DiscreteDistribution) -> AssumptionSpec {
    if regime.is_miv() {
        AssumptionSpec::miv(regime, dist.instrument_levels()).unwrap()
    } else if regime.is_iv() {
        AssumptionSpec::discrete_iv(regime, &[0.0, 1.0]).unwrap()
    } else {
        AssumptionSpec::new(regime).unwrap()
    }
}

fn assert_equivalent(groups: &[Group], pair: &PolicyPair) {
    let (dist, data) = from_groups(groups);
    let rows: Vec<usize> = (0..data.len()).collect();
    let fit = fit_cell_means(&data, &rows, EmptyCellPolicy::Error).unwrap();
    let folds = FoldAssignment::single(data.len());
    for regime in Regime::ALL {
        let spec = spec_for(regime, &dist);
        let plug = plug_in_gain_bounds(&data, pair, &spec, std::slice::from_ref(&fit), &folds).unwrap();
        let pop = population_gain_bounds(&dist, pair, &spec, support()).unwrap();
        assert!((plug.beta_l - pop.beta_l).abs() < 1e-10, "{regime}: {plug:?} vs {pop:?}");
        assert!((plug.beta_u - pop.beta_u).abs() < 1e-10, "{regime}: {plug:?} vs {pop:?}");
    }
}

fn general_groups(nx: usize, counts: &[u32], ys: &[u8]) -> Vec<Group> {
    let mut out = Vec::new();
    let mut idx = 0;
    for x in 0..nx {
        for z in 0..2 {
            for d in 0..2u8 {
                for _ in 0..2 {
                    out.push(Group {
                        y: ys[idx] as f64,
                        d,
                        x: x as f64,
                        z: z as f64,
                        count: counts[idx],
                    });
                    idx += 1;
                }
            }
        }
    }
    out
}

#[test]
fn hand_built_population_matches() {
    let groups = vec![
        Group { y: 10.0, d: 1, x: 0.0, z: 1.0, count: 3 },
        Group { y: 4.0, d: 1, x: 0.0, z: 0.0, count: 1 },
        Group { y: 6.0, d: 0, x: 0.0, z: 0.0, count: 2 },
        Group { y: 2.0, d: 0, x: 0.0, z: 1.0, count: 1 },
        Group { y: 12.0, d: 1, x: 1.0, z: 1.0, count: 2 },
        Group { y: 1.0, d: 0, x: 1.0, z: 0.0, count: 4 },
        Group { y: 7.0, d: 1, x: 1.0, z: 0.0, count: 1 },
        Group { y: 3.0, d: 0, x: 1.0, z: 1.0, count: 2 },
    ];
    for (s, d) in PAIRS {
        assert_equivalent(&groups, &PolicyPair::parse(s, d).unwrap());
    }
}

#[test]
fn empty_arm_is_skipped_in_both() {
    // nobody is treated at x = 1, z = 0
    let groups = vec![
        Group { y: 10.0, d: 1, x: 0.0, z: 1.0, count: 2 },
        Group { y: 6.0, d: 0, x: 0.0, z: 0.0, count: 2 },
        Group { y: 12.0, d: 1, x: 1.0, z: 1.0, count: 1 },
        Group { y: 1.0, d: 0, x: 1.0, z: 0.0, count: 3 },
        Group { y: 5.0, d: 0, x: 1.0, z: 1.0, count: 1 },
    ];
    assert_equivalent(&groups, &PolicyPair::parse("x <= 0", "x <= 1").unwrap());
}

fn threshold_strategy() -> impl Strategy<Value = Threshold> {
    let m = 3usize;
    (
        prop::collection::vec(1u32..4, 1..=3),
        (1u32..4, 1u32..4),
        prop::collection::vec((0usize..=3, 0usize..=3), 3),
        prop::collection::vec(prop::collection::vec(0u8..=20, m), 3),
        prop::collection::vec(prop::collection::vec(0u8..=20, m), 3),
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

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plug_in_equals_population_for_every_regime(
        nx in 1usize..=3,
        counts in prop::collection::vec(1u32..4, 24),
        ys in prop::collection::vec(0u8..=20, 24),
        pair_idx in 0usize..PAIRS.len(),
    ) {
        let groups = general_groups(nx, &counts, &ys);
        let (s, d) = PAIRS[pair_idx];
        assert_equivalent(&groups, &PolicyPair::parse(s, d).unwrap());
    }

    #[test]
    fn plug_in_equals_population_on_threshold_models(t in threshold_strategy(), pair_idx in 0usize..PAIRS.len()) {
        let (s, d) = PAIRS[pair_idx];
        assert_equivalent(&t.groups(), &PolicyPair::parse(s, d).unwrap());
    }

    #[test]
    fn binary_shortcut_equals_general_scan(t in threshold_strategy(), pair_idx in 0usize..PAIRS.len()) {
        let (dist, _) = from_groups(&t.groups());
        let truth = dist.nuisance();
        let (s, d) = PAIRS[pair_idx];
        let pair = PolicyPair::parse(s, d).unwrap();
        for regime in [Regime::IvWorstCase, Regime::IvMtr] {
            let shortcut = AssumptionSpec::binary_iv(regime).unwrap();
            let scan = AssumptionSpec::discrete_iv(regime, &[0.0, 1.0]).unwrap();
            for (x, _) in dist.covariate_cells() {
                let a = cate_bounds(&shortcut, &truth, &x, support()).unwrap();
                let b = cate_bounds(&scan, &truth, &x, support()).unwrap();
                prop_assert!((a.lower - b.lower).abs() < 1e-12, "{a:?} vs {b:?}");
                prop_assert!((a.upper - b.upper).abs() < 1e-12, "{a:?} vs {b:?}");
            }
            let a = population_gain_bounds(&dist, &pair, &shortcut, support()).unwrap();
            let b = population_gain_bounds(&dist, &pair, &scan, support()).unwrap();
            prop_assert!((a.beta_l - b.beta_l).abs() < 1e-12);
            prop_assert!((a.beta_u - b.beta_u).abs() < 1e-12);
        }
    }
}
