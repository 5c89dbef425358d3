use welfare_bounds::first_stage::{fit_cell_means, EmptyCellPolicy};
use welfare_bounds::identification::{
    cate_bounds, population_gain_bounds, weighted_gain_bounds, AssumptionSpec, Atom, Regime,
};
use welfare_bounds::policy::PolicyPair;
use welfare_bounds::{Dataset, DiscreteDistribution, FoldAssignment, Support};

fn support() -> Support {
    Support::new(0.0, 20.0).unwrap()
}

/// x = 1: eta(1) = 10, eta(0) = 5, p = 0.5; x = 0: eta(1) = eta(0) = 4,
/// p = 0.5; equal mass on both cells.
fn two_cells() -> (DiscreteDistribution, Dataset) {
    let rows = [(10.0, 1, 1.0), (5.0, 0, 1.0), (4.0, 1, 0.0), (4.0, 0, 0.0)];
    let atoms = rows
        .iter()
        .map(|&(y, d, x)| Atom { y, d, x: vec![x], z: None, prob: 0.25 })
        .collect();
    let dist = DiscreteDistribution::new(vec!["x".into()], atoms).unwrap();
    let data = Dataset::new(
        rows.iter().map(|r| r.0).collect(),
        rows.iter().map(|r| r.1).collect(),
        vec!["x".into()],
        rows.iter().map(|r| r.2).collect(),
        None,
        support(),
    )
    .unwrap();
    (dist, data)
}

#[test]
fn population_example() {
    let (dist, _) = two_cells();
    let pair = PolicyPair::parse("x < 0", "x == 1").unwrap();
    let b = population_gain_bounds(&dist, &pair, &AssumptionSpec::new(Regime::WorstCase).unwrap(), support())
        .unwrap();
    assert!((b.beta_l + 3.75).abs() < 1e-12, "{b:?}");
    assert!((b.beta_u - 6.25).abs() < 1e-12, "{b:?}");
}

#[test]
fn identical_policies_give_zero() {
    let (dist, _) = two_cells();
    let pair = PolicyPair::parse("x <= 0", "x <= 0").unwrap();
    for regime in [Regime::WorstCase, Regime::Mtr] {
        let b = population_gain_bounds(&dist, &pair, &AssumptionSpec::new(regime).unwrap(), support()).unwrap();
        assert_eq!((b.beta_l, b.beta_u), (0.0, 0.0));
    }
}

#[test]
fn cate_examples() {
    let (dist, _) = two_cells();
    let truth = dist.nuisance();
    let wc = cate_bounds(&AssumptionSpec::new(Regime::WorstCase).unwrap(), &truth, &[1.0], support()).unwrap();
    assert_eq!((wc.lower, wc.upper), (-7.5, 12.5));
    let mtr = cate_bounds(&AssumptionSpec::new(Regime::Mtr).unwrap(), &truth, &[1.0], support()).unwrap();
    assert_eq!((mtr.lower, mtr.upper), (0.0, 12.5));
    let flat = cate_bounds(&AssumptionSpec::new(Regime::WorstCase).unwrap(), &truth, &[0.0], support()).unwrap();
    assert_eq!((flat.lower, flat.upper), (-10.0, 10.0));
}

#[test]
fn randomized_rule_halves_both_cells() {
    // psi = w * (delta - delta_star) = 0.5 everywhere, so
    // beta_l = 0.5 * [0.5 * (-10) + 0.5 * (-7.5)]
    let (_, data) = two_cells();
    let rows: Vec<usize> = (0..data.len()).collect();
    let fit = fit_cell_means(&data, &rows, EmptyCellPolicy::Error).unwrap();
    let folds = FoldAssignment::single(data.len());
    let spec = AssumptionSpec::new(Regime::WorstCase).unwrap();
    let half = |_: &[f64]| 0.5;
    let none = |_: &[f64]| 0.0;
    let one = |_: &[f64]| 1.0;
    let b = weighted_gain_bounds(&data, &half, &none, &one, &spec, std::slice::from_ref(&fit), &folds).unwrap();
    assert!((b.beta_l + 4.375).abs() < 1e-12, "{b:?}");
    assert!((b.beta_u - 0.5 * (0.5 * 10.0 + 0.5 * 12.5)).abs() < 1e-12, "{b:?}");

    let two = |_: &[f64]| 2.0;
    let doubled = weighted_gain_bounds(&data, &half, &none, &two, &spec, std::slice::from_ref(&fit), &folds).unwrap();
    assert!((doubled.beta_l - 2.0 * b.beta_l).abs() < 1e-12);
    assert!((doubled.beta_u - 2.0 * b.beta_u).abs() < 1e-12);

    // a deterministic rule through the weighted entry point matches the
    // indicator version
    let to_one = |x: &[f64]| (x[0] == 1.0) as u8 as f64;
    let det = weighted_gain_bounds(&data, &to_one, &none, &one, &spec, std::slice::from_ref(&fit), &folds).unwrap();
    assert!((det.beta_l + 3.75).abs() < 1e-12 && (det.beta_u - 6.25).abs() < 1e-12);
}

#[test]
fn weighted_rules_are_validated() {
    let (_, data) = two_cells();
    let rows: Vec<usize> = (0..data.len()).collect();
    let fit = fit_cell_means(&data, &rows, EmptyCellPolicy::Error).unwrap();
    let folds = FoldAssignment::single(data.len());
    let spec = AssumptionSpec::new(Regime::WorstCase).unwrap();
    let bad = |_: &[f64]| 1.5;
    let zero = |_: &[f64]| 0.0;
    let neg = |_: &[f64]| -1.0;
    assert!(weighted_gain_bounds(&data, &bad, &zero, &zero, &spec, std::slice::from_ref(&fit), &folds).is_err());
    assert!(weighted_gain_bounds(&data, &zero, &zero, &neg, &spec, std::slice::from_ref(&fit), &folds).is_err());
}

#[test]
fn miv_levels_must_increase_and_sum_to_one() {
    use welfare_bounds::identification::InstrumentLevel;
    let lv = |value, weight| InstrumentLevel { value, weight };
    assert!(AssumptionSpec::miv(Regime::MivWorstCase, vec![lv(0.0, 0.5), lv(1.0, 0.5)]).is_ok());
    assert!(AssumptionSpec::miv(Regime::MivWorstCase, vec![lv(1.0, 0.5), lv(0.0, 0.5)]).is_err());
    assert!(AssumptionSpec::miv(Regime::MivWorstCase, vec![lv(0.0, 0.5), lv(1.0, 0.4)]).is_err());
    assert!(AssumptionSpec::miv(Regime::MivWorstCase, vec![lv(0.0, 1.0)]).is_err());
}
