use welfare_bounds::first_stage::{
    fit_cell_means, fit_logistic, fit_outcome_regression, make_folds, EmptyCellPolicy,
};
use welfare_bounds::{
    fit_cross_fitted, Dataset, Error, FirstStageMethod, FoldAssignment, Nuisance, NuisanceNeeds,
    Support,
};

fn dataset(y: &[f64], d: &[u8], x: &[f64]) -> Dataset {
    Dataset::new(
        y.to_vec(),
        d.to_vec(),
        vec!["x".into()],
        x.to_vec(),
        None,
        Support::new(-100.0, 100.0).unwrap(),
    )
    .unwrap()
}

#[test]
fn cell_means_are_direct_averages() {
    let data = dataset(&[1.0, 3.0, 2.0], &[1, 1, 0], &[0.0, 0.0, 0.0]);
    let fit = fit_cell_means(&data, &[0, 1, 2], EmptyCellPolicy::Error).unwrap();
    assert_eq!(fit.eta(1, &[0.0]).unwrap(), 2.0);
    assert_eq!(fit.eta(0, &[0.0]).unwrap(), 2.0);
    assert!((fit.propensity(&[0.0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn empty_cell_follows_policy() {
    let data = dataset(&[1.0, 2.0], &[0, 0], &[7.0, 7.0]);
    let strict = fit_cell_means(&data, &[0, 1], EmptyCellPolicy::Error).unwrap();
    let err = strict.eta(1, &[7.0]).unwrap_err();
    assert!(matches!(err, Error::EmptyCell { .. }));
    assert!(err.to_string().contains('7'), "{err}");
    let lenient = fit_cell_means(&data, &[0, 1], EmptyCellPolicy::Zero).unwrap();
    assert_eq!(lenient.eta(1, &[7.0]).unwrap(), 0.0);
}

#[test]
fn folds_partition_and_balance() {
    let f = make_folds(4, 2, 9).unwrap();
    let mut all: Vec<usize> = (0..2).flat_map(|k| f.held_out(k)).collect();
    all.sort();
    assert_eq!(all, vec![0, 1, 2, 3]);
    assert_eq!(f.sizes(), vec![2, 2]);
    let mut sizes = make_folds(5, 2, 9).unwrap().sizes();
    sizes.sort();
    assert_eq!(sizes, vec![2, 3]);
    assert!(make_folds(4, 5, 9).is_err());
    assert_eq!(make_folds(50, 3, 4).unwrap(), make_folds(50, 3, 4).unwrap());
}

#[test]
fn polynomial_interpolates_noiseless_line() {
    let x: Vec<f64> = (0..6).map(|i| i as f64).collect();
    let y: Vec<f64> = x.iter().map(|v| 2.0 + 3.0 * v).collect();
    let data = dataset(&y, &[1; 6], &x);
    let fit = fit_outcome_regression(&data, &[0, 1, 2, 3, 4, 5], 1, 1).unwrap();
    let raw = fit.raw_coefficients();
    assert!((raw[&vec![0]] - 2.0).abs() < 1e-10);
    assert!((raw[&vec![1]] - 3.0).abs() < 1e-10);
    assert!((fit.predict(&[4.0]) - 14.0).abs() < 1e-10);
}

#[test]
fn polynomial_interpolates_noiseless_quadratic_in_two_covariates() {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for a in 0..4 {
        for b in 0..4 {
            let (a, b) = (a as f64, b as f64 * 10.0);
            x.extend([a, b]);
            y.push(1.0 - 2.0 * a + 0.5 * b + 0.25 * a * b - 0.01 * b * b + a * a);
        }
    }
    let data = Dataset::new(y.clone(), vec![0; 16], vec!["a".into(), "b".into()], x.clone(), None, Support::new(-1e3, 1e3).unwrap()).unwrap();
    let rows: Vec<usize> = (0..16).collect();
    let fit = fit_outcome_regression(&data, &rows, 0, 2).unwrap();
    for i in 0..16 {
        assert!((fit.predict(&x[2 * i..2 * i + 2]) - y[i]).abs() < 1e-10);
    }
}

#[test]
fn polynomial_reports_rank_deficiency() {
    let data = dataset(&[1.0, 2.0, 3.0], &[1, 1, 1], &[0.0, 1.0, 1.0]);
    let err = fit_outcome_regression(&data, &[0, 1, 2], 1, 2).unwrap_err();
    assert!(matches!(err, Error::RankDeficient { .. }), "{err}");
}

#[test]
fn logistic_intercept_recovers_share() {
    let names = vec!["x".to_string()];
    let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 5) as f64]).collect();
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    let labels: Vec<u8> = (0..40).map(|i| (i < 13) as u8).collect();
    let model = fit_logistic(&names, &refs, &labels, 0).unwrap();
    for r in &refs {
        assert!((model.predict(r) - 13.0 / 40.0).abs() < 1e-12);
    }
}

#[test]
fn logistic_flags_separation() {
    let names = vec!["x".to_string()];
    let rows: Vec<Vec<f64>> = (-5..5).map(|i| vec![i as f64 + 0.5]).collect();
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    let labels: Vec<u8> = rows.iter().map(|r| (r[0] > 0.0) as u8).collect();
    let err = fit_logistic(&names, &refs, &labels, 1).unwrap_err();
    assert!(matches!(err, Error::Separation(_)), "{err}");
}

#[test]
fn cross_fitting_uses_only_the_complement() {
    // fold 0 holds the two rows with y = 100
    let data = dataset(&[100.0, 100.0, 1.0, 3.0], &[1, 1, 1, 1], &[0.0; 4]);
    let folds = FoldAssignment::single(4);
    let full = fit_cross_fitted(&data, &folds, FirstStageMethod::CellMeans, EmptyCellPolicy::Error, NuisanceNeeds::default()).unwrap();
    assert_eq!(full.len(), 1);
    assert_eq!(full[0].eta(1, &[0.0]).unwrap(), 51.0);
    let split = make_folds(4, 2, 3).unwrap();
    let fits = fit_cross_fitted(&data, &split, FirstStageMethod::CellMeans, EmptyCellPolicy::Error, NuisanceNeeds::default()).unwrap();
    for k in 0..2 {
        let train = split.training(k);
        let mean = train.iter().map(|&i| data.y()[i]).sum::<f64>() / train.len() as f64;
        assert_eq!(fits[k].eta(1, &[0.0]).unwrap(), mean);
    }
}
