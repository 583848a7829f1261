use nalgebra::DMatrix;
use proptest::prelude::*;
use spcalda::rng::rng_from_seed;
use spcalda::selection::{cv_select, evaluate_cell, mean_fold_error, stratified_kfold, CvGrid, CvReport};
use spcalda::theory::random_dataset;
use spcalda::{Gamma, LabeledDataset, Method, PriorsMode};

fn small_grid(seed: u64) -> CvGrid {
    CvGrid {
        gammas: vec![Gamma::Finite(0.5), Gamma::Finite(1.0), Gamma::Finite(8.0), Gamma::Infinite],
        qs: vec![1, 2, 3, 5],
        folds: 4,
        seed,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn selected_error_recomputes_from_stored_folds(seed in any::<u64>(), p in 5usize..60, k in 2usize..5) {
        let ds = random_dataset(&mut rng_from_seed(seed), 40, p, k, 0.8).unwrap();
        let grid = small_grid(seed);
        let (report, model) = cv_select(&ds, &grid, Method::Spcalda, PriorsMode::Empirical).unwrap();
        let sel = &report.selected;
        let folds = evaluate_cell(&ds, Method::Spcalda, sel.gamma, sel.q, &report.fold_assignments, grid.folds, PriorsMode::Empirical).unwrap();
        prop_assert_eq!(mean_fold_error(&folds), sel.error);
        let min = report.error_table.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(min, sel.error);
        prop_assert_eq!(model.gamma, Some(sel.gamma));
        // every cell of the table is reproducible through the public fit path
        for (gi, &g) in grid.gammas.iter().enumerate() {
            for (qi, &q) in grid.qs.iter().enumerate() {
                let f = evaluate_cell(&ds, Method::Spcalda, g, q, &report.fold_assignments, grid.folds, PriorsMode::Empirical).unwrap();
                prop_assert_eq!(&f, &report.fold_errors[gi][qi]);
            }
        }
    }

    #[test]
    fn folds_are_stratified(seed in any::<u64>(), sizes in proptest::collection::vec(5usize..20, 2..5), k in 2usize..6) {
        let labels: Vec<usize> = sizes.iter().enumerate().flat_map(|(c, &m)| std::iter::repeat_n(c + 1, m)).collect();
        let folds = stratified_kfold(&labels, k, seed).unwrap();
        for (c, &m) in sizes.iter().enumerate() {
            let mut per_fold = vec![0usize; k];
            for (i, &y) in labels.iter().enumerate() {
                if y == c + 1 {
                    per_fold[folds[i]] += 1;
                }
            }
            let (lo, hi) = (per_fold.iter().min().unwrap(), per_fold.iter().max().unwrap());
            prop_assert!(hi - lo <= 1);
            prop_assert_eq!(per_fold.iter().sum::<usize>(), m);
        }
    }
}

#[test]
fn report_is_deterministic_and_serializable() {
    let ds = random_dataset(&mut rng_from_seed(9), 50, 80, 3, 0.7).unwrap();
    let grid = CvGrid::default_for(&ds, 123);
    let (a, _) = cv_select(&ds, &grid, Method::Spcalda, PriorsMode::Empirical).unwrap();
    let (b, _) = cv_select(&ds, &grid, Method::Spcalda, PriorsMode::Empirical).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    assert_eq!(CvReport::from_json(&a.to_json().unwrap()).unwrap(), a);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let (c, _) = pool.install(|| cv_select(&ds, &grid, Method::Spcalda, PriorsMode::Empirical).unwrap());
    assert_eq!(a, c);
}

#[test]
fn separable_data_reaches_zero_error_at_smallest_q() {
    // two tight clusters far apart along the first axis
    let mut x = DMatrix::zeros(40, 10);
    let mut rng = rng_from_seed(4);
    let noise = spcalda::theory::gaussian_matrix(&mut rng, 40, 10) * 0.01;
    let labels: Vec<usize> = (0..40).map(|i| if i < 20 { 1 } else { 2 }).collect();
    for i in 0..40 {
        x[(i, 0)] = if labels[i] == 1 { -10.0 } else { 10.0 };
    }
    x += noise;
    let ds = LabeledDataset::new(x, labels).unwrap();
    let (report, model) = cv_select(&ds, &CvGrid::default_for(&ds, 0), Method::Spcalda, PriorsMode::Empirical).unwrap();
    assert_eq!(report.selected.error, 0.0);
    assert_eq!(report.selected.q, 1);
    assert_eq!(report.selected.gamma, Gamma::Finite(0.25));
    assert_eq!(model.predict(ds.data()).unwrap().labels, ds.labels());
}

#[test]
fn pcalda_uses_gamma_one_only() {
    let ds = random_dataset(&mut rng_from_seed(10), 40, 30, 2, 1.0).unwrap();
    let (report, model) = cv_select(&ds, &small_grid(1), Method::Pcalda, PriorsMode::Empirical).unwrap();
    assert_eq!(report.grid.gammas, vec![Gamma::Finite(1.0)]);
    assert_eq!(model.method, Method::Pcalda);
    assert!(cv_select(&ds, &small_grid(1), Method::Ir, PriorsMode::Empirical).is_err());
}

#[test]
fn invalid_grids_are_rejected() {
    let ds = random_dataset(&mut rng_from_seed(11), 12, 30, 3, 1.0).unwrap();
    let mut grid = small_grid(0);
    grid.folds = 5; // smallest class has 4 members
    assert!(cv_select(&ds, &grid, Method::Spcalda, PriorsMode::Empirical).is_err());
    let mut grid = small_grid(0);
    grid.qs = vec![0];
    assert!(cv_select(&ds, &grid, Method::Spcalda, PriorsMode::Empirical).is_err());
    let mut grid = small_grid(0);
    grid.gammas = vec![Gamma::Finite(-1.0)];
    assert!(cv_select(&ds, &grid, Method::Spcalda, PriorsMode::Empirical).is_err());
}
