use proptest::prelude::*;
use spcalda::linalg::orthonormal_basis;
use spcalda::rng::rng_from_seed;
use spcalda::theory::*;
use spcalda::Error;

fn spikes(s: usize) -> Vec<f64> {
    (0..s).map(|i| 10.0 - 2.0 * i as f64).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(25))]

    #[test]
    fn theorem1_holds_on_spiked_models(seed in any::<u64>(), s in 0usize..4, k in 2usize..5, gamma in 0.1f64..50.0) {
        let mut rng = rng_from_seed(seed);
        let model = random_spiked_model(&mut rng, 20, &spikes(s), 1.0, k).unwrap();
        match verify_theorem1(&model, &Weighting::Gamma(gamma)) {
            Ok(v) => prop_assert!(v < IDENTITY_TOL, "violation {v}"),
            Err(Error::GapTooSmall { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
        let rho: Vec<f64> = (0..k).map(|i| 0.2 + i as f64).collect();
        let v = verify_theorem1(&model, &Weighting::Rho(rho)).unwrap();
        prop_assert!(v < IDENTITY_TOL);
    }

    #[test]
    fn theorem1_violation_ignores_global_scale(seed in any::<u64>(), c in 0.05f64..20.0) {
        let mut rng = rng_from_seed(seed);
        let model = random_spiked_model(&mut rng, 20, &spikes(3), 1.0, 4).unwrap();
        let bad = perturb_off_spiked(&model, &mut rng, 0.5);
        let a = verify_theorem1(&bad, &Weighting::Gamma(2.0)).unwrap();
        let b = verify_theorem1(&bad.rescaled(c), &Weighting::Gamma(2.0)).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
        prop_assert!(a > POWER_THRESHOLD);
    }

    #[test]
    fn theorem2_holds_and_wrong_split_fails(seed in any::<u64>(), layout in proptest::collection::vec(1usize..4, 2..4)) {
        prop_assume!(layout.iter().sum::<usize>() > layout.len());
        let mut rng = rng_from_seed(seed);
        let model = random_mixture_model(&mut rng, 20, &spikes(2), 1.0, &layout).unwrap();
        prop_assert!(verify_theorem2(&model, 3.0).unwrap() < IDENTITY_TOL);
        let wrong = verify_theorem2_with_split(&model, 3.0, model.s() + model.num_classes() - 1).unwrap();
        prop_assert!(wrong > POWER_THRESHOLD, "wrong-split violation {wrong}");
    }

    #[test]
    fn lemma2_for_minimal_and_enlarged_subspaces(seed in any::<u64>(), k in 2usize..5, extra in 1usize..5) {
        let mut rng = rng_from_seed(seed);
        let model = random_spiked_model(&mut rng, 15, &spikes(2), 1.0, k).unwrap();
        let within = model.within_matrix();
        let betas = beta_matrix(&within, &model.centroids);
        let h = orthonormal_basis(&betas, 1e-10);
        prop_assert!(verify_lemma2(&within, &model.centroids, &h).unwrap() < IDENTITY_TOL);
        let noise = gaussian_matrix(&mut rng, 15, extra);
        let both = nalgebra::DMatrix::from_fn(15, betas.ncols() + extra, |i, j| {
            if j < betas.ncols() { betas[(i, j)] } else { noise[(i, j - betas.ncols())] }
        });
        let h = orthonormal_basis(&both, 1e-10);
        prop_assert!(verify_lemma2(&within, &model.centroids, &h).unwrap() < IDENTITY_TOL);
    }

    #[test]
    fn lemma1_paths_agree(seed in any::<u64>(), n in 5usize..40, p in 2usize..150, k in 2usize..5, gi in 0usize..9) {
        let gamma = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0][gi];
        let ds = random_dataset(&mut rng_from_seed(seed), n, p, k, 1.0).unwrap();
        let c = verify_lemma1(&ds, gamma).unwrap();
        prop_assert!(c.eig_gap < IDENTITY_TOL, "{:?}", c);
        prop_assert!(c.subspace_angle < ANGLE_TOL, "{:?}", c);
    }
}

#[test]
fn verifiers_are_deterministic() {
    assert_eq!(run_battery(5), run_battery(5));
}

#[test]
fn lemma1_guard_and_lemma2_precondition() {
    let ds = random_dataset(&mut rng_from_seed(1), 5, 2001, 2, 1.0).unwrap();
    assert!(matches!(verify_lemma1(&ds, 1.0), Err(Error::InvalidInput(_))));
    let mut rng = rng_from_seed(2);
    let model = random_spiked_model(&mut rng, 10, &spikes(1), 1.0, 3).unwrap();
    let h = random_orthonormal(&mut rng, 10, 2);
    assert!(matches!(
        verify_lemma2(&model.within_matrix(), &model.centroids, &h),
        Err(Error::PreconditionViolated(_))
    ));
}
