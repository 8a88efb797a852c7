use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relbelief::discretize::{build_grid, grid_tables, ContinuousModel1D};
use relbelief::worked::{gaussian_class_threshold, gaussian_f_ratio, ClassChoice};
use relbelief::{lrse, map, BetaBernoulliPredictor, BinomialClassifier, GaussianRegression, Method, Observation};

fn random_regression(rng: &mut ChaCha8Rng) -> GaussianRegression {
    let k = rng.random_range(1..=4);
    let n = rng.random_range(k + 1..=12);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..k).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    let w: Vec<f64> = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
    GaussianRegression::from_rows(&rows, &y, &w, rng.random_range(0.1..4.0), rng.random_range(0.1..4.0)).unwrap()
}

#[test]
fn prediction_identity_for_any_covariates() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let r = random_regression(&mut rng);
        let psi = r.regression_estimates().unwrap();
        let z = r.regression_predict().unwrap();
        let factor = 1.0 + r.sigma2 / (r.tau2 * r.w.dot(&r.w));
        assert!((z.z_lrse - factor * psi.psi_lrse).abs() <= 1e-10 * z.z_lrse.abs().max(1e-300));
        assert!(psi.var_prior_psi > psi.var_post_psi);
        assert!(z.z_lrse.abs() >= z.mu_post_z.abs());
        assert!(psi.psi_lrse.abs() >= psi.psi_map.abs());
    }
}

#[test]
fn regression_lrse_matches_grid() {
    for (y, tau, sigma) in [(1.0, 1.0, 1.0), (-0.6, 2.0, 1.0), (1.7, 0.8, 0.5)] {
        let closed = GaussianRegression::from_rows(&[vec![1.0]], &[y], &[1.0], sigma * sigma, tau * tau)
            .unwrap()
            .regression_estimates()
            .unwrap()
            .psi_lrse;
        let m = ContinuousModel1D::normal_normal(tau, sigma).unwrap();
        let lambda = 0.02;
        let (f, g) = build_grid(&m, y, lambda).unwrap();
        let hat = g.representatives[lrse(&grid_tables(&f).unwrap()).psi_index];
        assert!((hat - closed).abs() <= lambda, "{hat} vs {closed}");
    }
}

#[test]
fn classifier_matches_pipeline_on_a_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..500 {
        let c = BinomialClassifier::new(rng.random(), rng.random(), rng.random_range(0.001..0.999)).unwrap();
        let fm = c.to_finite_model().unwrap();
        for x in 0..2u8 {
            let t = fm.belief_tables(Observation::Index(x as usize)).unwrap();
            let l = c.classify(x, Method::Lrse).unwrap();
            let m = c.classify(x, Method::Map).unwrap();
            assert_eq!(lrse(&t).tie, l == ClassChoice::Tie);
            assert_eq!(lrse(&t).psi_index, l.index());
            assert_eq!(map(&t).psi_index, m.index());
        }
    }
}

#[test]
fn equal_prior_parameters_make_methods_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..1000 {
        let a = rng.random_range(0.1..20.0);
        let n = rng.random_range(0..30);
        let cbar = if n == 0 { 0.0 } else { rng.random_range(0..=n) as f64 / n as f64 };
        let p = BetaBernoulliPredictor::new(a, a, n, cbar, rng.random_range(0.01..50.0)).unwrap();
        assert_eq!(p.predict_class(Method::Map), p.predict_class(Method::Lrse));
    }
}

#[test]
fn rare_class_prior_lrse_predicts_class_one_whenever_map_does() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..1000 {
        let beta = rng.random_range(1.0..200.0);
        let n = rng.random_range(0..30);
        let cbar = if n == 0 { 0.0 } else { rng.random_range(0..=n) as f64 / n as f64 };
        let x = rng.random_range(-3.0..4.0);
        let p = BetaBernoulliPredictor::new(1.0, beta, n, cbar, gaussian_f_ratio(1.0, x)).unwrap();
        assert!(p.predict_class(Method::Map) <= p.predict_class(Method::Lrse));
    }
}

#[test]
fn threshold_orders_methods() {
    let map_t = gaussian_class_threshold(1.0, 14.0, 10, 0.0, 1.0, Method::Map).unwrap();
    let lrse_t = gaussian_class_threshold(1.0, 14.0, 10, 0.0, 1.0, Method::Lrse).unwrap();
    assert!((map_t - (0.5 + 24f64.ln())).abs() < 1e-14);
    assert!(lrse_t < map_t);
    assert!(gaussian_class_threshold(1.0, 14.0, 10, 0.0, 0.0, Method::Map).is_err());
}
