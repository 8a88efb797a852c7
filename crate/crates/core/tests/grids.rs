use std::sync::Arc;

use relbelief::discretize::{
    build_grid, capped_bayes_refinement, check_lrse_hypotheses, eta_schedule, grid_lrse_refinement, grid_region_distance, grid_tables,
    normal_pdf, region_refinement, ContinuousModel1D,
};
use relbelief::{lrse, map, rs_region, Error};

fn testbed() -> ContinuousModel1D {
    ContinuousModel1D::normal_normal(1.0, 1.0).unwrap()
}

#[test]
fn grid_masses_are_complete() {
    for lambda in [0.3, 0.1, 0.037] {
        let (_, g) = build_grid(&testbed(), 1.0, lambda).unwrap();
        let prior: f64 = g.bin_prior.iter().sum();
        let post: f64 = g.bin_post.iter().sum();
        assert!((1.0 - 1e-6..=1.0 + 1e-12).contains(&prior));
        assert!((post - 1.0).abs() < 1e-12);
        assert!((g.upper - g.lower - g.len() as f64 * lambda).abs() < 1e-9);
    }
}

#[test]
fn bin_density_converges_at_least_linearly() {
    let m = testbed();
    let lambdas = [0.4, 0.2, 0.1, 0.05];
    let errors: Vec<f64> = lambdas
        .iter()
        .map(|&l| {
            let (_, g) = build_grid(&m, 1.0, l).unwrap();
            (0..g.len())
                .map(|j| (g.bin_prior[j] / l - m.prior_density(g.representatives[j])).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    for w in errors.windows(2).zip(lambdas.windows(2)) {
        let slope = (w.0[0] / w.0[1]).ln() / (w.1[0] / w.1[1]).ln();
        assert!(slope >= 1.0, "observed order {slope}");
    }
}

#[test]
fn eta_schedule_vanishes_with_lambda() {
    let mut last = f64::INFINITY;
    for lambda in [0.4, 0.2, 0.1, 0.05, 0.025] {
        let (f, g) = build_grid(&testbed(), 1.0, lambda).unwrap();
        let eta = eta_schedule(&g, lrse(&grid_tables(&f).unwrap()).psi_index).unwrap();
        assert!(eta < last && eta > 0.0);
        last = eta;
    }
    assert!(last < 0.005);
}

#[test]
fn refinement_studies_track_the_mle() {
    let lambdas = [0.2, 0.1, 0.05, 0.025];
    for x in [1.0, -0.7, 2.3] {
        let rows = capped_bayes_refinement(&testbed(), x, &lambdas, x).unwrap();
        assert!(rows.iter().all(|r| r.within_lambda && r.eta.is_some()));
        let rows = grid_lrse_refinement(&testbed(), x, &lambdas, x).unwrap();
        assert!(rows.iter().all(|r| r.within_lambda && r.eta.is_none()));
    }
}

#[test]
fn schedule_must_decrease() {
    let r = capped_bayes_refinement(&testbed(), 1.0, &[0.1, 0.2], 1.0);
    assert!(matches!(r, Err(Error::InvalidParameter { name: "lambda", .. })));
}

#[test]
fn symmetric_bimodal_likelihood_is_rejected() {
    let prior = Arc::new(|p: f64| normal_pdf(p, 0.0, 1.0));
    let lik = Arc::new(|p: f64, x: f64| 0.5 * normal_pdf(x, p, 1.0) + 0.5 * normal_pdf(x, -p, 1.0));
    let m = ContinuousModel1D::new(prior, lik, -8.0, 8.0).unwrap();
    let r = grid_lrse_refinement(&m, 2.0, &[0.2, 0.1], 2.0);
    assert!(matches!(r, Err(Error::HypothesisViolated(_))), "{r:?}");
    assert!(check_lrse_hypotheses(&testbed(), 1.0, 0.05, 0.5).is_ok());
}

#[test]
fn region_distances_shrink_and_vanish_at_full_credibility() {
    let lambdas = [0.2, 0.1, 0.05, 0.025];
    let r = region_refinement(&testbed(), 1.0, 0.9, &lambdas, &[1e-6]).unwrap();
    assert!(r.rs_rows.last().unwrap().distance <= 0.01);
    assert!(r.rs_rows.first().unwrap().distance >= r.rs_rows.last().unwrap().distance);
    let full = region_refinement(&testbed(), 1.0, 1.0, &lambdas, &[1e-6]).unwrap();
    assert!(full.rs_rows.iter().chain(&full.lpl_rows).all(|d| d.distance == 0.0));
}

#[test]
fn identical_grids_have_zero_distance() {
    let (f, g) = build_grid(&testbed(), 0.4, 0.05).unwrap();
    let c = rs_region(&grid_tables(&f).unwrap(), 0.8).unwrap();
    assert_eq!(grid_region_distance(&g, &c.members, &g, &c.members), 0.0);
}

/// `phi = sinh(psi)` with the prior density carried through the Jacobian.
fn sinh_testbed() -> ContinuousModel1D {
    let prior = Arc::new(|phi: f64| normal_pdf(phi.asinh(), 0.0, 1.0) / (1.0 + phi * phi).sqrt());
    let lik = Arc::new(|phi: f64, x: f64| normal_pdf(x, phi.asinh(), 1.0));
    ContinuousModel1D::new(prior, lik, -6f64.sinh(), 6f64.sinh()).unwrap()
}

#[test]
fn lrse_follows_reparameterization_map_does_not() {
    let lambda = 0.05;
    let (f, g) = build_grid(&sinh_testbed(), 1.0, lambda).unwrap();
    let t = grid_tables(&f).unwrap();
    let lrse_phi = g.representatives[lrse(&t).psi_index];
    assert!((lrse_phi - 1f64.sinh()).abs() <= lambda);
    let map_phi = g.representatives[map(&t).psi_index];
    assert!((map_phi - 0.5f64.sinh()).abs() > 2.0 * lambda, "{map_phi}");
}
