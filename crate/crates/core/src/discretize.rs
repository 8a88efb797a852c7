//! Regular discretization of one-dimensional continuous models onto
//! equal-width grids, and the refinement experiments built on it.
//!
//! A grid of width `lambda` turns a continuous model into a [`FiniteModel`] whose
//! psi values are the bin midpoints, whose prior is the prior mass of each bin,
//! and whose posterior is the posterior mass of each bin. Every finite-model
//! operation then applies unchanged.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::{bayes_rule, check_decreasing, lrse};
use crate::loss::LossSpec;
use crate::model::{BeliefTables, FiniteModel, Likelihood, Observation, Point};
use crate::numeric;
use crate::quadrature::integrate;
use crate::region::{lpl_region, rs_region};

/// Relative accuracy of every bin integral.
pub const BIN_REL_TOL: f64 = 1e-10;

/// Largest prior mass a support interval may leave outside.
pub const MAX_TRUNCATED_MASS: f64 = 1e-6;

pub type Density1D = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// `f(psi, x)`.
pub type Likelihood1D = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A continuous model on a bounded interval carrying all but a negligible part of the prior.
#[derive(Clone)]
pub struct ContinuousModel1D {
    prior: Density1D,
    likelihood: Likelihood1D,
    lower: f64,
    upper: f64,
    prior_mass: f64,
}

impl std::fmt::Debug for ContinuousModel1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ContinuousModel1D")
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("prior_mass", &self.prior_mass)
            .finish_non_exhaustive()
    }
}

impl ContinuousModel1D {
    pub fn new(prior: Density1D, likelihood: Likelihood1D, lower: f64, upper: f64) -> Result<Self> {
        if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::param(
                "support_interval",
                format!("[{lower}, {upper}] is not a bounded interval"),
            ));
        }
        let probes = 257;
        for i in 0..probes {
            let t = lower + (upper - lower) * i as f64 / (probes - 1) as f64;
            let d = prior(t);
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::param("prior_density", format!("density at {t} is {d}, must be positive")));
            }
        }
        let p = prior.clone();
        let prior_mass = integrate(|t| p(t), lower, upper, BIN_REL_TOL)?;
        if !(1.0 - MAX_TRUNCATED_MASS..=1.0 + 1e-9).contains(&prior_mass) {
            return Err(Error::param(
                "support_interval",
                format!("prior mass on [{lower}, {upper}] is {prior_mass}, expected within {MAX_TRUNCATED_MASS} of 1"),
            ));
        }
        Ok(ContinuousModel1D {
            prior,
            likelihood,
            lower,
            upper,
            prior_mass,
        })
    }

    /// `psi ~ N(0, tau^2)`, `x | psi ~ N(psi, sigma^2)`, on `[-8 tau, 8 tau]`.
    pub fn normal_normal(tau: f64, sigma: f64) -> Result<Self> {
        if !(tau > 0.0) || !(sigma > 0.0) {
            return Err(Error::param("tau/sigma", "must be positive"));
        }
        let prior: Density1D = Arc::new(move |p| normal_pdf(p, 0.0, tau));
        let lik: Likelihood1D = Arc::new(move |p, x| normal_pdf(x, p, sigma));
        Self::new(prior, lik, -8.0 * tau, 8.0 * tau)
    }

    pub fn prior_density(&self, psi: f64) -> f64 {
        (self.prior)(psi)
    }

    pub fn likelihood(&self, psi: f64, x: f64) -> f64 {
        (self.likelihood)(psi, x)
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    /// Prior mass on the support interval.
    pub fn prior_mass(&self) -> f64 {
        self.prior_mass
    }
}

pub fn normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

/// An equal-width partition with midpoint representatives and bin masses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularGrid {
    pub lambda: f64,
    pub lower: f64,
    pub upper: f64,
    pub representatives: Vec<f64>,
    /// Prior mass of each bin.
    pub bin_prior: Vec<f64>,
    /// Posterior mass of each bin.
    pub bin_post: Vec<f64>,
    /// `m(x)` restricted to the grid.
    pub evidence: f64,
}

impl RegularGrid {
    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    pub fn bounds(&self, bin: usize) -> (f64, f64) {
        let lo = self.lower + bin as f64 * self.lambda;
        (lo, lo + self.lambda)
    }

    /// Bin containing `psi`; the upper endpoint belongs to the last bin.
    pub fn bin_of(&self, psi: f64) -> Option<usize> {
        if psi < self.lower || psi > self.upper {
            return None;
        }
        let k = ((psi - self.lower) / self.lambda).floor() as usize;
        Some(k.min(self.len() - 1))
    }

    /// Union of member bins as disjoint closed intervals.
    pub fn undiscretize(&self, members: &[usize]) -> Vec<(f64, f64)> {
        let mut sorted = members.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut out: Vec<(f64, f64)> = Vec::new();
        let mut prev: Option<usize> = None;
        for j in sorted {
            let (lo, hi) = self.bounds(j);
            match (prev, out.last_mut()) {
                (Some(p), Some(last)) if p + 1 == j => last.1 = hi,
                _ => out.push((lo, hi)),
            }
            prev = Some(j);
        }
        out
    }

    /// Bins whose representative lies in the union of `intervals`.
    pub fn rebin(&self, intervals: &[(f64, f64)]) -> Vec<usize> {
        (0..self.len())
            .filter(|&j| {
                let r = self.representatives[j];
                intervals.iter().any(|(lo, hi)| *lo <= r && r <= *hi)
            })
            .collect()
    }
}

/// Discretize `model` at bin width `lambda` for the observation `x`.
///
/// The interval is covered by `ceil((b - a) / lambda)` bins of width exactly
/// `lambda`; when `lambda` does not divide the interval the last bin extends past `b`.
pub fn build_grid(model: &ContinuousModel1D, x: f64, lambda: f64) -> Result<(FiniteModel, RegularGrid)> {
    let (a, b) = model.interval();
    if !(lambda > 0.0) || lambda >= (b - a) / 4.0 {
        return Err(Error::param(
            "lambda",
            format!("{lambda} must be positive and below a quarter of the interval width"),
        ));
    }
    let nbins = ((b - a) / lambda - 1e-9).ceil() as usize;
    let upper = a + nbins as f64 * lambda;

    let masses = (0..nbins)
        .into_par_iter()
        .map(|j| {
            let lo = a + j as f64 * lambda;
            let hi = lo + lambda;
            let prior = integrate(|t| model.prior_density(t), lo, hi, BIN_REL_TOL)?;
            if !(prior > 0.0) {
                return Err(Error::ZeroBinMass { bin: j });
            }
            let joint = integrate(|t| model.prior_density(t) * model.likelihood(t, x), lo, hi, BIN_REL_TOL)?;
            Ok((prior, joint.max(0.0)))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;

    let bin_prior: Vec<f64> = masses.iter().map(|m| m.0).collect();
    let joint: Vec<f64> = masses.iter().map(|m| m.1).collect();
    let total_prior = numeric::sum(bin_prior.iter().copied());
    if !(1.0 - MAX_TRUNCATED_MASS..=1.0 + 1e-9).contains(&total_prior) {
        return Err(Error::param(
            "lambda",
            format!("grid prior mass {total_prior} is not within {MAX_TRUNCATED_MASS} of 1"),
        ));
    }
    let (bin_post, evidence) = numeric::normalize(&joint)?;
    let representatives: Vec<f64> = (0..nbins).map(|j| a + (j as f64 + 0.5) * lambda).collect();

    let (prior, _) = numeric::normalize(&bin_prior)?;
    let column: Vec<Vec<f64>> = joint.iter().zip(&bin_prior).map(|(j, p)| vec![j / p]).collect();
    let points: Vec<Point> = representatives
        .iter()
        .map(|r| Point::with_coords(format!("{r}"), vec![*r]))
        .collect();
    let finite = FiniteModel::new(points.clone(), prior, Likelihood::Table(column), (0..nbins).collect(), points)?;
    let grid = RegularGrid {
        lambda,
        lower: a,
        upper,
        representatives,
        bin_prior,
        bin_post,
        evidence,
    };
    Ok((finite, grid))
}

/// Belief tables of a discretized model at its single observation.
pub fn grid_tables(finite: &FiniteModel) -> Result<BeliefTables> {
    finite.belief_tables(Observation::Index(0))
}

/// Cap strictly below the prior mass of the LRSE bin: half that mass.
pub fn eta_schedule(grid: &RegularGrid, lrse_bin: usize) -> Result<f64> {
    grid.bin_prior.get(lrse_bin).map(|p| p / 2.0).ok_or(Error::UnknownPsi {
        index: lrse_bin,
        size: grid.len(),
    })
}

/// One row of an estimator refinement study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub lambda: f64,
    /// Cap used by the Bayes rule, absent for the discretized LRSE.
    pub eta: Option<f64>,
    pub estimate: f64,
    pub error: f64,
    pub within_lambda: bool,
}

/// Check the unique-maximizer and separated-supremum conditions on a grid.
///
/// The ratio must have a unique maximizer and stay below `1 - 1e-6` times its maximum
/// at every bin at least `separation` away from it.
pub fn check_lrse_hypotheses(model: &ContinuousModel1D, x: f64, lambda: f64, separation: f64) -> Result<()> {
    let (finite, grid) = build_grid(model, x, lambda)?;
    let tables = grid_tables(&finite)?;
    let best = lrse(&tables);
    if best.tie {
        let at: Vec<f64> = best.argmax_set.iter().map(|&j| grid.representatives[j]).collect();
        return Err(Error::HypothesisViolated(format!(
            "relative belief ratio has no unique maximizer: tied at {at:?}"
        )));
    }
    let center = grid.representatives[best.psi_index];
    let max = best.criterion_value;
    let rival = (0..grid.len())
        .filter(|&j| (grid.representatives[j] - center).abs() >= separation)
        .max_by(|&i, &j| tables.rb()[i].total_cmp(&tables.rb()[j]));
    if let Some(j) = rival {
        if tables.rb()[j] >= max * (1.0 - 1e-6) {
            return Err(Error::HypothesisViolated(format!(
                "ratio at {} is {} against a maximum of {} at {center}",
                grid.representatives[j],
                tables.rb()[j],
                max
            )));
        }
    }
    Ok(())
}

#[derive(Clone, Copy)]
enum Estimator {
    CappedBayes,
    DiscreteLrse,
}

fn refinement_study(model: &ContinuousModel1D, x: f64, lambdas: &[f64], target: f64, which: Estimator) -> Result<Vec<ConvergenceRow>> {
    check_decreasing(lambdas, "lambda")?;
    let finest = *lambdas.last().expect("nonempty");
    check_lrse_hypotheses(model, x, finest, 10.0 * finest)?;
    lambdas
        .iter()
        .map(|&lambda| {
            let (finite, grid) = build_grid(model, x, lambda)?;
            let tables = grid_tables(&finite)?;
            let hat = lrse(&tables);
            let (bin, eta) = match which {
                Estimator::DiscreteLrse => (hat.psi_index, None),
                Estimator::CappedBayes => {
                    let eta = eta_schedule(&grid, hat.psi_index)?;
                    let d = bayes_rule(&LossSpec::DiscretizedCapped { lambda, eta }, &tables)?;
                    (d.psi_index, Some(eta))
                }
            };
            let estimate = grid.representatives[bin];
            let error = (estimate - target).abs();
            Ok(ConvergenceRow {
                lambda,
                eta,
                estimate,
                error,
                within_lambda: error <= lambda * (1.0 + 1e-12),
            })
        })
        .collect()
}

/// Capped prior-based Bayes rules with `eta = eta_schedule(lambda)` along a refinement schedule,
/// measured against the exact LRSE `target`.
pub fn capped_bayes_refinement(model: &ContinuousModel1D, x: f64, lambdas: &[f64], target: f64) -> Result<Vec<ConvergenceRow>> {
    refinement_study(model, x, lambdas, target, Estimator::CappedBayes)
}

/// LRSE of the discretized problem along a refinement schedule, measured against `target`.
pub fn grid_lrse_refinement(model: &ContinuousModel1D, x: f64, lambdas: &[f64], target: f64) -> Result<Vec<ConvergenceRow>> {
    refinement_study(model, x, lambdas, target, Estimator::DiscreteLrse)
}

/// Symmetric-difference posterior mass between a region on `grid` and a region on a
/// finer `reference` grid, measured with the reference posterior.
pub fn grid_region_distance(grid: &RegularGrid, members: &[usize], reference: &RegularGrid, reference_members: &[usize]) -> f64 {
    let mut in_test = vec![false; grid.len()];
    for &j in members {
        in_test[j] = true;
    }
    let mut in_ref = vec![false; reference.len()];
    for &j in reference_members {
        in_ref[j] = true;
    }
    numeric::sum((0..reference.len()).filter_map(|k| {
        let covered = grid.bin_of(reference.representatives[k]).map(|j| in_test[j]).unwrap_or(false);
        (covered != in_ref[k]).then_some(reference.bin_post[k])
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceRow {
    pub lambda: f64,
    /// Cap of the lowest posterior loss region; absent for the relative surprise region.
    pub eta: Option<f64>,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionConvergence {
    pub gamma: f64,
    pub reference_lambda: f64,
    pub rs_rows: Vec<DistanceRow>,
    pub lpl_rows: Vec<DistanceRow>,
}

/// Distances from discretized relative surprise regions, and from capped lowest posterior
/// loss regions, to the relative surprise region on a reference grid four times finer than
/// the smallest `lambda`.
pub fn region_refinement(model: &ContinuousModel1D, x: f64, gamma: f64, lambdas: &[f64], etas: &[f64]) -> Result<RegionConvergence> {
    check_decreasing(lambdas, "lambda")?;
    if !etas.is_empty() {
        check_decreasing(etas, "eta")?;
    }
    let reference_lambda = lambdas.last().expect("nonempty") / 4.0;
    let (ref_finite, ref_grid) = build_grid(model, x, reference_lambda)?;
    let ref_region = rs_region(&grid_tables(&ref_finite)?, gamma)?;

    let mut rs_rows = Vec::new();
    let mut lpl_rows = Vec::new();
    for &lambda in lambdas {
        let (finite, grid) = build_grid(model, x, lambda)?;
        let tables = grid_tables(&finite)?;
        let c = rs_region(&tables, gamma)?;
        rs_rows.push(DistanceRow {
            lambda,
            eta: None,
            distance: grid_region_distance(&grid, &c.members, &ref_grid, &ref_region.members),
        });
        for &eta in etas {
            let l = lpl_region(&LossSpec::DiscretizedCapped { lambda, eta }, &tables, gamma)?;
            lpl_rows.push(DistanceRow {
                lambda,
                eta: Some(eta),
                distance: grid_region_distance(&grid, &l.members, &ref_grid, &ref_region.members),
            });
        }
    }
    Ok(RegionConvergence {
        gamma,
        reference_lambda,
        rs_rows,
        lpl_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn uniform01() -> ContinuousModel1D {
        ContinuousModel1D::new(Arc::new(|_| 1.0), Arc::new(|p, x| if x == 1.0 { p } else { 1.0 - p }), 0.0, 1.0).unwrap()
    }

    #[test]
    fn uniform_bins() {
        let (_, g) = build_grid(&uniform01(), 1.0, 0.2).unwrap();
        assert_eq!(g.len(), 5);
        for p in &g.bin_prior {
            assert_abs_diff_eq!(*p, 0.2, epsilon = 1e-14);
        }
        assert!(build_grid(&uniform01(), 1.0, 0.25).is_err());
    }

    #[test]
    fn uniform_eta_is_half_bin_mass() {
        let m = ContinuousModel1D::new(Arc::new(|_| 0.5), Arc::new(|_, _| 1.0), 0.0, 2.0).unwrap();
        let (_, g) = build_grid(&m, 0.0, 0.25).unwrap();
        assert_eq!(g.len(), 8);
        assert_abs_diff_eq!(g.bin_prior[3], 0.125, epsilon = 1e-14);
        assert_abs_diff_eq!(eta_schedule(&g, 3).unwrap(), 0.0625, epsilon = 1e-14);
        assert!(eta_schedule(&g, 8).is_err());
    }

    #[test]
    fn normal_bins_match_cdf_differences() {
        let m = ContinuousModel1D::normal_normal(1.0, 1.0).unwrap();
        let (_, g) = build_grid(&m, 1.0, 1.0).unwrap();
        // bins [-1, 0] and [0, 1]: Phi(1) - Phi(0) = 0.341344746068543
        assert_abs_diff_eq!(g.bin_prior[7], 0.341344746068543, epsilon = 1e-12);
        assert_abs_diff_eq!(g.bin_prior[8], 0.341344746068543, epsilon = 1e-12);
    }

    #[test]
    fn prior_mass_must_be_nearly_one() {
        let r = ContinuousModel1D::new(Arc::new(|_| 1.0), Arc::new(|_, _| 1.0), 0.0, 0.5);
        assert!(r.is_err());
        let r = ContinuousModel1D::new(Arc::new(|p| if p < 0.5 { 0.0 } else { 2.0 }), Arc::new(|_, _| 1.0), 0.0, 1.0);
        assert!(r.is_err());
    }

    #[test]
    fn undiscretize_then_rebin_is_identity() {
        let (_, g) = build_grid(&uniform01(), 1.0, 0.05).unwrap();
        let members = vec![0, 1, 2, 7, 9, 10, 19];
        let intervals = g.undiscretize(&members);
        assert_eq!(intervals.len(), 4);
        assert_eq!(g.rebin(&intervals), members);
    }

    #[test]
    fn same_grid_distance_is_zero() {
        let m = ContinuousModel1D::normal_normal(1.0, 1.0).unwrap();
        let (f, g) = build_grid(&m, 1.0, 0.1).unwrap();
        let c = rs_region(&grid_tables(&f).unwrap(), 0.9).unwrap();
        assert_eq!(grid_region_distance(&g, &c.members, &g, &c.members), 0.0);
    }
}
