//! Truncated countable parameter spaces.

use std::sync::Arc;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::{FiniteModel, Likelihood, Point, MAX_TAIL_MASS};
use crate::numeric;

/// First `points` weights of the geometric prior `(1 - r) r^i`, renormalized,
/// and the discarded tail mass `r^points`.
pub fn truncated_geometric_prior(points: usize, ratio: f64) -> Result<(Vec<f64>, f64)> {
    if !(0.0 < ratio && ratio < 1.0) {
        return Err(Error::param("ratio", format!("{ratio} is not in (0, 1)")));
    }
    if points == 0 {
        return Err(Error::param("points", "must be positive"));
    }
    let tail = ratio.powi(points as i32);
    if tail > MAX_TAIL_MASS {
        return Err(Error::param(
            "points",
            format!("{points} points leave tail mass {tail} above {MAX_TAIL_MASS}"),
        ));
    }
    let raw: Vec<f64> = (0..points).map(|i| (1.0 - ratio) * ratio.powi(i as i32)).collect();
    let (prior, _) = numeric::normalize(&raw)?;
    Ok((prior, tail))
}

pub fn poisson_pmf(x: u64, rate: f64) -> f64 {
    let x = x as f64;
    (x * rate.ln() - rate - ln_gamma(x + 1.0)).exp()
}

/// `psi in {0, 1, ...}` with a geometric prior of the given ratio truncated to
/// `points` values, and `x | psi ~ Poisson(psi + 1)` observed as a real value.
pub fn geometric_poisson(points: usize, ratio: f64) -> Result<FiniteModel> {
    let (prior, tail) = truncated_geometric_prior(points, ratio)?;
    let psi: Vec<Point> = (0..points).map(|i| Point::with_coords(i.to_string(), vec![i as f64])).collect();
    let density = Arc::new(|theta: usize, x: f64| {
        if x < 0.0 || x.fract() != 0.0 {
            0.0
        } else {
            poisson_pmf(x as u64, theta as f64 + 1.0)
        }
    });
    FiniteModel::new(psi.clone(), prior, Likelihood::Density(density), (0..points).collect(), psi)?.with_truncation(tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::{capped_agreement_bound, lrse};
    use crate::model::Observation;
    use approx::assert_relative_eq;

    #[test]
    fn tail_bound_is_enforced() {
        let (p, tail) = truncated_geometric_prior(200, 0.9).unwrap();
        assert_eq!(p.len(), 200);
        assert_relative_eq!(tail, 0.9f64.powi(200));
        assert!(truncated_geometric_prior(100, 0.9).is_err());
    }

    #[test]
    fn poisson_matches_direct_formula() {
        assert_relative_eq!(poisson_pmf(3, 2.0), 8.0 / 6.0 * (-2.0f64).exp(), max_relative = 1e-13);
        assert_relative_eq!(poisson_pmf(0, 5.0), (-5.0f64).exp(), max_relative = 1e-13);
    }

    #[test]
    fn truncation_travels_with_estimates() {
        let m = geometric_poisson(200, 0.9).unwrap();
        let t = m.belief_tables(Observation::Value(10.0)).unwrap();
        let e = lrse(&t);
        assert_eq!(e.psi_index, 9);
        assert_eq!(e.truncation.unwrap().points, 200);
        assert!(capped_agreement_bound(&t) > 0.0);
    }
}
