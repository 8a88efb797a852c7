//! Prior-based loss functions and the posterior and prior risks they induce.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BeliefTables, FiniteModel};
use crate::numeric::{self, KahanSum};

/// Tolerance for the exact risk identities.
pub const IDENTITY_TOL: f64 = 1e-10;

/// A member of the loss family. Every loss is zero at the correct action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossSpec {
    /// `I(psi(theta) != a)`.
    ZeroOne,
    /// `I(psi(theta) != a) / pi(psi(theta))`.
    PriorBased,
    /// `I(psi(theta) != a) / max(eta, pi(psi(theta)))`.
    CappedPriorBased { eta: f64 },
    /// `I(psi(theta) != a) * h(psi(theta))`.
    WeightedIndicator { h: Vec<f64> },
    /// `I(|psi(theta) - a| > lambda)` in Euclidean distance on psi coordinates.
    BallIndicator { lambda: f64 },
    /// Capped prior-based loss on a grid of bin width `lambda`.
    DiscretizedCapped { lambda: f64, eta: f64 },
}

impl LossSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidLoss(format!("{name} must be positive, got {v}")))
            }
        };
        match self {
            LossSpec::ZeroOne | LossSpec::PriorBased => Ok(()),
            LossSpec::CappedPriorBased { eta } => positive("eta", *eta),
            LossSpec::BallIndicator { lambda } => positive("lambda", *lambda),
            LossSpec::DiscretizedCapped { lambda, eta } => {
                positive("lambda", *lambda)?;
                positive("eta", *eta)
            }
            LossSpec::WeightedIndicator { h } => {
                if h.iter().all(|v| *v >= 0.0 && v.is_finite()) {
                    Ok(())
                } else {
                    Err(Error::InvalidLoss("weights must be finite and nonnegative".into()))
                }
            }
        }
    }

    /// Loss weight `h(psi)` when the loss has indicator form `I(psi != a) h(psi)`.
    pub fn indicator_weights(&self, marg_prior: &[f64]) -> Result<Vec<f64>> {
        self.validate()?;
        match self {
            LossSpec::ZeroOne => Ok(vec![1.0; marg_prior.len()]),
            LossSpec::PriorBased => Ok(marg_prior.iter().map(|p| 1.0 / p).collect()),
            LossSpec::CappedPriorBased { eta } | LossSpec::DiscretizedCapped { eta, .. } => {
                Ok(marg_prior.iter().map(|p| 1.0 / p.max(*eta)).collect())
            }
            LossSpec::WeightedIndicator { h } => {
                if h.len() == marg_prior.len() {
                    Ok(h.clone())
                } else {
                    Err(Error::InvalidLoss(format!(
                        "{} weights for {} psi values",
                        h.len(),
                        marg_prior.len()
                    )))
                }
            }
            LossSpec::BallIndicator { .. } => Err(Error::InvalidLoss("ball loss is not of weighted-indicator form".into())),
        }
    }
}

impl fmt::Display for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossSpec::ZeroOne => f.write_str("zero-one"),
            LossSpec::PriorBased => f.write_str("prior-based"),
            LossSpec::CappedPriorBased { eta } => write!(f, "capped:{eta}"),
            LossSpec::BallIndicator { lambda } => write!(f, "ball:{lambda}"),
            LossSpec::DiscretizedCapped { lambda, eta } => write!(f, "discretized:{lambda}:{eta}"),
            LossSpec::WeightedIndicator { h } => {
                let parts: Vec<String> = h.iter().map(|v| v.to_string()).collect();
                write!(f, "weighted:[{}]", parts.join(","))
            }
        }
    }
}

/// Parses `zero-one | prior-based | capped:ETA | ball:LAMBDA | discretized:LAMBDA:ETA`.
/// Weighted losses need their weights from elsewhere and are not parsed here.
impl FromStr for LossSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidLoss(format!("bad number {v:?} in {s:?}")))
        };
        let spec = match s.trim().split_once(':') {
            None => match s.trim() {
                "zero-one" => LossSpec::ZeroOne,
                "prior-based" => LossSpec::PriorBased,
                other => return Err(Error::InvalidLoss(format!("unknown loss {other:?}"))),
            },
            Some(("capped", v)) => LossSpec::CappedPriorBased { eta: num(v)? },
            Some(("ball", v)) => LossSpec::BallIndicator { lambda: num(v)? },
            Some(("discretized", rest)) => {
                let (l, e) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::InvalidLoss("expected discretized:LAMBDA:ETA".into()))?;
                LossSpec::DiscretizedCapped {
                    lambda: num(l)?,
                    eta: num(e)?,
                }
            }
            Some(("weighted", _)) => return Err(Error::InvalidLoss("weighted losses take their weights from a file".into())),
            Some((kind, _)) => return Err(Error::InvalidLoss(format!("unknown loss {kind:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Posterior mass of the closed ball of radius `lambda` around `center`.
fn ball_mass(tables: &BeliefTables, center: usize, lambda: f64) -> Result<f64> {
    let coords = tables.psi_coords().ok_or(Error::MissingCoordinates)?;
    let c = &coords[center];
    Ok(numeric::sum(
        coords
            .iter()
            .zip(tables.marg_post())
            .filter(|(p, _)| euclid(p, c) <= lambda)
            .map(|(_, q)| *q),
    ))
}

/// Expected loss of the constant action `candidate` under the marginal posterior.
pub fn posterior_risk(loss: &LossSpec, candidate: usize, tables: &BeliefTables) -> Result<f64> {
    tables.check_index(candidate)?;
    loss.validate()?;
    let post = tables.marg_post();
    let prior = tables.marg_prior();
    let risk = match loss {
        LossSpec::ZeroOne => 1.0 - post[candidate],
        LossSpec::PriorBased => numeric::sum(tables.rb().iter().copied()) - tables.rb()[candidate],
        LossSpec::CappedPriorBased { eta } | LossSpec::DiscretizedCapped { eta, .. } => {
            let term = |j: usize| post[j] / prior[j].max(*eta);
            numeric::sum((0..tables.len()).map(term)) - term(candidate)
        }
        LossSpec::WeightedIndicator { .. } => {
            let h = loss.indicator_weights(prior)?;
            numeric::sum(h.iter().zip(post).map(|(w, q)| w * q)) - h[candidate] * post[candidate]
        }
        LossSpec::BallIndicator { lambda } => 1.0 - ball_mass(tables, candidate, *lambda)?,
    };
    Ok(risk.max(0.0))
}

/// Posterior risk of every candidate action.
pub fn posterior_risks(loss: &LossSpec, tables: &BeliefTables) -> Result<Vec<f64>> {
    (0..tables.len()).map(|j| posterior_risk(loss, j, tables)).collect()
}

/// `L(theta, a)` evaluated directly from the loss definition.
pub fn loss_value(loss: &LossSpec, theta: usize, action: usize, model: &FiniteModel) -> Result<f64> {
    loss.validate()?;
    if theta >= model.n_theta() {
        return Err(Error::model("theta", format!("index {theta} out of range")));
    }
    if action >= model.n_psi() {
        return Err(Error::UnknownPsi {
            index: action,
            size: model.n_psi(),
        });
    }
    let truth = model.psi_map()[theta];
    if let LossSpec::BallIndicator { lambda } = loss {
        let coords = model.psi_coords().ok_or(Error::MissingCoordinates)?;
        return Ok(if euclid(&coords[truth], &coords[action]) > *lambda {
            1.0
        } else {
            0.0
        });
    }
    if truth == action {
        return Ok(0.0);
    }
    let h = loss.indicator_weights(model.marginal_prior())?;
    Ok(h[truth])
}

/// Conditional error probabilities of a decision rule and its prior risk.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskReport {
    /// `M_psi(delta(x) != psi)` for each psi.
    pub per_class_error: Vec<f64>,
    pub unweighted_sum: f64,
    pub prior_weighted_sum: f64,
    /// Prior risk `r(delta)` under the requested loss.
    pub prior_risk: f64,
}

/// Prior risk of a decision table `rule[x] = psi` by exact summation over the sample space.
///
/// The risk is computed directly from [`loss_value`] and cross-checked against the
/// conditional-error identities for the prior-based and zero-one losses.
pub fn prior_risk(loss: &LossSpec, rule: &[usize], model: &FiniteModel) -> Result<RiskReport> {
    let table = model.require_stochastic_likelihood()?;
    let nx = table[0].len();
    if rule.len() != nx {
        return Err(Error::RuleMismatch {
            expected: nx,
            got: rule.len(),
        });
    }
    if let Some(&bad) = rule.iter().find(|&&a| a >= model.n_psi()) {
        return Err(Error::UnknownPsi {
            index: bad,
            size: model.n_psi(),
        });
    }

    let sampling = model.conditional_sampling()?;
    let per_class_error: Vec<f64> = sampling
        .iter()
        .enumerate()
        .map(|(j, row)| numeric::sum(row.iter().zip(rule).filter(|(_, &a)| a != j).map(|(m, _)| *m)).clamp(0.0, 1.0))
        .collect();
    let unweighted_sum = numeric::sum(per_class_error.iter().copied());
    let prior_weighted_sum = numeric::sum(per_class_error.iter().zip(model.marginal_prior()).map(|(e, p)| e * p));

    let mut risk = KahanSum::new();
    for (i, row) in table.iter().enumerate() {
        for (k, f) in row.iter().enumerate() {
            if *f > 0.0 {
                risk.add(model.prior()[i] * f * loss_value(loss, i, rule[k], model)?);
            }
        }
    }
    let prior_risk = risk.value();

    let check = |what: &'static str, a: f64, b: f64| {
        let residual = (a - b).abs();
        if residual > IDENTITY_TOL * a.abs().max(1.0) {
            Err(Error::IdentityCheck { what, residual })
        } else {
            Ok(())
        }
    };
    match loss {
        LossSpec::PriorBased => {
            check("prior risk vs sum of conditional errors", prior_risk, unweighted_sum)?;
            let expected_rb = expected_rb_at_rule(rule, model)?;
            check(
                "prior risk vs #(Psi) - E_M(rb at rule)",
                prior_risk,
                model.n_psi() as f64 - expected_rb,
            )?;
        }
        LossSpec::ZeroOne => {
            check("prior risk vs prior-weighted errors", prior_risk, prior_weighted_sum)?;
        }
        _ => {}
    }

    Ok(RiskReport {
        per_class_error,
        unweighted_sum,
        prior_weighted_sum,
        prior_risk,
    })
}

/// `E_M[rb(rule(x) | x)]` under the prior predictive of the data.
fn expected_rb_at_rule(rule: &[usize], model: &FiniteModel) -> Result<f64> {
    let m = model.prior_predictive_data()?;
    let mut acc = KahanSum::new();
    for (k, &mx) in m.iter().enumerate() {
        if mx > 0.0 {
            let t = model.belief_tables(crate::model::Observation::Index(k))?;
            acc.add(mx * t.rb()[rule[k]]);
        }
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tables(prior: &[f64], post: &[f64]) -> BeliefTables {
        BeliefTables::from_marginals(prior.to_vec(), post.to_vec()).unwrap()
    }

    #[test]
    fn prior_based_risk_uniform_two_point() {
        let t = tables(&[0.5, 0.5], &[0.25, 0.75]);
        let r = posterior_risk(&LossSpec::PriorBased, 1, &t).unwrap();
        assert_abs_diff_eq!(r, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn zero_one_point_mass() {
        let t = tables(&[0.3, 0.7], &[1.0, 0.0]);
        assert_eq!(posterior_risk(&LossSpec::ZeroOne, 0, &t).unwrap(), 0.0);
    }

    #[test]
    fn large_cap_is_scaled_zero_one() {
        let t = tables(&[0.2, 0.3, 0.5], &[0.5, 0.3, 0.2]);
        for eta in [1.0, 2.5] {
            for c in 0..3 {
                let r = posterior_risk(&LossSpec::CappedPriorBased { eta }, c, &t).unwrap();
                let z = posterior_risk(&LossSpec::ZeroOne, c, &t).unwrap();
                assert_abs_diff_eq!(r, z / eta, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn ball_risk_needs_coordinates() {
        let t = tables(&[0.5, 0.5], &[0.25, 0.75]);
        assert_eq!(
            posterior_risk(&LossSpec::BallIndicator { lambda: 1.0 }, 0, &t).unwrap_err(),
            Error::MissingCoordinates
        );
        let t = t.with_coords(vec![vec![0.0], vec![2.0]]).unwrap();
        let r = posterior_risk(&LossSpec::BallIndicator { lambda: 1.0 }, 0, &t).unwrap();
        assert_abs_diff_eq!(r, 0.75, epsilon = 1e-15);
        let r = posterior_risk(&LossSpec::BallIndicator { lambda: 3.0 }, 0, &t).unwrap();
        assert_abs_diff_eq!(r, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn unknown_candidate() {
        let t = tables(&[0.5, 0.5], &[0.25, 0.75]);
        assert!(matches!(
            posterior_risk(&LossSpec::ZeroOne, 2, &t),
            Err(Error::UnknownPsi { index: 2, size: 2 })
        ));
    }

    #[test]
    fn loss_values() {
        let m = FiniteModel::identity(vec![0.2, 0.8], vec![vec![1.0], vec![1.0]]).unwrap();
        for loss in [
            LossSpec::ZeroOne,
            LossSpec::PriorBased,
            LossSpec::CappedPriorBased { eta: 0.5 },
            LossSpec::WeightedIndicator { h: vec![3.0, 4.0] },
        ] {
            assert_eq!(loss_value(&loss, 0, 0, &m).unwrap(), 0.0);
            assert_eq!(loss_value(&loss, 1, 1, &m).unwrap(), 0.0);
        }
        assert_abs_diff_eq!(loss_value(&LossSpec::PriorBased, 0, 1, &m).unwrap(), 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            loss_value(&LossSpec::CappedPriorBased { eta: 0.5 }, 0, 1, &m).unwrap(),
            2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn separating_channel_has_zero_risk() {
        let m = FiniteModel::identity(vec![0.3, 0.7], vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let r = prior_risk(&LossSpec::PriorBased, &[0, 1], &m).unwrap();
        assert_eq!(r.per_class_error, vec![0.0, 0.0]);
        assert_eq!(r.unweighted_sum, 0.0);
        assert_eq!(r.prior_weighted_sum, 0.0);
    }

    #[test]
    fn loss_parsing() {
        assert_eq!("zero-one".parse::<LossSpec>().unwrap(), LossSpec::ZeroOne);
        assert_eq!("capped:0.25".parse::<LossSpec>().unwrap(), LossSpec::CappedPriorBased { eta: 0.25 });
        assert_eq!("ball:0.1".parse::<LossSpec>().unwrap(), LossSpec::BallIndicator { lambda: 0.1 });
        assert!("capped:-1".parse::<LossSpec>().is_err());
        assert!("capped:x".parse::<LossSpec>().is_err());
        assert!("squared".parse::<LossSpec>().is_err());
    }

    #[test]
    fn rule_shape_checked() {
        let m = FiniteModel::identity(vec![0.5, 0.5], vec![vec![0.5, 0.5], vec![0.1, 0.9]]).unwrap();
        assert!(matches!(
            prior_risk(&LossSpec::ZeroOne, &[0], &m),
            Err(Error::RuleMismatch { expected: 2, got: 1 })
        ));
    }
}
