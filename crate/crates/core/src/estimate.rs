//! Point estimators: LRSE, MAP, Bayes rules under the loss family, and
//! Bayesian-unbiasedness checks for decision rules.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::loss::{posterior_risks, LossSpec};
use crate::model::{BeliefTables, FiniteModel, Observation, PredictiveTables, Truncation};
use crate::numeric::{self, KahanSum, TIE_RTOL};

/// A chosen psi value together with the optimized criterion.
///
/// Ties are resolved to the lowest index and always reported through `tie`
/// and `argmax_set`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateResult {
    pub psi_index: usize,
    /// Relative belief ratio, posterior probability, or negative posterior risk at `psi_index`.
    pub criterion_value: f64,
    pub tie: bool,
    /// Every index attaining the optimum.
    pub argmax_set: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<Truncation>,
}

impl EstimateResult {
    fn from_argmax(values: &[f64], truncation: Option<Truncation>) -> Self {
        let set = numeric::argmax_set(values);
        let psi_index = set[0];
        EstimateResult {
            psi_index,
            criterion_value: values[psi_index],
            tie: set.len() > 1,
            argmax_set: set,
            truncation,
        }
    }
}

/// Least relative surprise estimate: the maximizer of the relative belief ratio.
pub fn lrse(tables: &BeliefTables) -> EstimateResult {
    EstimateResult::from_argmax(tables.rb(), tables.truncation())
}

/// Maximum a posteriori estimate of psi.
pub fn map(tables: &BeliefTables) -> EstimateResult {
    EstimateResult::from_argmax(tables.marg_post(), tables.truncation())
}

/// Exhaustive minimizer of the posterior risk.
pub fn bayes_rule(loss: &LossSpec, tables: &BeliefTables) -> Result<EstimateResult> {
    let risks = posterior_risks(loss, tables)?;
    let set = numeric::argmin_set(&risks);
    let psi_index = set[0];
    Ok(EstimateResult {
        psi_index,
        criterion_value: -risks[psi_index],
        tie: set.len() > 1,
        argmax_set: set,
        truncation: tables.truncation(),
    })
}

/// Maximizer of the predictive relative belief ratio `q(y|x) / q(y)`.
pub fn predict_lrse(pred: &PredictiveTables) -> EstimateResult {
    EstimateResult::from_argmax(&pred.rb_pred, None)
}

/// Largest cap below which the capped prior-based Bayes rule is guaranteed to be the LRSE.
///
/// For `eta <= bound` every capped criterion `post / max(eta, prior)` is bounded by the
/// relative belief ratio while the LRSE keeps its ratio, so the Bayes rule and LRSE agree.
pub fn capped_agreement_bound(tables: &BeliefTables) -> f64 {
    let est = lrse(tables);
    est.argmax_set.iter().map(|&j| tables.marg_prior()[j]).fold(f64::INFINITY, f64::min)
}

/// One step of an eta sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EtaStep {
    pub eta: f64,
    pub decision: usize,
    pub equals_lrse: bool,
}

/// Capped prior-based Bayes rules along a decreasing eta schedule.
pub fn capped_bayes_sweep(tables: &BeliefTables, etas: &[f64]) -> Result<Vec<EtaStep>> {
    check_decreasing(etas, "eta")?;
    let best = lrse(tables);
    etas.iter()
        .map(|&eta| {
            let d = bayes_rule(&LossSpec::CappedPriorBased { eta }, tables)?;
            Ok(EtaStep {
                eta,
                decision: d.psi_index,
                equals_lrse: best.argmax_set.contains(&d.psi_index),
            })
        })
        .collect()
}

pub(crate) fn check_decreasing(values: &[f64], name: &'static str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::param(name, "schedule is empty"));
    }
    if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::param(name, "schedule values must be positive"));
    }
    if values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::param(name, "schedule must be strictly decreasing"));
    }
    Ok(())
}

/// Decision table `rule[x]` over a tabulated sample space.
///
/// Data points with zero prior predictive mass get action 0; they never
/// contribute to any risk.
pub fn decision_table<F>(model: &FiniteModel, mut choose: F) -> Result<Vec<usize>>
where
    F: FnMut(&BeliefTables) -> Result<usize>,
{
    let nx = model.sample_size().ok_or(Error::InfiniteSampleSpace)?;
    (0..nx)
        .map(|k| match model.belief_tables(Observation::Index(k)) {
            Ok(t) => choose(&t),
            Err(Error::ZeroEvidence) => Ok(0),
            Err(e) => Err(e),
        })
        .collect()
}

pub fn lrse_rule(model: &FiniteModel) -> Result<Vec<usize>> {
    decision_table(model, |t| Ok(lrse(t).psi_index))
}

pub fn map_rule(model: &FiniteModel) -> Result<Vec<usize>> {
    decision_table(model, |t| Ok(map(t).psi_index))
}

pub fn bayes_decision_rule(model: &FiniteModel, loss: &LossSpec) -> Result<Vec<usize>> {
    decision_table(model, |t| Ok(bayes_rule(loss, t)?.psi_index))
}

/// Rule choosing the minimizer of the relative belief ratio at every x.
pub fn least_supported_rule(model: &FiniteModel) -> Result<Vec<usize>> {
    decision_table(model, |t| Ok(numeric::argmin_set(t.rb())[0]))
}

/// Integral `sum_x m(x) h(rule(x)) [pi(rule(x)|x) - pi(rule(x))]`.
///
/// A rule is Bayesian unbiased under the weighted-indicator loss with weights `h`
/// exactly when this is nonnegative. Terms whose posterior and prior agree to within
/// the tie tolerance count as zero.
pub fn unbiasedness_gap(loss: &LossSpec, rule: &[usize], model: &FiniteModel) -> Result<f64> {
    let h = loss.indicator_weights(model.marginal_prior())?;
    let m = model.prior_predictive_data()?;
    check_rule(rule, model, m.len())?;
    let mut acc = KahanSum::new();
    for (k, &mx) in m.iter().enumerate() {
        if mx <= 0.0 {
            continue;
        }
        let t = model.belief_tables(Observation::Index(k))?;
        let a = rule[k];
        let prior = t.marg_prior()[a];
        let diff = t.marg_post()[a] - prior;
        if diff.abs() > TIE_RTOL * prior {
            acc.add(mx * h[a] * diff);
        }
    }
    Ok(acc.value())
}

/// Per-x check of `pi(rule(x)|x) >= pi(rule(x))`; data with zero evidence pass vacuously.
pub fn uniform_unbiasedness_check(rule: &[usize], model: &FiniteModel) -> Result<Vec<bool>> {
    let nx = model.sample_size().ok_or(Error::InfiniteSampleSpace)?;
    check_rule(rule, model, nx)?;
    (0..nx)
        .map(|k| match model.belief_tables(Observation::Index(k)) {
            Ok(t) => {
                let a = rule[k];
                let prior = t.marg_prior()[a];
                Ok(t.marg_post()[a] >= prior - TIE_RTOL * prior)
            }
            Err(Error::ZeroEvidence) => Ok(true),
            Err(e) => Err(e),
        })
        .collect()
}

fn check_rule(rule: &[usize], model: &FiniteModel, nx: usize) -> Result<()> {
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
    Ok(())
}
