//! Closed-form models: a two-class Bernoulli classifier, conjugate Gaussian
//! linear regression with prediction, and a Beta-Bernoulli class predictor.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::RiskReport;
use crate::model::{FiniteModel, Likelihood, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Map,
    Lrse,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Map => "map",
            Method::Lrse => "lrse",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "map" => Ok(Method::Map),
            "lrse" => Ok(Method::Lrse),
            other => Err(Error::param("method", format!("unknown method '{other}', expected map or lrse"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClassChoice {
    Psi1,
    Psi2,
    Tie,
}

impl ClassChoice {
    /// Index in the two-point model, ties going to the first class.
    pub fn index(self) -> usize {
        match self {
            ClassChoice::Psi2 => 1,
            _ => 0,
        }
    }
}

impl fmt::Display for ClassChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassChoice::Psi1 => "psi1",
            ClassChoice::Psi2 => "psi2",
            ClassChoice::Tie => "tie",
        })
    }
}

/// A single Bernoulli trial with success probability `psi1` or `psi2`, the latter
/// having prior probability `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialClassifier {
    pub psi1: f64,
    pub psi2: f64,
    pub epsilon: f64,
}

impl BinomialClassifier {
    pub fn new(psi1: f64, psi2: f64, epsilon: f64) -> Result<Self> {
        for (name, v) in [("psi1", psi1), ("psi2", psi2)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(name, format!("{v} is not a probability")));
            }
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::param("epsilon", format!("{epsilon} is not in (0, 1)")));
        }
        Ok(BinomialClassifier { psi1, psi2, epsilon })
    }

    fn lik(&self, psi: f64, x: u8) -> f64 {
        if x == 1 {
            psi
        } else {
            1.0 - psi
        }
    }

    pub fn classify(&self, x: u8, method: Method) -> Result<ClassChoice> {
        if x > 1 {
            return Err(Error::InvalidObservation(format!("{x} is not 0 or 1")));
        }
        let (mut a, mut b) = (self.lik(self.psi1, x), self.lik(self.psi2, x));
        if method == Method::Map {
            a *= 1.0 - self.epsilon;
            b *= self.epsilon;
        }
        Ok(if a > b {
            ClassChoice::Psi1
        } else if b > a {
            ClassChoice::Psi2
        } else {
            ClassChoice::Tie
        })
    }

    /// The same problem as a two-point model over the sample space `{0, 1}`.
    pub fn to_finite_model(&self) -> Result<FiniteModel> {
        let theta = vec![
            Point::with_coords("psi1", vec![self.psi1]),
            Point::with_coords("psi2", vec![self.psi2]),
        ];
        let table = vec![vec![1.0 - self.psi1, self.psi1], vec![1.0 - self.psi2, self.psi2]];
        FiniteModel::new(
            theta.clone(),
            vec![1.0 - self.epsilon, self.epsilon],
            Likelihood::Table(table),
            vec![0, 1],
            theta,
        )
    }

    /// Conditional error probabilities of the rule for `method`, ties going to `psi1`.
    pub fn classifier_risks(&self, method: Method) -> Result<RiskReport> {
        let rule = [self.classify(0, method)?.index(), self.classify(1, method)?.index()];
        let error = |class: usize, psi: f64| -> f64 { (0..2u8).filter(|&x| rule[x as usize] != class).map(|x| self.lik(psi, x)).sum() };
        let per_class_error = vec![error(0, self.psi1), error(1, self.psi2)];
        let unweighted_sum = per_class_error[0] + per_class_error[1];
        let prior_weighted_sum = (1.0 - self.epsilon) * per_class_error[0] + self.epsilon * per_class_error[1];
        Ok(RiskReport {
            per_class_error,
            unweighted_sum,
            prior_weighted_sum,
            prior_risk: prior_weighted_sum,
        })
    }
}

/// `y = X beta + e` with `e ~ N(0, sigma2 I)`, `beta ~ N(0, tau2 I)` and the
/// linear functional `psi = w' beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianRegression {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub w: DVector<f64>,
    pub sigma2: f64,
    pub tau2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionEstimates {
    /// Least-squares estimate `(X'X)^-1 X'y`.
    pub b: Vec<f64>,
    pub mu_post_beta: Vec<f64>,
    pub sigma_post_beta: Vec<Vec<f64>>,
    pub mu_post_psi: f64,
    pub var_post_psi: f64,
    pub var_prior_psi: f64,
    pub psi_map: f64,
    pub psi_lrse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionPrediction {
    pub mu_post_z: f64,
    pub var_post_z: f64,
    pub var_prior_z: f64,
    pub z_map: f64,
    pub z_lrse: f64,
}

impl GaussianRegression {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, w: DVector<f64>, sigma2: f64, tau2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::param("sigma2", format!("{sigma2} must be positive")));
        }
        if !(tau2 > 0.0 && tau2.is_finite()) {
            return Err(Error::param("tau2", format!("{tau2} must be positive")));
        }
        if y.len() != x.nrows() {
            return Err(Error::param("y", format!("{} responses for {} design rows", y.len(), x.nrows())));
        }
        if w.len() != x.ncols() {
            return Err(Error::param("w", format!("{} covariates for {} coefficients", w.len(), x.ncols())));
        }
        if w.iter().all(|v| *v == 0.0) {
            return Err(Error::param("w", "prediction covariates are all zero"));
        }
        Ok(GaussianRegression { x, y, w, sigma2, tau2 })
    }

    /// Build from row-major design rows.
    pub fn from_rows(rows: &[Vec<f64>], y: &[f64], w: &[f64], sigma2: f64, tau2: f64) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if k == 0 || rows.iter().any(|r| r.len() != k) {
            return Err(Error::param("X", "design rows must be nonempty and of equal length"));
        }
        let x = DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]);
        Self::new(x, DVector::from_column_slice(y), DVector::from_column_slice(w), sigma2, tau2)
    }

    fn posterior_beta(&self) -> Result<(DVector<f64>, DMatrix<f64>, DVector<f64>)> {
        let xtx = self.x.transpose() * &self.x;
        let xty = self.x.transpose() * &self.y;
        let chol = xtx.clone().cholesky().ok_or(Error::SingularDesign)?;
        let b = chol.solve(&xty);
        let k = self.x.ncols();
        let precision = DMatrix::identity(k, k) / self.tau2 + xtx / self.sigma2;
        let sigma_post = precision.cholesky().ok_or(Error::SingularDesign)?.inverse();
        let mu_post = &sigma_post * (xty / self.sigma2);
        Ok((b, sigma_post, mu_post))
    }

    pub fn regression_estimates(&self) -> Result<RegressionEstimates> {
        let (b, sigma_post, mu_post) = self.posterior_beta()?;
        let mu_post_psi = self.w.dot(&mu_post);
        let var_post_psi = self.w.dot(&(&sigma_post * &self.w));
        let var_prior_psi = self.tau2 * self.w.dot(&self.w);
        if !(var_prior_psi > var_post_psi) {
            return Err(Error::HypothesisViolated(format!(
                "posterior variance {var_post_psi} is not below prior variance {var_prior_psi}"
            )));
        }
        let psi_lrse = mu_post_psi / (1.0 - var_post_psi / var_prior_psi);
        Ok(RegressionEstimates {
            b: b.iter().copied().collect(),
            mu_post_beta: mu_post.iter().copied().collect(),
            sigma_post_beta: sigma_post.row_iter().map(|r| r.iter().copied().collect()).collect(),
            mu_post_psi,
            var_post_psi,
            var_prior_psi,
            psi_map: mu_post_psi,
            psi_lrse,
        })
    }

    /// Prediction of `z = w' beta + e` at the covariates `w`.
    pub fn regression_predict(&self) -> Result<RegressionPrediction> {
        let est = self.regression_estimates()?;
        let var_prior_z = self.sigma2 + est.var_prior_psi;
        let var_post_z = self.sigma2 + est.var_post_psi;
        let z_lrse = est.mu_post_psi / (1.0 - var_post_z / var_prior_z);
        let ratio = 1.0 + self.sigma2 / est.var_prior_psi;
        let scale = z_lrse.abs().max(f64::MIN_POSITIVE);
        let residual = (z_lrse - ratio * est.psi_lrse).abs();
        if residual > 1e-10 * scale {
            return Err(Error::IdentityCheck {
                what: "predictive LRSE vs scaled parameter LRSE",
                residual,
            });
        }
        Ok(RegressionPrediction {
            mu_post_z: est.mu_post_psi,
            var_post_z,
            var_prior_z,
            z_map: est.mu_post_psi,
            z_lrse,
        })
    }
}

/// Predicts the class of a new case from `n` labelled cases with mean label `cbar`,
/// a Beta(`alpha`, `beta`) prior on the class-1 rate, and the class likelihood ratio
/// `f_ratio = f1(x) / f0(x)` at the new case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaBernoulliPredictor {
    pub alpha: f64,
    pub beta: f64,
    pub n: u64,
    pub cbar: f64,
    pub f_ratio: f64,
}

impl BetaBernoulliPredictor {
    pub fn new(alpha: f64, beta: f64, n: u64, cbar: f64, f_ratio: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(beta > 0.0) {
            return Err(Error::param("alpha/beta", "must be positive"));
        }
        if !(0.0..=1.0).contains(&cbar) {
            return Err(Error::param("cbar", format!("{cbar} is not in [0, 1]")));
        }
        if !(f_ratio > 0.0) || !f_ratio.is_finite() {
            return Err(Error::param("f_ratio", format!("{f_ratio} must be positive and finite")));
        }
        Ok(BetaBernoulliPredictor {
            alpha,
            beta,
            n,
            cbar,
            f_ratio,
        })
    }

    /// Posterior-to-prior odds factor applied to `f_ratio` by each method.
    pub fn odds_factor(alpha: f64, beta: f64, n: u64, cbar: f64, method: Method) -> f64 {
        let ones = alpha + n as f64 * cbar;
        let zeros = beta + n as f64 * (1.0 - cbar);
        match method {
            Method::Map => ones / zeros,
            Method::Lrse => beta * ones / (alpha * zeros),
        }
    }

    /// Class 1 exactly when the adjusted ratio reaches 1.
    pub fn predict_class(&self, method: Method) -> u8 {
        let r = self.f_ratio * Self::odds_factor(self.alpha, self.beta, self.n, self.cbar, method);
        u8::from(r >= 1.0)
    }
}

/// `N(mu, 1)` over `N(0, 1)` density ratio at `x`.
pub fn gaussian_f_ratio(mu: f64, x: f64) -> f64 {
    (mu * x - 0.5 * mu * mu).exp()
}

/// Smallest `x` predicted as class 1 under Gaussian classes `N(0, 1)` and `N(mu, 1)`, `mu > 0`.
pub fn gaussian_class_threshold(alpha: f64, beta: f64, n: u64, cbar: f64, mu: f64, method: Method) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::param("mu", "threshold form needs mu > 0"));
    }
    let r = BetaBernoulliPredictor::odds_factor(alpha, beta, n, cbar, method);
    Ok(0.5 * mu - r.ln() / mu)
}
