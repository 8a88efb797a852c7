//! TOML model files.
//!
//! ```toml
//! theta = ["a", "b", "c"]
//! theta_coords = [[0.1], [0.2], [0.3]]   # optional
//! prior = [0.2, 0.3, 0.5]
//! psi_map = ["lo", "lo", "hi"]           # psi label of each theta
//! future_kernel = [[0.5, 0.5], [0.1, 0.9], [0.9, 0.1]]   # optional, g[theta][y]
//! tail_mass = 1e-10                      # optional truncation record
//!
//! [[psi]]                                # optional: psi order and coordinates
//! label = "lo"
//! coords = [0.15]
//!
//! [likelihood]
//! matrix = [[0.9, 0.1], [0.5, 0.5], [0.2, 0.8]]    # f[theta][x]
//! # or: family = "bernoulli" | "binomial" | "normal", params = one row per theta
//! #     bernoulli: [p]; binomial: [trials, p]; normal: [mean, sd]
//! ```

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, Discrete};

use crate::discretize::normal_pdf;
use crate::error::{Error, Result};
use crate::model::{FiniteModel, FutureKernel, Likelihood, Point};
use crate::numeric;

/// Prior sums further than this from one are reported when normalizing.
pub const PRIOR_WARN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Bernoulli,
    Binomial,
    Normal,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LikelihoodSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsiEntry {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub theta: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_coords: Option<Vec<Vec<f64>>>,
    pub prior: Vec<f64>,
    pub psi_map: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub future_kernel: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub psi: Vec<PsiEntry>,
    pub likelihood: LikelihoodSpec,
}

/// A model built from a file, with any normalization notices.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub model: FiniteModel,
    pub future_kernel: Option<FutureKernel>,
    pub warnings: Vec<String>,
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Describe a tabulated model as a file.
    pub fn from_model(model: &FiniteModel, future_kernel: Option<&FutureKernel>) -> Result<Self> {
        let Likelihood::Table(matrix) = model.likelihood() else {
            return Err(Error::model("likelihood", "density callbacks cannot be written to a file"));
        };
        let future_kernel = match future_kernel {
            None => None,
            Some(FutureKernel::Static(g)) => Some(g.clone()),
            Some(FutureKernel::DataDependent(_)) => {
                return Err(Error::model("future_kernel", "data-dependent kernels cannot be written to a file"))
            }
        };
        let theta_coords = model.theta().iter().map(|p| p.coords.clone()).collect();
        Ok(ModelFile {
            theta: model.theta().iter().map(|p| p.label.clone()).collect(),
            theta_coords,
            prior: model.prior().to_vec(),
            psi_map: model.psi_map().iter().map(|&j| model.psi_support()[j].label.clone()).collect(),
            future_kernel,
            tail_mass: model.truncation().map(|t| t.tail_mass),
            psi: model
                .psi_support()
                .iter()
                .map(|p| PsiEntry {
                    label: p.label.clone(),
                    coords: p.coords.clone(),
                })
                .collect(),
            likelihood: LikelihoodSpec {
                matrix: Some(matrix.clone()),
                ..Default::default()
            },
        })
    }

    /// Build the model. With `strict`, a prior not summing to one is an error;
    /// otherwise it is normalized and a warning recorded.
    pub fn build(&self, strict: bool) -> Result<LoadedModel> {
        let mut warnings = Vec::new();
        let n = self.theta.len();
        if n == 0 {
            return Err(Error::model("theta", "no parameter points"));
        }
        unique(&self.theta, "theta")?;
        if self.prior.len() != n {
            return Err(Error::model(
                "prior",
                format!("{} weights for {n} parameter points", self.prior.len()),
            ));
        }
        if let Some(i) = self.prior.iter().position(|p| !p.is_finite() || *p <= 0.0) {
            return Err(Error::model(
                "prior",
                format!("weight {i} is {}; weights must be positive", self.prior[i]),
            ));
        }
        let total = numeric::sum(self.prior.iter().copied());
        let prior = if (total - 1.0).abs() <= numeric::SUM_TOL {
            self.prior.clone()
        } else if (total - 1.0).abs() <= PRIOR_WARN_TOL {
            numeric::normalize(&self.prior)?.0
        } else if strict {
            return Err(Error::model("prior", format!("weights sum to {total}, expected 1")));
        } else {
            warnings.push(format!("prior weights sum to {total}; normalized to 1"));
            numeric::normalize(&self.prior)?.0
        };

        let theta: Vec<Point> = match &self.theta_coords {
            Some(c) if c.len() != n => {
                return Err(Error::model(
                    "theta_coords",
                    format!("{} coordinate rows for {n} parameter points", c.len()),
                ))
            }
            Some(c) => self
                .theta
                .iter()
                .zip(c)
                .map(|(l, x)| Point::with_coords(l.clone(), x.clone()))
                .collect(),
            None => self.theta.iter().map(|l| Point::new(l.clone())).collect(),
        };

        if self.psi_map.len() != n {
            return Err(Error::model(
                "psi_map",
                format!("{} labels for {n} parameter points", self.psi_map.len()),
            ));
        }
        let psi_support: Vec<Point> = if self.psi.is_empty() {
            let mut seen = Vec::<String>::new();
            for l in &self.psi_map {
                if !seen.contains(l) {
                    seen.push(l.clone());
                }
            }
            seen.into_iter().map(Point::new).collect()
        } else {
            let labels: Vec<String> = self.psi.iter().map(|p| p.label.clone()).collect();
            unique(&labels, "psi")?;
            self.psi
                .iter()
                .map(|p| Point {
                    label: p.label.clone(),
                    coords: p.coords.clone(),
                })
                .collect()
        };
        let index: HashMap<&str, usize> = psi_support.iter().enumerate().map(|(j, p)| (p.label.as_str(), j)).collect();
        let psi_map = self
            .psi_map
            .iter()
            .map(|l| {
                index
                    .get(l.as_str())
                    .copied()
                    .ok_or_else(|| Error::model("psi_map", format!("label '{l}' is not listed under psi")))
            })
            .collect::<Result<Vec<usize>>>()?;

        let likelihood = self.likelihood.build(n)?;
        let mut model = FiniteModel::new(theta, prior, likelihood, psi_map, psi_support)?;
        if let Some(t) = self.tail_mass {
            model = model.with_truncation(t)?;
        }
        let future_kernel = self.future_kernel.clone().map(FutureKernel::Static);
        if let Some(k) = &future_kernel {
            crate::model::prior_predictive(&model, k)?;
        }
        Ok(LoadedModel {
            model,
            future_kernel,
            warnings,
        })
    }
}

fn unique(labels: &[String], field: &str) -> Result<()> {
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(Error::model(field, format!("label '{l}' appears twice")));
        }
    }
    Ok(())
}

impl LikelihoodSpec {
    fn build(&self, n: usize) -> Result<Likelihood> {
        match (&self.matrix, self.family, &self.params) {
            (Some(m), None, None) => {
                if m.len() != n {
                    return Err(Error::model(
                        "likelihood.matrix",
                        format!("{} rows for {n} parameter points", m.len()),
                    ));
                }
                Ok(Likelihood::Table(m.clone()))
            }
            (None, Some(family), Some(params)) => {
                if params.len() != n {
                    return Err(Error::model(
                        "likelihood.params",
                        format!("{} rows for {n} parameter points", params.len()),
                    ));
                }
                family_likelihood(family, params)
            }
            _ => Err(Error::model("likelihood", "give either `matrix` or both `family` and `params`")),
        }
    }
}

fn family_likelihood(family: Family, params: &[Vec<f64>]) -> Result<Likelihood> {
    let arity = match family {
        Family::Bernoulli => 1,
        Family::Binomial | Family::Normal => 2,
    };
    if let Some(i) = params.iter().position(|r| r.len() != arity) {
        return Err(Error::model(
            "likelihood.params",
            format!("row {i} has {} values, {family:?} takes {arity}", params[i].len()),
        ));
    }
    let prob = |i: usize, p: f64| {
        if (0.0..=1.0).contains(&p) {
            Ok(p)
        } else {
            Err(Error::model("likelihood.params", format!("row {i}: {p} is not a probability")))
        }
    };
    match family {
        Family::Bernoulli => params
            .iter()
            .enumerate()
            .map(|(i, r)| prob(i, r[0]).map(|p| vec![1.0 - p, p]))
            .collect::<Result<_>>()
            .map(Likelihood::Table),
        Family::Binomial => {
            let trials = params[0][0];
            if trials < 0.0 || trials.fract() != 0.0 || params.iter().any(|r| r[0] != trials) {
                return Err(Error::model(
                    "likelihood.params",
                    "binomial trial counts must be one shared nonnegative integer",
                ));
            }
            let t = trials as u64;
            params
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let p = prob(i, r[1])?;
                    let d = Binomial::new(p, t).map_err(|e| Error::model("likelihood.params", e.to_string()))?;
                    Ok((0..=t).map(|k| d.pmf(k)).collect())
                })
                .collect::<Result<_>>()
                .map(Likelihood::Table)
        }
        Family::Normal => {
            if let Some(i) = params.iter().position(|r| !(r[1] > 0.0) || !r[0].is_finite()) {
                return Err(Error::model(
                    "likelihood.params",
                    format!("row {i}: need a finite mean and positive sd"),
                ));
            }
            let rows = params.to_vec();
            Ok(Likelihood::Density(Arc::new(move |i, x| normal_pdf(x, rows[i][0], rows[i][1]))))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Observation;

    const EX: &str = r#"
theta = ["psi1", "psi2"]
prior = [0.95, 0.05]
psi_map = ["psi1", "psi2"]

[likelihood]
family = "bernoulli"
params = [[0.05], [0.8]]
"#;

    #[test]
    fn family_file_builds() {
        let m = ModelFile::parse(EX).unwrap().build(true).unwrap();
        assert_eq!(m.model.n_psi(), 2);
        assert_eq!(m.model.likelihood_at(1, Observation::Index(1)).unwrap(), 0.8);
        assert!(m.warnings.is_empty());
    }

    #[test]
    fn prior_off_by_tenth() {
        let text = EX.replace("0.95, 0.05", "0.85, 0.05");
        let f = ModelFile::parse(&text).unwrap();
        match f.build(true).unwrap_err() {
            Error::InvalidModel { field, .. } => assert_eq!(field, "prior"),
            e => panic!("{e}"),
        }
        let loose = f.build(false).unwrap();
        assert_eq!(loose.warnings.len(), 1);
        assert!((loose.model.prior()[0] - 0.85 / 0.9).abs() < 1e-15);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(ModelFile::parse(&format!("{EX}\nextra = 1")), Err(Error::Parse(_))));
    }

    #[test]
    fn binomial_family_rows_sum_to_one() {
        let text = r#"
theta = ["a", "b"]
prior = [0.5, 0.5]
psi_map = ["a", "b"]
[likelihood]
family = "binomial"
params = [[4, 0.2], [4, 0.7]]
"#;
        let m = ModelFile::parse(text).unwrap().build(true).unwrap().model;
        assert_eq!(m.sample_size(), Some(5));
        m.require_stochastic_likelihood().unwrap();
    }

    #[test]
    fn matrix_round_trip_is_exact() {
        let text = r#"
theta = ["a", "b", "c"]
theta_coords = [[0.1], [0.2], [0.3]]
prior = [0.1, 0.2, 0.7]
psi_map = ["hi", "lo", "lo"]
future_kernel = [[0.5, 0.5], [0.1, 0.9], [0.9, 0.1]]

[[psi]]
label = "lo"
coords = [0.25]

[[psi]]
label = "hi"

[likelihood]
matrix = [[0.9, 0.1], [0.3333333333333333, 0.6666666666666667], [0.2, 0.8]]
"#;
        let first = ModelFile::parse(text).unwrap().build(true).unwrap();
        let written = ModelFile::from_model(&first.model, first.future_kernel.as_ref())
            .unwrap()
            .to_toml()
            .unwrap();
        let second = ModelFile::parse(&written).unwrap().build(true).unwrap();
        assert_eq!(first.model, second.model);
        assert_eq!(first.future_kernel, second.future_kernel);
        assert_eq!(second.model.psi_support()[0].label, "lo");
    }
}
