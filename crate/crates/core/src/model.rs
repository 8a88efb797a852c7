//! Finite Bayesian models and the posterior, marginal and predictive tables
//! computed from them.
//!
//! A [`FiniteModel`] is the single internal representation used by every other
//! module: a finite parameter set with prior weights, a likelihood (tabulated
//! over a finite sample space, or a density callback for continuous data), and
//! a surjective map from parameters onto the marginal parameter `psi`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{self, KahanSum, SUM_TOL};

/// Tolerance for rows of stochastic kernels (likelihood rows, future kernels).
pub const KERNEL_TOL: f64 = 1e-10;

/// Largest tail mass a truncated countable model may drop.
pub const MAX_TAIL_MASS: f64 = 1e-9;

/// A labelled point of the parameter or marginal-parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<f64>>,
}

impl Point {
    pub fn new(label: impl Into<String>) -> Self {
        Point {
            label: label.into(),
            coords: None,
        }
    }

    pub fn with_coords(label: impl Into<String>, coords: Vec<f64>) -> Self {
        Point {
            label: label.into(),
            coords: Some(coords),
        }
    }
}

/// Density `f_theta(x)` evaluated at a real-valued observation.
pub type DensityFn = Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Likelihood {
    /// `table[theta][x]` over a finite sample space.
    Table(Vec<Vec<f64>>),
    /// `f(theta_index, x)` for continuous data; only ever evaluated at the observed `x`.
    Density(DensityFn),
}

impl fmt::Debug for Likelihood {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Likelihood::Table(t) => f.debug_tuple("Table").field(t).finish(),
            Likelihood::Density(_) => f.write_str("Density(<callback>)"),
        }
    }
}

impl PartialEq for Likelihood {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Likelihood::Table(a), Likelihood::Table(b)) => a == b,
            (Likelihood::Density(a), Likelihood::Density(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

/// Observed data: an index into a tabulated sample space or a real value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Observation {
    Index(usize),
    Value(f64),
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observation::Index(i) => write!(f, "{i}"),
            Observation::Value(v) => write!(f, "{v}"),
        }
    }
}

/// Truncation of a countable parameter space to finitely many points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    /// Number of retained points.
    pub points: usize,
    /// Prior mass discarded beyond the last retained point.
    pub tail_mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteModel {
    theta: Vec<Point>,
    prior: Vec<f64>,
    likelihood: Likelihood,
    psi_map: Vec<usize>,
    psi_support: Vec<Point>,
    marg_prior: Vec<f64>,
    truncation: Option<Truncation>,
}

impl FiniteModel {
    pub fn new(theta: Vec<Point>, prior: Vec<f64>, likelihood: Likelihood, psi_map: Vec<usize>, psi_support: Vec<Point>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::model("theta", "parameter support is empty"));
        }
        if prior.len() != theta.len() {
            return Err(Error::model(
                "prior",
                format!("{} weights for {} parameter points", prior.len(), theta.len()),
            ));
        }
        if let Some(i) = prior.iter().position(|p| !p.is_finite() || *p <= 0.0) {
            return Err(Error::model(
                "prior",
                format!("weight {i} is {}; every prior weight must be positive", prior[i]),
            ));
        }
        let total = numeric::sum(prior.iter().copied());
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::model("prior", format!("weights sum to {total}, expected 1")));
        }
        if psi_map.len() != theta.len() {
            return Err(Error::model(
                "psi_map",
                format!("{} entries for {} parameter points", psi_map.len(), theta.len()),
            ));
        }
        if psi_support.is_empty() {
            return Err(Error::model("psi_map", "marginal support is empty"));
        }
        let mut covered = vec![false; psi_support.len()];
        for (i, &j) in psi_map.iter().enumerate() {
            if j >= psi_support.len() {
                return Err(Error::model(
                    "psi_map",
                    format!("entry {i} maps to psi {j}, support has {}", psi_support.len()),
                ));
            }
            covered[j] = true;
        }
        if let Some(j) = covered.iter().position(|c| !c) {
            return Err(Error::model(
                "psi_map",
                format!("psi value {} has no preimage", psi_support[j].label),
            ));
        }

        if let Likelihood::Table(table) = &likelihood {
            validate_table(table, theta.len())?;
        }

        let mut marg = vec![KahanSum::new(); psi_support.len()];
        for (i, &j) in psi_map.iter().enumerate() {
            marg[j].add(prior[i]);
        }
        let marg_prior = marg.iter().map(KahanSum::value).collect();

        Ok(FiniteModel {
            theta,
            prior,
            likelihood,
            psi_map,
            psi_support,
            marg_prior,
            truncation: None,
        })
    }

    /// Model with generated labels `t0, t1, ...` and `p0, p1, ...`.
    pub fn from_table(prior: Vec<f64>, table: Vec<Vec<f64>>, psi_map: Vec<usize>) -> Result<Self> {
        let n_psi = psi_map.iter().max().map_or(0, |m| m + 1);
        let theta = (0..prior.len()).map(|i| Point::new(format!("t{i}"))).collect();
        let psi = (0..n_psi).map(|j| Point::new(format!("p{j}"))).collect();
        Self::new(theta, prior, Likelihood::Table(table), psi_map, psi)
    }

    /// Model whose parameter is its own marginal parameter.
    pub fn identity(prior: Vec<f64>, table: Vec<Vec<f64>>) -> Result<Self> {
        let map = (0..prior.len()).collect();
        Self::from_table(prior, table, map)
    }

    /// Record that this model truncates a countable parameter space.
    pub fn with_truncation(mut self, tail_mass: f64) -> Result<Self> {
        if !(0.0..=MAX_TAIL_MASS).contains(&tail_mass) {
            return Err(Error::param(
                "tail_mass",
                format!("{tail_mass} exceeds the allowed bound {MAX_TAIL_MASS}"),
            ));
        }
        self.truncation = Some(Truncation {
            points: self.theta.len(),
            tail_mass,
        });
        Ok(self)
    }

    pub fn theta(&self) -> &[Point] {
        &self.theta
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn likelihood(&self) -> &Likelihood {
        &self.likelihood
    }

    pub fn psi_map(&self) -> &[usize] {
        &self.psi_map
    }

    pub fn psi_support(&self) -> &[Point] {
        &self.psi_support
    }

    pub fn marginal_prior(&self) -> &[f64] {
        &self.marg_prior
    }

    pub fn truncation(&self) -> Option<Truncation> {
        self.truncation
    }

    pub fn n_theta(&self) -> usize {
        self.theta.len()
    }

    pub fn n_psi(&self) -> usize {
        self.psi_support.len()
    }

    /// Size of the tabulated sample space, `None` for density likelihoods.
    pub fn sample_size(&self) -> Option<usize> {
        match &self.likelihood {
            Likelihood::Table(t) => Some(t[0].len()),
            Likelihood::Density(_) => None,
        }
    }

    /// Parameter indices mapping to `psi`.
    pub fn fiber(&self, psi: usize) -> Vec<usize> {
        (0..self.theta.len()).filter(|&i| self.psi_map[i] == psi).collect()
    }

    /// Coordinates of every psi value, if all of them have coordinates.
    pub fn psi_coords(&self) -> Option<Vec<Vec<f64>>> {
        self.psi_support.iter().map(|p| p.coords.clone()).collect()
    }

    pub fn likelihood_at(&self, theta: usize, x: Observation) -> Result<f64> {
        match (&self.likelihood, x) {
            (Likelihood::Table(t), Observation::Index(k)) => t[theta]
                .get(k)
                .copied()
                .ok_or_else(|| Error::InvalidObservation(format!("index {k} out of range"))),
            (Likelihood::Density(f), Observation::Value(v)) => {
                let d = f(theta, v);
                if d.is_finite() && d >= 0.0 {
                    Ok(d)
                } else {
                    Err(Error::InvalidObservation(format!("density for theta {theta} at {v} is {d}")))
                }
            }
            (Likelihood::Table(_), Observation::Value(v)) => {
                Err(Error::InvalidObservation(format!("value {v} given for a tabulated sample space")))
            }
            (Likelihood::Density(_), Observation::Index(k)) => {
                Err(Error::InvalidObservation(format!("index {k} given for a continuous sample space")))
            }
        }
    }

    /// Fiber-averaged sampling table `M_psi(x)`, indexed `[psi][x]`.
    pub fn conditional_sampling(&self) -> Result<Vec<Vec<f64>>> {
        let Likelihood::Table(table) = &self.likelihood else {
            return Err(Error::InfiniteSampleSpace);
        };
        let nx = table[0].len();
        let mut acc = vec![vec![KahanSum::new(); nx]; self.n_psi()];
        for (i, row) in table.iter().enumerate() {
            let j = self.psi_map[i];
            let w = self.prior[i] / self.marg_prior[j];
            for (k, f) in row.iter().enumerate() {
                acc[j][k].add(w * f);
            }
        }
        Ok(acc.into_iter().map(|r| r.iter().map(KahanSum::value).collect()).collect())
    }

    /// The model reduced to its marginal parameter, with likelihood `M_psi`.
    pub fn marginal_model(&self) -> Result<FiniteModel> {
        let table = self.conditional_sampling()?;
        let (prior, _) = numeric::normalize(&self.marg_prior)?;
        let n = self.n_psi();
        FiniteModel::new(
            self.psi_support.clone(),
            prior,
            Likelihood::Table(table),
            (0..n).collect(),
            self.psi_support.clone(),
        )
    }

    /// Prior predictive of the data, `m(x)`, over a tabulated sample space.
    pub fn prior_predictive_data(&self) -> Result<Vec<f64>> {
        let Likelihood::Table(table) = &self.likelihood else {
            return Err(Error::InfiniteSampleSpace);
        };
        let nx = table[0].len();
        Ok((0..nx)
            .map(|k| numeric::sum(table.iter().zip(&self.prior).map(|(r, p)| p * r[k])))
            .collect())
    }

    /// Fail unless every likelihood row is a probability vector over the sample space.
    pub fn require_stochastic_likelihood(&self) -> Result<&Vec<Vec<f64>>> {
        let Likelihood::Table(table) = &self.likelihood else {
            return Err(Error::InfiniteSampleSpace);
        };
        check_rows(table)?;
        Ok(table)
    }

    pub fn posterior(&self, x: Observation) -> Result<Posterior> {
        compute_posterior(self, x)
    }

    pub fn belief_tables(&self, x: Observation) -> Result<BeliefTables> {
        let post = compute_posterior(self, x)?;
        marginalize(&post, self)
    }
}

fn validate_table(table: &[Vec<f64>], n_theta: usize) -> Result<()> {
    if table.len() != n_theta {
        return Err(Error::model(
            "likelihood",
            format!("{} rows for {} parameter points", table.len(), n_theta),
        ));
    }
    let nx = table[0].len();
    if nx == 0 {
        return Err(Error::model("likelihood", "sample space is empty"));
    }
    for (i, row) in table.iter().enumerate() {
        if row.len() != nx {
            return Err(Error::model(
                "likelihood",
                format!("row {i} has {} columns, expected {nx}", row.len()),
            ));
        }
        if let Some(k) = row.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::model("likelihood", format!("entry ({i}, {k}) is negative or not finite")));
        }
    }
    for k in 0..nx {
        if table.iter().all(|r| r[k] == 0.0) {
            return Err(Error::model("likelihood", format!("column {k} is zero under every parameter")));
        }
    }
    Ok(())
}

fn check_rows(rows: &[Vec<f64>]) -> Result<()> {
    for (row, r) in rows.iter().enumerate() {
        let sum = numeric::sum(r.iter().copied());
        if (sum - 1.0).abs() > KERNEL_TOL || r.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::NonStochasticKernel { row, sum });
        }
    }
    Ok(())
}

/// Full posterior over the parameter support.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub probs: Vec<f64>,
    /// Prior predictive density of the observation, `m(x)`.
    pub evidence: f64,
    pub x: Observation,
}

pub fn compute_posterior(model: &FiniteModel, x: Observation) -> Result<Posterior> {
    let weights = (0..model.n_theta())
        .map(|i| Ok(model.prior[i] * model.likelihood_at(i, x)?))
        .collect::<Result<Vec<f64>>>()?;
    let (probs, evidence) = numeric::normalize(&weights)?;
    Ok(Posterior { probs, evidence, x })
}

/// Marginal prior, marginal posterior and relative belief ratio over the psi support.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeliefTables {
    x: Option<Observation>,
    marg_prior: Vec<f64>,
    marg_post: Vec<f64>,
    rb: Vec<f64>,
    evidence: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    psi_coords: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    truncation: Option<Truncation>,
}

impl BeliefTables {
    /// Tables built directly from a marginal prior and posterior.
    pub fn from_marginals(marg_prior: Vec<f64>, marg_post: Vec<f64>) -> Result<Self> {
        if marg_prior.len() != marg_post.len() || marg_prior.is_empty() {
            return Err(Error::model(
                "marg_post",
                "prior and posterior must be nonempty and of equal length",
            ));
        }
        for (name, v) in [("marg_prior", &marg_prior), ("marg_post", &marg_post)] {
            let s = numeric::sum(v.iter().copied());
            if (s - 1.0).abs() > SUM_TOL {
                return Err(Error::model(name, format!("sums to {s}, expected 1")));
            }
        }
        if let Some(i) = marg_prior.iter().position(|p| *p <= 0.0) {
            return Err(Error::model("marg_prior", format!("entry {i} is not positive")));
        }
        if marg_post.iter().any(|p| *p < 0.0 || !p.is_finite()) {
            return Err(Error::model("marg_post", "entries must be nonnegative"));
        }
        let (marg_prior, _) = numeric::normalize(&marg_prior)?;
        let (marg_post, _) = numeric::normalize(&marg_post)?;
        let rb = marg_post.iter().zip(&marg_prior).map(|(q, p)| q / p).collect();
        Ok(BeliefTables {
            x: None,
            marg_prior,
            marg_post,
            rb,
            evidence: None,
            psi_coords: None,
            truncation: None,
        })
    }

    pub fn with_coords(mut self, coords: Vec<Vec<f64>>) -> Result<Self> {
        if coords.len() != self.len() {
            return Err(Error::model("psi_coords", "one coordinate vector per psi"));
        }
        self.psi_coords = Some(coords);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.rb.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rb.is_empty()
    }

    pub fn x(&self) -> Option<Observation> {
        self.x
    }

    pub fn marg_prior(&self) -> &[f64] {
        &self.marg_prior
    }

    pub fn marg_post(&self) -> &[f64] {
        &self.marg_post
    }

    pub fn rb(&self) -> &[f64] {
        &self.rb
    }

    pub fn evidence(&self) -> Option<f64> {
        self.evidence
    }

    pub fn psi_coords(&self) -> Option<&[Vec<f64>]> {
        self.psi_coords.as_deref()
    }

    pub fn truncation(&self) -> Option<Truncation> {
        self.truncation
    }

    /// Posterior mass of a set of psi indices.
    pub fn post_mass(&self, members: &[usize]) -> f64 {
        numeric::sum(members.iter().map(|&j| self.marg_post[j]))
    }

    /// Prior mass of a set of psi indices.
    pub fn prior_mass(&self, members: &[usize]) -> f64 {
        numeric::sum(members.iter().map(|&j| self.marg_prior[j]))
    }

    pub(crate) fn check_index(&self, psi: usize) -> Result<()> {
        if psi < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownPsi {
                index: psi,
                size: self.len(),
            })
        }
    }
}

pub fn marginalize(posterior: &Posterior, model: &FiniteModel) -> Result<BeliefTables> {
    if posterior.probs.len() != model.n_theta() {
        return Err(Error::model(
            "posterior",
            format!("{} entries for {} parameter points", posterior.probs.len(), model.n_theta()),
        ));
    }
    let mut acc = vec![KahanSum::new(); model.n_psi()];
    for (i, &j) in model.psi_map.iter().enumerate() {
        acc[j].add(posterior.probs[i]);
    }
    let raw: Vec<f64> = acc.iter().map(KahanSum::value).collect();
    let (marg_post, _) = numeric::normalize(&raw)?;
    let marg_prior = model.marg_prior.clone();
    let rb = marg_post.iter().zip(&marg_prior).map(|(q, p)| q / p).collect();
    Ok(BeliefTables {
        x: Some(posterior.x),
        marg_prior,
        marg_post,
        rb,
        evidence: Some(posterior.evidence),
        psi_coords: model.psi_coords(),
        truncation: model.truncation,
    })
}

/// Distribution of a future observable `y` given the parameter (and possibly the data).
#[derive(Debug, Clone, PartialEq)]
pub enum FutureKernel {
    /// `g[theta][y]`, independent of the observed data.
    Static(Vec<Vec<f64>>),
    /// `g[theta][x][y]`, dependent on the observed data index.
    DataDependent(Vec<Vec<Vec<f64>>>),
}

impl FutureKernel {
    fn validate(&self, model: &FiniteModel) -> Result<usize> {
        match self {
            FutureKernel::Static(g) => {
                if g.len() != model.n_theta() {
                    return Err(Error::model("future_kernel", "one row per parameter point"));
                }
                check_rows(g)?;
                Ok(g[0].len())
            }
            FutureKernel::DataDependent(g) => {
                if g.len() != model.n_theta() {
                    return Err(Error::model("future_kernel", "one block per parameter point"));
                }
                let nx = model.sample_size().ok_or(Error::InfiniteSampleSpace)?;
                for block in g {
                    if block.len() != nx {
                        return Err(Error::model("future_kernel", "one row per data point"));
                    }
                    check_rows(block)?;
                }
                Ok(g[0][0].len())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictiveTables {
    pub prior_pred: Vec<f64>,
    pub post_pred: Vec<f64>,
    pub rb_pred: Vec<f64>,
}

/// Prior predictive `q(y)` of the future observable.
pub fn prior_predictive(model: &FiniteModel, kernel: &FutureKernel) -> Result<Vec<f64>> {
    let ny = kernel.validate(model)?;
    let mut acc = vec![KahanSum::new(); ny];
    match kernel {
        FutureKernel::Static(g) => {
            for (i, row) in g.iter().enumerate() {
                for (y, v) in row.iter().enumerate() {
                    acc[y].add(model.prior[i] * v);
                }
            }
        }
        FutureKernel::DataDependent(g) => {
            let table = model.require_stochastic_likelihood()?;
            for (i, block) in g.iter().enumerate() {
                for (k, row) in block.iter().enumerate() {
                    let w = model.prior[i] * table[i][k];
                    for (y, v) in row.iter().enumerate() {
                        acc[y].add(w * v);
                    }
                }
            }
        }
    }
    let raw: Vec<f64> = acc.iter().map(KahanSum::value).collect();
    Ok(numeric::normalize(&raw)?.0)
}

/// Prior and posterior predictive of the future observable and their ratio.
pub fn posterior_predictive(model: &FiniteModel, posterior: &Posterior, kernel: &FutureKernel) -> Result<PredictiveTables> {
    let prior_pred = prior_predictive(model, kernel)?;
    let ny = prior_pred.len();
    let mut acc = vec![KahanSum::new(); ny];
    match kernel {
        FutureKernel::Static(g) => {
            for (i, row) in g.iter().enumerate() {
                for (y, v) in row.iter().enumerate() {
                    acc[y].add(posterior.probs[i] * v);
                }
            }
        }
        FutureKernel::DataDependent(g) => {
            let Observation::Index(k) = posterior.x else {
                return Err(Error::InfiniteSampleSpace);
            };
            for (i, block) in g.iter().enumerate() {
                for (y, v) in block[k].iter().enumerate() {
                    acc[y].add(posterior.probs[i] * v);
                }
            }
        }
    }
    let raw: Vec<f64> = acc.iter().map(KahanSum::value).collect();
    let (post_pred, _) = numeric::normalize(&raw)?;
    let rb_pred = post_pred
        .iter()
        .zip(&prior_pred)
        .map(|(q, p)| if *p > 0.0 { q / p } else { 0.0 })
        .collect();
    Ok(PredictiveTables {
        prior_pred,
        post_pred,
        rb_pred,
    })
}
