//! Seeded Monte Carlo estimation of conditional misclassification rates for the
//! Beta-Bernoulli class predictor with Gaussian classes.
//!
//! Every replication draws from its own ChaCha8 stream keyed by
//! `(seed, beta, class, replication)`, so counts are bit-identical for any
//! number of worker threads.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::numeric::KahanSum;
use crate::worked::{gaussian_f_ratio, BetaBernoulliPredictor, Method};

/// Law of the class-1 rate given the class of the new case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsilonLaw {
    /// `Beta(alpha, beta)`, independent of the new case's class.
    #[default]
    Prior,
    /// `Beta(alpha + c, beta + 1 - c)`, the prior updated by the new case's class.
    Conjugate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub n: u64,
    pub reps: u64,
    pub seed: u64,
    #[serde(default)]
    pub law: EpsilonLaw,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::param("alpha", format!("{} must be positive", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::param("beta", format!("{} must be positive", self.beta)));
        }
        if !self.mu.is_finite() {
            return Err(Error::param("mu", "must be finite"));
        }
        if self.reps == 0 {
            return Err(Error::param("reps", "must be at least 1"));
        }
        Ok(())
    }
}

/// Monte Carlo conditional error rates `M_c(method != c)` for one method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McRisk {
    pub method: Method,
    pub errors: [u64; 2],
    pub reps: u64,
    pub m: [f64; 2],
    pub se: [f64; 2],
    pub sum: f64,
    /// Standard error of `sum`.
    pub se_sum: f64,
}

impl McRisk {
    fn from_counts(method: Method, errors: [u64; 2], reps: u64) -> Self {
        let m = errors.map(|e| e as f64 / reps as f64);
        let se = errors.map(|e| binomial_se(e, reps));
        McRisk {
            method,
            errors,
            reps,
            m,
            se,
            sum: m[0] + m[1],
            se_sum: (se[0] * se[0] + se[1] * se[1]).sqrt(),
        }
    }
}

/// Binomial standard error with the proportion shrunk to `(k + 1) / (n + 2)`,
/// which keeps it informative for tiny or degenerate counts.
pub fn binomial_se(k: u64, n: u64) -> f64 {
    let p = (k as f64 + 1.0) / (n as f64 + 2.0);
    (p * (1.0 - p) / n as f64).sqrt()
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for replication `rep` of class `class` in the cell with parameter `beta`.
pub fn replication_rng(seed: u64, beta: f64, class: u8, rep: u64) -> ChaCha8Rng {
    let key = splitmix(splitmix(seed ^ splitmix(beta.to_bits())) ^ u64::from(class));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(rep);
    rng
}

/// Draw the class-1 rate given the class of the new case.
pub fn sample_epsilon<R: Rng + ?Sized>(law: EpsilonLaw, alpha: f64, beta: f64, class: u8, rng: &mut R) -> f64 {
    let (a, b) = match law {
        EpsilonLaw::Prior => (alpha, beta),
        EpsilonLaw::Conjugate => (alpha + f64::from(class), beta + 1.0 - f64::from(class)),
    };
    Beta::new(a, b).expect("validated parameters").sample(rng)
}

/// Predicted class under each method for one simulated data set.
fn decide(cfg: &SimConfig, ones: u64, x: f64) -> [u8; 2] {
    let cbar = if cfg.n == 0 { 0.0 } else { ones as f64 / cfg.n as f64 };
    let p = BetaBernoulliPredictor {
        alpha: cfg.alpha,
        beta: cfg.beta,
        n: cfg.n,
        cbar,
        f_ratio: gaussian_f_ratio(cfg.mu, x),
    };
    [p.predict_class(Method::Map), p.predict_class(Method::Lrse)]
}

const CHUNK: u64 = 4096;

/// Error counts `[map, lrse]` for class `class` over all replications.
fn class_errors(cfg: &SimConfig, class: u8) -> [u64; 2] {
    let chunks = cfg.reps.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut errors = [0u64; 2];
            let end = ((chunk + 1) * CHUNK).min(cfg.reps);
            for rep in chunk * CHUNK..end {
                let mut rng = replication_rng(cfg.seed, cfg.beta, class, rep);
                let eps = sample_epsilon(cfg.law, cfg.alpha, cfg.beta, class, &mut rng);
                let ones = if cfg.n == 0 {
                    0
                } else {
                    Binomial::new(cfg.n, eps).expect("probability in [0, 1]").sample(&mut rng)
                };
                let z: f64 = StandardNormal.sample(&mut rng);
                let x = f64::from(class) * cfg.mu + z;
                let d = decide(cfg, ones, x);
                for (e, di) in errors.iter_mut().zip(d) {
                    *e += u64::from(di != class);
                }
            }
            errors
        })
        .reduce(|| [0, 0], |a, b| [a[0] + b[0], a[1] + b[1]])
}

/// Monte Carlo conditional risks for MAP and LRSE, in that order.
pub fn conditional_risk_mc(cfg: &SimConfig) -> Result<[McRisk; 2]> {
    cfg.validate()?;
    let c0 = class_errors(cfg, 0);
    let c1 = class_errors(cfg, 1);
    Ok([
        McRisk::from_counts(Method::Map, [c0[0], c1[0]], cfg.reps),
        McRisk::from_counts(Method::Lrse, [c0[1], c1[1]], cfg.reps),
    ])
}

fn beta_binomial_pmf(k: u64, n: u64, a: f64, b: f64) -> f64 {
    let (k, n) = (k as f64, n as f64);
    let ln_choose = ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0);
    let ln_beta = |p: f64, q: f64| ln_gamma(p) + ln_gamma(q) - ln_gamma(p + q);
    (ln_choose + ln_beta(k + a, n - k + b) - ln_beta(a, b)).exp()
}

/// Exact conditional error rates `[M_0, M_1]` for `method`, by summing over the
/// number of class-1 labels and integrating the Gaussian tail in closed form.
pub fn conditional_risk_exact(cfg: &SimConfig, method: Method) -> Result<[f64; 2]> {
    cfg.validate()?;
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    let mut out = [0.0; 2];
    for class in 0..2u8 {
        let (a, b) = match cfg.law {
            EpsilonLaw::Prior => (cfg.alpha, cfg.beta),
            EpsilonLaw::Conjugate => (cfg.alpha + f64::from(class), cfg.beta + 1.0 - f64::from(class)),
        };
        let mut acc = KahanSum::new();
        for k in 0..=cfg.n {
            let cbar = if cfg.n == 0 { 0.0 } else { k as f64 / cfg.n as f64 };
            let log_odds = BetaBernoulliPredictor::odds_factor(cfg.alpha, cfg.beta, cfg.n, cbar, method).ln();
            // predicted 1 iff mu x - mu^2 / 2 + log_odds >= 0, with x ~ N(class mu, 1)
            let mean = f64::from(class) * cfg.mu;
            let p_one = if cfg.mu > 0.0 {
                let t = 0.5 * cfg.mu - log_odds / cfg.mu;
                1.0 - std.cdf(t - mean)
            } else if cfg.mu < 0.0 {
                let t = 0.5 * cfg.mu - log_odds / cfg.mu;
                std.cdf(t - mean)
            } else if log_odds >= 0.0 {
                1.0
            } else {
                0.0
            };
            let err = if class == 0 { p_one } else { 1.0 - p_one };
            acc.add(beta_binomial_pmf(k, cfg.n, a, b) * err);
        }
        out[class as usize] = acc.value();
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MisclassRow {
    pub beta: f64,
    pub method: Method,
    pub m0: f64,
    pub m1: f64,
    pub sum: f64,
    pub se: f64,
}

/// Simulate every `beta` in `betas` with the remaining parameters from `base`.
pub fn misclassification_table(base: &SimConfig, betas: &[f64]) -> Result<Vec<MisclassRow>> {
    let mut rows = Vec::with_capacity(2 * betas.len());
    for &beta in betas {
        let cfg = SimConfig { beta, ..*base };
        for r in conditional_risk_mc(&cfg)? {
            rows.push(MisclassRow {
                beta,
                method: r.method,
                m0: r.m[0],
                m1: r.m[1],
                sum: r.sum,
                se: r.se_sum,
            });
        }
    }
    Ok(rows)
}

/// Two-column text layout, one line per beta: `M0+M1=sum (se)` for each method.
pub fn format_misclassification_table(rows: &[MisclassRow]) -> String {
    let mut out = format!("{:>8}  {:<28}  {:<28}\n", "beta", "MAP", "LRSE");
    let cell = |r: &MisclassRow| format!("{:.3}+{:.3}={:.3} ({:.3})", r.m0, r.m1, r.sum, r.se);
    let mut betas: Vec<f64> = rows.iter().map(|r| r.beta).collect();
    betas.dedup();
    for beta in betas {
        let find = |m: Method| rows.iter().find(|r| r.beta == beta && r.method == m);
        let show = |m| find(m).map_or_else(|| "-".to_string(), cell);
        let _ = writeln!(out, "{beta:>8}  {:<28}  {:<28}", show(Method::Map), show(Method::Lrse));
    }
    out
}
