//! Relative belief inference on finite and discretized Bayesian models.
//!
//! The crate computes least relative surprise (LRSE) and MAP estimates, Bayes
//! rules under prior-based loss functions, highest posterior density, relative
//! surprise and lowest posterior loss credible regions, and reproduces the
//! associated limit results numerically on finite grids.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod countable;
pub mod discretize;
pub mod error;
pub mod estimate;
pub mod loss;
pub mod model;
pub mod modelfile;
pub mod numeric;
pub mod quadrature;
pub mod region;
pub mod simulate;
pub mod worked;

pub use error::{Error, Result};
pub use estimate::{bayes_rule, lrse, map, predict_lrse, EstimateResult};
pub use loss::{posterior_risk, prior_risk, LossSpec, RiskReport};
pub use model::{BeliefTables, FiniteModel, FutureKernel, Likelihood, Observation, Point, Posterior, PredictiveTables};
pub use region::{hpd_region, lpl_region, rs_region, tail_probability, CredibleRegion};
pub use simulate::{conditional_risk_mc, SimConfig};
pub use worked::{BetaBernoulliPredictor, BinomialClassifier, GaussianRegression, Method};
