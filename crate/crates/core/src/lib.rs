//! Bayesian edge regression for covariate-dependent Gaussian graphical
//! models.
//!
//! Off-diagonal precision entries are modelled as linear functions of
//! subject covariates, `omega_ij(x) = sum_s beta_s^ij x_s`, and fitted by
//! a Metropolis-within-Gibbs sampler on the node-wise pseudo-likelihood
//! under a Normal-Gamma shrinkage prior. Edges are then selected per
//! covariate level by thresholding posterior inclusion probabilities with
//! a Bayesian false discovery rate rule.

// `!(x > 0.0)` style guards deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod distributions;
pub mod error;
pub mod eval;
pub mod inference;
pub mod model;
pub mod sampler;
pub mod simgen;
pub mod stats;

pub use error::{Error, Result};
pub use eval::{EvalReport, GraphMetrics, RocPoint};
pub use inference::{CoefficientDraws, GraphEstimate, PosteriorDraws};
pub use model::{Dataset, DiagPrecision, EdgeCoefficients, EdgeId, LocalScales, ShrinkageHyper};
pub use sampler::{run_chain, ChainConfig, ChainOutput, SamplerState};
pub use simgen::{GroundTruth, Group};
