//! Metropolis-within-Gibbs sampler for edge regression under the
//! Normal-Gamma shrinkage prior.
//!
//! One iteration updates, in order: every edge's coefficient block (fixed
//! lexicographic scan), every diagonal precision, the full block of local
//! scales, each shape `lambda_s` by a log-normal random-walk MH step, and
//! finally the global scale through its conjugate `gamma^-2` draw.
//!
//! Per-edge updates cost `O(N q + q^3)` because node-wise neighbour sums
//! are cached and patched after every coefficient draw, so one sweep is
//! `O(p^2 (N q + q^3))`.

mod chain;
mod conditionals;
mod hyper;

pub use chain::{run_chain, ChainAbort, ChainOutput, IterationRecord, Sampler};
pub use conditionals::{
    beta_conditional, compute_s1_s2, lambda_log_acceptance, lambda_log_target, update_beta_edge, update_gamma,
    update_lambda_mh, update_omega_diag, update_psi, update_psi_block, BetaConditional,
};
pub use hyper::{compute_m_s, SampleSelector};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{n_edges, DiagPrecision, EdgeCoefficients, LocalScales, ShrinkageHyper};

/// Guard substituted for `b = beta^2` when `beta == 0` and the GIG order is
/// non-positive.
pub const PSI_B_GUARD: f64 = 1e-24;

/// Lower bound applied to local scales so their reciprocals stay finite.
pub const PSI_FLOOR: f64 = 1e-300;

/// Which blocks a sweep updates. Freezing blocks is useful for checking
/// individual conditionals against analytic targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateMask {
    pub beta: bool,
    pub omega: bool,
    pub psi: bool,
    pub lambda: bool,
    pub gamma: bool,
}

impl Default for UpdateMask {
    fn default() -> Self {
        UpdateMask {
            beta: true,
            omega: true,
            psi: true,
            lambda: true,
            gamma: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub total_iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Covariate vectors at which `rho` draws are recorded.
    pub target_levels: Vec<Vec<f64>>,
    /// Also record `rho` at every subject's own covariates.
    pub store_subject_level: bool,
    /// Robbins–Monro tuning of the `lambda_s` step sizes during burn-in.
    pub adapt_sigma_lambda: bool,
    /// Keep thinned coefficient and diagonal draws.
    pub store_coefficients: bool,
    /// Scale targets `M_s`, one per covariate.
    pub m_s: Vec<f64>,
    pub initial_sigma_lambda: f64,
    pub target_acceptance: f64,
    pub updates: UpdateMask,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            total_iterations: 20_000,
            burn_in: 10_000,
            thin: 10,
            seed: 1,
            target_levels: Vec::new(),
            store_subject_level: false,
            adapt_sigma_lambda: true,
            store_coefficients: true,
            m_s: Vec::new(),
            initial_sigma_lambda: 0.1,
            target_acceptance: 0.25,
            updates: UpdateMask::default(),
        }
    }
}

impl ChainConfig {
    pub fn validate(&self, q: usize) -> Result<()> {
        if self.burn_in >= self.total_iterations {
            return Err(Error::invalid(format!(
                "burn_in ({}) must be below total_iterations ({})",
                self.burn_in, self.total_iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::invalid("thin must be at least 1"));
        }
        if self.target_levels.is_empty() && !self.store_subject_level {
            return Err(Error::invalid("no target covariate levels and subject-level storage off"));
        }
        if let Some(bad) = self.target_levels.iter().find(|x| x.len() != q) {
            return Err(Error::dim(format!("target level {bad:?} has length != q={q}")));
        }
        if self.m_s.len() != q || self.m_s.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
            return Err(Error::invalid(format!("m_s must hold {q} positive values, got {:?}", self.m_s)));
        }
        if !(self.initial_sigma_lambda > 0.0) || !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(Error::invalid("step size and target acceptance must be positive"));
        }
        Ok(())
    }

    /// Number of draws the chain will keep.
    pub fn n_kept(&self) -> usize {
        (self.total_iterations - self.burn_in) / self.thin
    }
}

/// Full mutable state of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerState {
    pub coeffs: EdgeCoefficients,
    pub diag: DiagPrecision,
    pub scales: LocalScales,
    pub hyper: ShrinkageHyper,
    pub iteration: usize,
    /// Accepted `lambda_s` proposals, all iterations.
    pub mh_accept_counts: Vec<u64>,
    pub mh_proposal_counts: Vec<u64>,
}

impl SamplerState {
    /// `beta = 0`, `omega_ii = 1`, `psi = 1`, `lambda_s = 1` and
    /// `gamma^2 = sum M_s / sum lambda_s`.
    pub fn initial(p: usize, m_s: &[f64], sigma_lambda: f64) -> Self {
        let q = m_s.len();
        let lambda = vec![1.0; q];
        let gamma_sq = m_s.iter().sum::<f64>() / lambda.iter().sum::<f64>();
        SamplerState {
            coeffs: EdgeCoefficients::zeros(p, q),
            diag: DiagPrecision::ones(p),
            scales: LocalScales::filled(p, q, 1.0),
            hyper: ShrinkageHyper {
                lambda,
                gamma_sq,
                m_s: m_s.to_vec(),
                sigma_lambda: vec![sigma_lambda; q],
            },
            iteration: 0,
            mh_accept_counts: vec![0; q],
            mh_proposal_counts: vec![0; q],
        }
    }

    pub fn p(&self) -> usize {
        self.coeffs.p()
    }

    pub fn q(&self) -> usize {
        self.coeffs.q()
    }

    /// Checks the per-sweep invariants: positive scales, diagonals and
    /// hyperparameters, finite coefficients.
    pub fn check_invariants(&self) -> Result<()> {
        if self.coeffs.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("non-finite coefficient", format!("iteration {}", self.iteration)));
        }
        if self.scales.values().iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::numerical("non-positive local scale", format!("iteration {}", self.iteration)));
        }
        if self.diag.values().iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::numerical("non-positive diagonal precision", format!("iteration {}", self.iteration)));
        }
        self.hyper.validate()?;
        debug_assert_eq!(self.scales.values().len(), self.q() * n_edges(self.p()));
        Ok(())
    }
}
