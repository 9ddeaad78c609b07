//! Full-conditional updates, written against the plain state so each one
//! can be exercised on its own. The chain engine reuses the kernels below
//! with cached neighbour sums.

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;

use super::{SamplerState, PSI_B_GUARD, PSI_FLOOR};
use crate::distributions::{cholesky_with_jitter, sample_gamma, sample_gig, sample_mvn_canonical, GigParams};
use crate::error::{Error, Result};
use crate::model::{n_edges, Dataset, EdgeId};

fn check_dims(state: &SamplerState, data: &Dataset) -> Result<()> {
    if state.p() != data.p() || state.q() != data.q() {
        return Err(Error::dim(format!(
            "state is p={}, q={} but data is p={}, q={}",
            state.p(),
            state.q(),
            data.p(),
            data.q()
        )));
    }
    Ok(())
}

/// `sum_{k != i, k != skip} omega_ik(x_n) y_n^k` for one sample.
fn neighbour_sum(state: &SamplerState, data: &Dataset, n: usize, i: usize, skip: Option<usize>) -> f64 {
    let p = data.p();
    let q = data.q();
    let x = data.x();
    let y = data.y();
    let mut acc = 0.0;
    for k in 0..p {
        if k == i || Some(k) == skip {
            continue;
        }
        let beta = state.coeffs.get(EdgeId::new(i, k).expect("distinct nodes"));
        let w: f64 = (0..q).map(|s| beta[s] * x[(n, s)]).sum();
        acc += w * y[(n, k)];
    }
    acc
}

/// Per-sample weights of the Gaussian conditional of `beta^ij`:
/// `s1[n] = y_j^2 / omega_ii + y_i^2 / omega_jj` and
/// `s2[n] = 2 y_i y_j + A_i y_j / omega_ii + A_j y_i / omega_jj`, where
/// `A_i` is node `i`'s neighbour sum excluding `j`.
pub fn compute_s1_s2(state: &SamplerState, data: &Dataset, edge: EdgeId) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dims(state, data)?;
    let (i, j) = (edge.i, edge.j);
    if j >= data.p() {
        return Err(Error::dim(format!("edge ({i}, {j}) outside p={}", data.p())));
    }
    let wi = state.diag.values()[i];
    let wj = state.diag.values()[j];
    let y = data.y();
    let mut s1 = Vec::with_capacity(data.n());
    let mut s2 = Vec::with_capacity(data.n());
    for n in 0..data.n() {
        let (yi, yj) = (y[(n, i)], y[(n, j)]);
        s1.push(yj * yj / wi + yi * yi / wj);
        let ai = neighbour_sum(state, data, n, i, Some(j));
        let aj = neighbour_sum(state, data, n, j, Some(i));
        s2.push(2.0 * yi * yj + ai * yj / wi + aj * yi / wj);
    }
    Ok((s1, s2))
}

/// Canonical-form Gaussian conditional of one edge's coefficients:
/// precision `X^T S1 X + diag(1/psi)` and linear term `-X^T S2`.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaConditional {
    pub q: usize,
    /// Row-major `q x q`.
    pub precision: Vec<f64>,
    pub linear: Vec<f64>,
}

impl BetaConditional {
    /// Conditional covariance `(X^T S1 X + psi^-1)^-1`, row-major.
    pub fn covariance(&self) -> Result<Vec<f64>> {
        invert_spd(&self.precision, self.q)
    }

    /// Conditional mean `-(X^T S1 X + psi^-1)^-1 X^T S2`.
    pub fn mean(&self) -> Result<Vec<f64>> {
        let cov = self.covariance()?;
        let q = self.q;
        Ok((0..q)
            .map(|r| (0..q).map(|c| cov[r * q + c] * self.linear[c]).sum())
            .collect())
    }
}

fn invert_spd(a: &[f64], k: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; k * k];
    cholesky_with_jitter(a, k, &mut l)?;
    let mut inv = vec![0.0; k * k];
    for col in 0..k {
        // Solve L L^T x = e_col.
        let mut z = vec![0.0; k];
        for i in 0..k {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for j in 0..i {
                s -= l[i * k + j] * z[j];
            }
            z[i] = s / l[i * k + i];
        }
        for i in (0..k).rev() {
            let mut s = z[i];
            for j in (i + 1)..k {
                s -= l[j * k + i] * inv[j * k + col];
            }
            inv[i * k + col] = s / l[i * k + i];
        }
    }
    Ok(inv)
}

/// Assembles the conditional of `beta^ij` from row-major covariates
/// (`N x q`), the weights `s1`, `s2` and the edge's local scales.
pub fn beta_conditional(x_rows: &[f64], q: usize, s1: &[f64], s2: &[f64], psi: &[f64]) -> Result<BetaConditional> {
    let n = s1.len();
    if x_rows.len() != n * q || s2.len() != n || psi.len() != q {
        return Err(Error::dim("beta conditional inputs disagree in size"));
    }
    let mut precision = vec![0.0; q * q];
    let mut linear = vec![0.0; q];
    for r in 0..n {
        let xr = &x_rows[r * q..(r + 1) * q];
        for a in 0..q {
            linear[a] -= xr[a] * s2[r];
            for b in 0..q {
                precision[a * q + b] += s1[r] * xr[a] * xr[b];
            }
        }
    }
    for (s, ps) in psi.iter().enumerate() {
        precision[s * q + s] += 1.0 / ps;
    }
    Ok(BetaConditional { q, precision, linear })
}

pub(crate) fn x_row_major(data: &Dataset) -> Vec<f64> {
    let (n, q) = (data.n(), data.q());
    let x = data.x();
    let mut out = Vec::with_capacity(n * q);
    for r in 0..n {
        for c in 0..q {
            out.push(x[(r, c)]);
        }
    }
    out
}

/// Gibbs draw of `beta^ij` from its multivariate normal conditional.
pub fn update_beta_edge<R: Rng + ?Sized>(
    state: &mut SamplerState,
    data: &Dataset,
    edge: EdgeId,
    rng: &mut R,
) -> Result<()> {
    let (s1, s2) = compute_s1_s2(state, data, edge)?;
    let q = data.q();
    let k = edge.index(data.p());
    let cond = beta_conditional(&x_row_major(data), q, &s1, &s2, state.scales.edge(k))?;
    let mut scratch = vec![0.0; q * q];
    let mut out = vec![0.0; q];
    sample_mvn_canonical(&cond.precision, &cond.linear, &mut scratch, &mut out, rng)?;
    state.coeffs.edge_mut(k).copy_from_slice(&out);
    Ok(())
}

/// GIG parameters of the `omega_ii` conditional given the sum of squares
/// of node `i` and of its neighbour predictions.
pub(crate) fn omega_params(n: usize, sum_sq_y: f64, sum_sq_pred: f64) -> Result<GigParams> {
    GigParams::new(n as f64 / 2.0 + 1.0, sum_sq_y, sum_sq_pred)
        .map_err(|e| Error::domain(format!("omega update is degenerate (identically zero column?): {e}")))
}

/// Gibbs draw of `omega_ii ~ GIG(N/2 + 1, sum y_i^2, sum (x^T beta^i. y^-i)^2)`.
pub fn update_omega_diag<R: Rng + ?Sized>(
    state: &mut SamplerState,
    data: &Dataset,
    node: usize,
    rng: &mut R,
) -> Result<()> {
    check_dims(state, data)?;
    if node >= data.p() {
        return Err(Error::dim(format!("node {node} outside p={}", data.p())));
    }
    let y = data.y();
    let sum_sq_y: f64 = (0..data.n()).map(|n| y[(n, node)].powi(2)).sum();
    let sum_sq_pred: f64 = (0..data.n())
        .map(|n| neighbour_sum(state, data, n, node, None).powi(2))
        .sum();
    let params = omega_params(data.n(), sum_sq_y, sum_sq_pred)?;
    state.diag.values_mut()[node] = sample_gig(params, rng)?;
    Ok(())
}

pub(crate) fn psi_params(lambda: f64, gamma_sq: f64, beta: f64) -> GigParams {
    let m = lambda - 0.5;
    let mut b = beta * beta;
    if b == 0.0 && m <= 0.0 {
        b = PSI_B_GUARD;
    }
    GigParams { m, a: 1.0 / gamma_sq, b }
}

/// Gibbs draw of `psi_s^ij ~ GIG(lambda_s - 1/2, 1/gamma^2, (beta_s^ij)^2)`.
pub fn update_psi<R: Rng + ?Sized>(state: &mut SamplerState, edge: EdgeId, s: usize, rng: &mut R) -> Result<()> {
    let k = edge.index(state.p());
    update_psi_at(state, k, s, rng)
}

pub(crate) fn update_psi_at<R: Rng + ?Sized>(state: &mut SamplerState, k: usize, s: usize, rng: &mut R) -> Result<()> {
    let params = psi_params(state.hyper.lambda[s], state.hyper.gamma_sq, state.coeffs.edge(k)[s]);
    let draw = sample_gig(params, rng)?;
    state.scales.edge_mut(k)[s] = draw.max(PSI_FLOOR);
    Ok(())
}

/// Updates every local scale; the draws are conditionally independent.
pub fn update_psi_block<R: Rng + ?Sized>(state: &mut SamplerState, rng: &mut R) -> Result<()> {
    for k in 0..n_edges(state.p()) {
        for s in 0..state.q() {
            update_psi_at(state, k, s, rng)?;
        }
    }
    Ok(())
}

/// Unnormalized log full conditional of `lambda_s` under an Exp(1) prior:
/// `-lambda - E lambda ln(2 gamma^2) - E ln Gamma(lambda) + lambda sum ln psi_s`.
pub fn lambda_log_target(state: &SamplerState, s: usize, lambda: f64) -> f64 {
    let e = n_edges(state.p()) as f64;
    let sum_log_psi: f64 = state.scales.covariate(s).map(f64::ln).sum();
    -lambda - e * lambda * (2.0 * state.hyper.gamma_sq).ln() - e * ln_gamma(lambda) + lambda * sum_log_psi
}

/// Log MH ratio for the multiplicative proposal `lambda* = lambda e^(sigma z)`,
/// including the `lambda*/lambda` Jacobian.
pub fn lambda_log_acceptance(state: &SamplerState, s: usize, proposal: f64) -> f64 {
    let current = state.hyper.lambda[s];
    proposal.ln() - current.ln() + lambda_log_target(state, s, proposal) - lambda_log_target(state, s, current)
}

/// One random-walk MH step for `lambda_s`. Returns whether it was accepted.
pub fn update_lambda_mh<R: Rng + ?Sized>(state: &mut SamplerState, s: usize, rng: &mut R) -> Result<bool> {
    let z: f64 = rng.sample(StandardNormal);
    let proposal = state.hyper.lambda[s] * (state.hyper.sigma_lambda[s] * z).exp();
    let u: f64 = rng.random();
    state.mh_proposal_counts[s] += 1;
    if !(proposal > 0.0) || !proposal.is_finite() {
        return Ok(false);
    }
    let log_ratio = lambda_log_acceptance(state, s, proposal);
    let accept = u.ln() < log_ratio;
    if accept {
        state.hyper.lambda[s] = proposal;
        state.mh_accept_counts[s] += 1;
    }
    Ok(accept)
}

/// Conjugate draw `gamma^-2 ~ Gamma(2 + E sum lambda, sum M / (2 sum lambda) + sum psi / 2)`.
pub fn update_gamma<R: Rng + ?Sized>(state: &mut SamplerState, rng: &mut R) -> Result<()> {
    let e = n_edges(state.p()) as f64;
    let sum_lambda: f64 = state.hyper.lambda.iter().sum();
    let sum_m: f64 = state.hyper.m_s.iter().sum();
    let sum_psi: f64 = state.scales.values().iter().sum();
    let shape = 2.0 + e * sum_lambda;
    let rate = sum_m / (2.0 * sum_lambda) + 0.5 * sum_psi;
    let inv = sample_gamma(shape, rate, rng)?;
    state.hyper.gamma_sq = 1.0 / inv;
    Ok(())
}
