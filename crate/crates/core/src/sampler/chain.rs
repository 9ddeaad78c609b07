use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::conditionals::{lambda_log_acceptance, omega_params, psi_params, update_gamma};
use super::{ChainConfig, SamplerState, UpdateMask, PSI_FLOOR};
use crate::distributions::{sample_gig, sample_mvn_canonical};
use crate::error::{Error, Result};
use crate::inference::{fill_rho, CoefficientDraws, PosteriorDraws};
use crate::model::{n_edges, Dataset};

/// Neighbour sums drift by rounding as they are patched; rebuild them from
/// scratch this often.
const REFRESH_EVERY: usize = 64;

/// Robbins–Monro decay exponent for the step-size adaptation.
const ADAPT_DECAY: f64 = 0.6;

/// One line of the per-iteration diagnostics log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub lambda: Vec<f64>,
    pub gamma_sq: f64,
    /// Running `lambda_s` acceptance rates since the start of the chain.
    pub acceptance: Vec<f64>,
    pub sigma_lambda: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub draws: PosteriorDraws,
    pub coefficients: Option<CoefficientDraws>,
    pub state: SamplerState,
    pub log: Vec<IterationRecord>,
    /// `lambda_s` acceptance rates over post-burn-in iterations.
    pub post_burn_in_acceptance: Vec<f64>,
}

/// A failed chain: the error plus the last consistent state, if any.
#[derive(Debug, Clone)]
pub struct ChainAbort {
    pub error: Error,
    pub state: Option<Box<SamplerState>>,
}

impl std::fmt::Display for ChainAbort {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.state {
            Some(s) => write!(f, "chain aborted at iteration {}: {}", s.iteration, self.error),
            None => write!(f, "chain not started: {}", self.error),
        }
    }
}

impl std::error::Error for ChainAbort {}

/// Sweep engine over one dataset. Keeps `y` column-major, `x` row-major and
/// the cached neighbour sums `W[i][n] = sum_{k != i} omega_ik(x_n) y_n^k`.
pub struct Sampler<'a> {
    data: &'a Dataset,
    n: usize,
    p: usize,
    q: usize,
    y: Vec<f64>,
    x: Vec<f64>,
    xx: Vec<f64>,
    sum_sq_y: Vec<f64>,
    w: Vec<f64>,
    state: SamplerState,
    mask: UpdateMask,
    rng: ChaCha8Rng,
    precision: Vec<f64>,
    linear: Vec<f64>,
    chol: Vec<f64>,
    draw: Vec<f64>,
    delta: Vec<f64>,
}

impl<'a> Sampler<'a> {
    pub fn new(data: &'a Dataset, state: SamplerState, seed: u64, mask: UpdateMask) -> Result<Self> {
        let (n, p, q) = (data.n(), data.p(), data.q());
        if state.p() != p || state.q() != q {
            return Err(Error::dim(format!(
                "state is p={}, q={} but data is p={p}, q={q}",
                state.p(),
                state.q()
            )));
        }
        state.check_invariants()?;
        let ym = data.y();
        let xm = data.x();
        let y: Vec<f64> = (0..p).flat_map(|i| (0..n).map(move |r| ym[(r, i)])).collect();
        let x: Vec<f64> = (0..n).flat_map(|r| (0..q).map(move |s| xm[(r, s)])).collect();
        let mut xx = vec![0.0; n * q * q];
        for r in 0..n {
            for a in 0..q {
                for b in 0..q {
                    xx[r * q * q + a * q + b] = x[r * q + a] * x[r * q + b];
                }
            }
        }
        let sum_sq_y = (0..p).map(|i| y[i * n..(i + 1) * n].iter().map(|v| v * v).sum()).collect();
        let mut sampler = Sampler {
            data,
            n,
            p,
            q,
            y,
            x,
            xx,
            sum_sq_y,
            w: vec![0.0; p * n],
            state,
            mask,
            rng: ChaCha8Rng::seed_from_u64(seed),
            precision: vec![0.0; q * q],
            linear: vec![0.0; q],
            chol: vec![0.0; q * q],
            draw: vec![0.0; q],
            delta: vec![0.0; n],
        };
        sampler.refresh_neighbour_sums();
        Ok(sampler)
    }

    pub fn state(&self) -> &SamplerState {
        &self.state
    }

    pub fn into_state(self) -> SamplerState {
        self.state
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    fn refresh_neighbour_sums(&mut self) {
        let (n, p, q) = (self.n, self.p, self.q);
        self.w.iter_mut().for_each(|v| *v = 0.0);
        let mut k = 0;
        for i in 0..p {
            for j in (i + 1)..p {
                let beta = self.state.coeffs.edge(k);
                for r in 0..n {
                    let xr = &self.x[r * q..(r + 1) * q];
                    let om: f64 = beta.iter().zip(xr).map(|(b, x)| b * x).sum();
                    self.w[i * n + r] += om * self.y[j * n + r];
                    self.w[j * n + r] += om * self.y[i * n + r];
                }
                k += 1;
            }
        }
    }

    fn update_edge(&mut self, k: usize, i: usize, j: usize) -> Result<()> {
        let (n, q) = (self.n, self.q);
        let wi = self.state.diag.values()[i];
        let wj = self.state.diag.values()[j];
        self.precision.iter_mut().for_each(|v| *v = 0.0);
        self.linear.iter_mut().for_each(|v| *v = 0.0);
        let beta_old = self.state.coeffs.edge(k);
        for r in 0..n {
            let xr = &self.x[r * q..(r + 1) * q];
            let om: f64 = beta_old.iter().zip(xr).map(|(b, x)| b * x).sum();
            let yi = self.y[i * n + r];
            let yj = self.y[j * n + r];
            let ai = self.w[i * n + r] - om * yj;
            let aj = self.w[j * n + r] - om * yi;
            let s1 = yj * yj / wi + yi * yi / wj;
            let s2 = 2.0 * yi * yj + ai * yj / wi + aj * yi / wj;
            let xxr = &self.xx[r * q * q..(r + 1) * q * q];
            for (acc, v) in self.precision.iter_mut().zip(xxr) {
                *acc += s1 * v;
            }
            for (acc, v) in self.linear.iter_mut().zip(xr) {
                *acc -= s2 * v;
            }
        }
        for (s, psi) in self.state.scales.edge(k).iter().enumerate() {
            self.precision[s * q + s] += 1.0 / psi;
        }
        sample_mvn_canonical(&self.precision, &self.linear, &mut self.chol, &mut self.draw, &mut self.rng)
            .map_err(|e| match e {
                Error::Numerical { message, diagnostics } => Error::Numerical {
                    message,
                    diagnostics: format!("{diagnostics}; edge ({i}, {j})"),
                },
                other => other,
            })?;
        let beta = self.state.coeffs.edge_mut(k);
        for r in 0..n {
            let xr = &self.x[r * q..(r + 1) * q];
            self.delta[r] = (0..q).map(|s| (self.draw[s] - beta[s]) * xr[s]).sum();
        }
        beta.copy_from_slice(&self.draw);
        for r in 0..n {
            let d = self.delta[r];
            self.w[i * n + r] += d * self.y[j * n + r];
            self.w[j * n + r] += d * self.y[i * n + r];
        }
        Ok(())
    }

    /// One full iteration. Returns the `lambda_s` acceptance flags.
    pub fn sweep(&mut self) -> Result<Vec<bool>> {
        let (n, p, q) = (self.n, self.p, self.q);
        if self.state.iteration.is_multiple_of(REFRESH_EVERY) {
            self.refresh_neighbour_sums();
        }
        if self.mask.beta {
            let mut k = 0;
            for i in 0..p {
                for j in (i + 1)..p {
                    self.update_edge(k, i, j)?;
                    k += 1;
                }
            }
        }
        if self.mask.omega {
            for i in 0..p {
                let pred: f64 = self.w[i * n..(i + 1) * n].iter().map(|v| v * v).sum();
                let params = omega_params(n, self.sum_sq_y[i], pred)?;
                self.state.diag.values_mut()[i] = sample_gig(params, &mut self.rng)?;
            }
        }
        if self.mask.psi {
            for k in 0..n_edges(p) {
                for s in 0..q {
                    let params = psi_params(self.state.hyper.lambda[s], self.state.hyper.gamma_sq, self.state.coeffs.edge(k)[s]);
                    let draw = sample_gig(params, &mut self.rng)?;
                    self.state.scales.edge_mut(k)[s] = draw.max(PSI_FLOOR);
                }
            }
        }
        let mut accepted = vec![false; q];
        if self.mask.lambda {
            for (s, acc) in accepted.iter_mut().enumerate() {
                *acc = self.lambda_step(s);
            }
        }
        if self.mask.gamma {
            update_gamma(&mut self.state, &mut self.rng)?;
        }
        self.state.iteration += 1;
        self.state.check_invariants()?;
        Ok(accepted)
    }

    fn lambda_step(&mut self, s: usize) -> bool {
        let z: f64 = self.rng.sample(StandardNormal);
        let u: f64 = self.rng.random();
        let current = self.state.hyper.lambda[s];
        let proposal = current * (self.state.hyper.sigma_lambda[s] * z).exp();
        self.state.mh_proposal_counts[s] += 1;
        if !(proposal > 0.0 && proposal.is_finite()) {
            return false;
        }
        let accept = u.ln() < lambda_log_acceptance(&self.state, s, proposal);
        if accept {
            self.state.hyper.lambda[s] = proposal;
            self.state.mh_accept_counts[s] += 1;
        }
        accept
    }

    /// Writes `rho_ij(x)` at `levels` from the current state.
    pub fn rho_at(&self, levels: &[Vec<f64>], out: &mut [f64]) -> Result<()> {
        fill_rho(
            self.p,
            self.q,
            self.state.coeffs.values(),
            self.state.diag.values(),
            levels,
            out,
        )
    }
}

/// Runs one chain on standardized data.
pub fn run_chain(data: &Dataset, config: &ChainConfig) -> std::result::Result<ChainOutput, ChainAbort> {
    let abort = |error: Error, state: Option<&SamplerState>| ChainAbort {
        error,
        state: state.map(|s| Box::new(s.clone())),
    };
    if !data.is_standardized() {
        return Err(abort(Error::invalid("data must be standardized before fitting"), None));
    }
    config.validate(data.q()).map_err(|e| abort(e, None))?;
    let initial = SamplerState::initial(data.p(), &config.m_s, config.initial_sigma_lambda);
    let mut sampler = Sampler::new(data, initial, config.seed, config.updates).map_err(|e| abort(e, None))?;

    let mut levels = config.target_levels.clone();
    if config.store_subject_level {
        let x = data.x();
        levels.extend((0..data.n()).map(|r| (0..data.q()).map(|s| x[(r, s)]).collect::<Vec<f64>>()));
    }
    let e = n_edges(data.p());
    let mut draws = PosteriorDraws::new(data.p(), levels.clone());
    let mut coefficients = config.store_coefficients.then(|| CoefficientDraws::new(data.p(), data.q()));
    let mut buffer = vec![0.0; levels.len() * e];
    let mut log = Vec::with_capacity(config.total_iterations);
    let q = data.q();
    let mut post_accept = vec![0u64; q];

    for t in 0..config.total_iterations {
        let accepted = match sampler.sweep() {
            Ok(a) => a,
            Err(err) => return Err(abort(err, Some(sampler.state()))),
        };
        let burning = t < config.burn_in;
        if burning && config.adapt_sigma_lambda && config.updates.lambda {
            let rate = ((t + 1) as f64).powf(-ADAPT_DECAY);
            for (s, acc) in accepted.iter().enumerate() {
                let hit = if *acc { 1.0 } else { 0.0 };
                let sigma = &mut sampler.state.hyper.sigma_lambda[s];
                *sigma = (sigma.ln() + (hit - config.target_acceptance) * rate).exp();
            }
        }
        if !burning {
            for (s, acc) in accepted.iter().enumerate() {
                post_accept[s] += *acc as u64;
            }
            if (t - config.burn_in + 1).is_multiple_of(config.thin) {
                if let Err(err) = sampler.rho_at(&levels, &mut buffer) {
                    return Err(abort(err, Some(sampler.state())));
                }
                draws.push(t + 1, &buffer);
                if let Some(c) = coefficients.as_mut() {
                    c.push(t + 1, &sampler.state.coeffs, &sampler.state.diag);
                }
            }
        }
        let st = sampler.state();
        log.push(IterationRecord {
            iteration: t + 1,
            lambda: st.hyper.lambda.clone(),
            gamma_sq: st.hyper.gamma_sq,
            acceptance: st
                .mh_accept_counts
                .iter()
                .zip(&st.mh_proposal_counts)
                .map(|(a, p)| if *p == 0 { 0.0 } else { *a as f64 / *p as f64 })
                .collect(),
            sigma_lambda: st.hyper.sigma_lambda.clone(),
        });
    }
    let kept_iters = (config.total_iterations - config.burn_in) as f64;
    Ok(ChainOutput {
        draws,
        coefficients,
        post_burn_in_acceptance: post_accept.iter().map(|a| *a as f64 / kept_iters).collect(),
        state: sampler.into_state(),
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EdgeCoefficients, EdgeId};
    use crate::sampler::{compute_s1_s2, update_omega_diag};
    use nalgebra::DMatrix;

    fn random_data(n: usize, p: usize, q: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = DMatrix::from_fn(n, q, |_, _| rng.random::<f64>());
        Dataset::unnamed(y, x).unwrap().standardize().unwrap()
    }

    #[test]
    fn cached_weights_match_direct_s1_s2() {
        let data = random_data(7, 5, 2, 1);
        let mut state = SamplerState::initial(5, &[0.3, 0.4], 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let vals: Vec<f64> = (0..20).map(|_| rng.random::<f64>() - 0.5).collect();
        state.coeffs = EdgeCoefficients::from_values(5, 2, vals).unwrap();
        state.diag = crate::model::DiagPrecision::new(vec![1.0, 1.3, 0.7, 2.0, 0.9]).unwrap();
        let mut sampler = Sampler::new(&data, state, 3, UpdateMask::default()).unwrap();
        // Patch the cache through a few edge updates, then compare the
        // weights built from it with the direct formulas.
        for k in 0..4 {
            let e = EdgeId::from_index(5, k);
            sampler.update_edge(k, e.i, e.j).unwrap();
        }
        let mut fresh = sampler.w.clone();
        sampler.refresh_neighbour_sums();
        std::mem::swap(&mut fresh, &mut sampler.w);
        for (a, b) in sampler.w.iter().zip(&fresh) {
            assert!((a - b).abs() < 1e-12);
        }
        let e = EdgeId { i: 1, j: 3 };
        let (s1, s2) = compute_s1_s2(sampler.state(), &data, e).unwrap();
        let k = e.index(5);
        let beta = sampler.state.coeffs.edge(k).to_vec();
        let (wi, wj) = (sampler.state.diag.values()[1], sampler.state.diag.values()[3]);
        for r in 0..7 {
            let om: f64 = (0..2).map(|s| beta[s] * sampler.x[r * 2 + s]).sum();
            let yi = sampler.y[7 + r];
            let yj = sampler.y[3 * 7 + r];
            let ai = sampler.w[7 + r] - om * yj;
            let aj = sampler.w[3 * 7 + r] - om * yi;
            assert!((s1[r] - (yj * yj / wi + yi * yi / wj)).abs() < 1e-12);
            assert!((s2[r] - (2.0 * yi * yj + ai * yj / wi + aj * yi / wj)).abs() < 1e-12);
        }
        // Omega conditional from the cache equals the direct one.
        let pred: f64 = sampler.w[2 * 7..3 * 7].iter().map(|v| v * v).sum();
        let mut st = sampler.state().clone();
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        update_omega_diag(&mut st, &data, 2, &mut r1).unwrap();
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        let direct = sample_gig(omega_params(7, sampler.sum_sq_y[2], pred).unwrap(), &mut r2).unwrap();
        assert!((st.diag.values()[2] - direct).abs() < 1e-9 * direct.max(1.0));
    }

    #[test]
    fn run_chain_shapes_and_determinism() {
        let data = random_data(30, 4, 2, 4);
        let config = ChainConfig {
            total_iterations: 200,
            burn_in: 100,
            thin: 10,
            seed: 17,
            target_levels: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            m_s: vec![0.1, 0.1],
            ..ChainConfig::default()
        };
        let a = run_chain(&data, &config).unwrap();
        let b = run_chain(&data, &config).unwrap();
        assert_eq!(a.draws, b.draws);
        assert_eq!(a.draws.n_draws(), 10);
        assert_eq!(a.draws.raw().len(), 10 * 2 * 6);
        assert_eq!(a.log.len(), 200);
        assert_eq!(a.draws.draw_iterations()[0], 110);
        assert!(a.draws.raw().iter().all(|r| r.is_finite()));
        a.state.check_invariants().unwrap();
        let c = a.coefficients.unwrap();
        assert_eq!(c.n_draws(), 10);
        let rebuilt = c.rho_draws(&config.target_levels).unwrap();
        assert_eq!(rebuilt.raw(), a.draws.raw());
    }

    #[test]
    fn unstandardized_or_invalid_config_aborts_without_state() {
        let y = DMatrix::from_fn(5, 3, |r, c| (r * 3 + c) as f64);
        let data = Dataset::unnamed(y, DMatrix::from_element(5, 1, 1.0)).unwrap();
        let config = ChainConfig {
            target_levels: vec![vec![1.0]],
            m_s: vec![0.1],
            ..ChainConfig::default()
        };
        let err = run_chain(&data, &config).unwrap_err();
        assert!(err.state.is_none());
        let data = data.standardize().unwrap();
        let bad = ChainConfig { burn_in: 30_000, ..config };
        assert!(matches!(run_chain(&data, &bad).unwrap_err().error, Error::InvalidInput(_)));
    }

    #[test]
    fn subject_levels_append_after_targets() {
        let data = random_data(6, 3, 2, 5);
        let config = ChainConfig {
            total_iterations: 20,
            burn_in: 10,
            thin: 5,
            target_levels: vec![vec![0.5, 0.5]],
            store_subject_level: true,
            m_s: vec![0.2, 0.2],
            ..ChainConfig::default()
        };
        let out = run_chain(&data, &config).unwrap();
        assert_eq!(out.draws.levels().len(), 7);
        assert_eq!(out.draws.levels()[3], vec![data.x()[(2, 0)], data.x()[(2, 1)]]);
    }

    #[test]
    fn adaptation_freezes_after_burn_in() {
        let data = random_data(20, 3, 2, 6);
        let config = ChainConfig {
            total_iterations: 300,
            burn_in: 150,
            thin: 10,
            target_levels: vec![vec![1.0, 0.0]],
            m_s: vec![0.2, 0.2],
            ..ChainConfig::default()
        };
        let out = run_chain(&data, &config).unwrap();
        let frozen = &out.log[150].sigma_lambda;
        assert!(out.log[150..].iter().all(|r| &r.sigma_lambda == frozen));
        assert_ne!(&out.log[0].sigma_lambda, frozen);
    }
}
