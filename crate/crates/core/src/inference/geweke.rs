use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::two_sided_normal_p;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geweke {
    pub z: f64,
    pub p_value: f64,
}

/// Spectral density at frequency zero from an autoregressive fit: Yule–Walker
/// estimates for every order up to `min(n - 1, 10 log10 n)`, order chosen by
/// AIC, density `sigma^2 / (1 - sum phi)^2`.
pub fn spectrum_at_zero(xs: &[f64]) -> Result<f64> {
    let n = xs.len();
    if n < 4 {
        return Err(Error::invalid("spectral estimate needs at least 4 values"));
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let max_order = ((10.0 * (n as f64).log10()).floor() as usize).min(n - 1);
    let acov: Vec<f64> = (0..=max_order)
        .map(|h| (0..n - h).map(|t| (xs[t] - mean) * (xs[t + h] - mean)).sum::<f64>() / n as f64)
        .collect();
    if !(acov[0] > 0.0) {
        return Err(Error::Undefined("constant series has no spectral density".into()));
    }

    // Levinson–Durbin recursion.
    let nf = n as f64;
    let mut phi: Vec<f64> = Vec::new();
    let mut sigma2 = acov[0];
    let aic = |order: usize, s2: f64| {
        let pred = s2 * nf / (nf - (order as f64 + 1.0));
        nf * pred.ln() + 2.0 * order as f64
    };
    let mut best = (aic(0, sigma2), 0.0, sigma2 * nf / (nf - 1.0));
    for k in 1..=max_order {
        let num = acov[k] - phi.iter().enumerate().map(|(j, p)| p * acov[k - 1 - j]).sum::<f64>();
        let reflection = num / sigma2;
        if !reflection.is_finite() || reflection.abs() >= 1.0 {
            break;
        }
        let prev = phi.clone();
        phi.push(reflection);
        for j in 0..k - 1 {
            phi[j] = prev[j] - reflection * prev[k - 2 - j];
        }
        sigma2 *= 1.0 - reflection * reflection;
        if !(sigma2 > 0.0) {
            break;
        }
        let score = aic(k, sigma2);
        if score < best.0 {
            best = (score, phi.iter().sum(), sigma2 * nf / (nf - (k as f64 + 1.0)));
        }
    }
    let (_, phi_sum, pred_var) = best;
    Ok(pred_var / (1.0 - phi_sum).powi(2))
}

/// Geweke's comparison of the means of the first `first_fraction` and the
/// last `last_fraction` of a trace, each standardized by its spectral
/// variance estimate.
pub fn geweke_diagnostic(trace: &[f64], first_fraction: f64, last_fraction: f64) -> Result<Geweke> {
    let n = trace.len();
    if n < 100 {
        return Err(Error::invalid(format!("trace has {n} values, need at least 100")));
    }
    if !(first_fraction > 0.0 && last_fraction > 0.0 && first_fraction + last_fraction <= 1.0) {
        return Err(Error::invalid("window fractions must be positive and sum to at most 1"));
    }
    let na = (first_fraction * n as f64).floor() as usize;
    let nb = (last_fraction * n as f64).floor() as usize;
    let a = &trace[..na];
    let b = &trace[n - nb..];
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let va = spectrum_at_zero(a)? / na as f64;
    let vb = spectrum_at_zero(b)? / nb as f64;
    let z = (mean(a) - mean(b)) / (va + vb).sqrt();
    if !z.is_finite() {
        return Err(Error::Undefined("Geweke statistic is not finite".into()));
    }
    Ok(Geweke {
        z,
        p_value: two_sided_normal_p(z),
    })
}
