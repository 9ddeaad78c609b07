//! Chain-health reports: per-parameter trace summaries with Geweke tests,
//! p-value histograms and effective sample sizes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{geweke_diagnostic, CoefficientDraws};
use crate::model::EdgeId;
use crate::sampler::IterationRecord;
use crate::stats::mean_and_var;

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub parameter: String,
    pub mean: f64,
    pub sd: f64,
    /// `None` when the statistic is undefined (constant trace).
    pub geweke_z: Option<f64>,
    pub geweke_p: Option<f64>,
    pub ess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    /// Sorted by parameter id.
    pub reports: Vec<TraceReport>,
    /// Counts of defined p-values in 20 equal bins on `[0, 1]`.
    pub histogram: Vec<usize>,
}

/// Effective sample size with Geyer's initial positive sequence: pairs of
/// consecutive autocorrelations are summed while the pair sums stay
/// positive.
pub fn effective_sample_size(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 4 {
        return n as f64;
    }
    let (mean, _) = mean_and_var(xs);
    let acov = |h: usize| (0..n - h).map(|t| (xs[t] - mean) * (xs[t + h] - mean)).sum::<f64>() / n as f64;
    let c0 = acov(0);
    if !(c0 > 0.0) {
        return n as f64;
    }
    let mut sum = 0.0;
    let mut m = 0;
    while 2 * m + 1 < n {
        let pair = (acov(2 * m) + acov(2 * m + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        m += 1;
    }
    // tau = -1 + 2 * sum of pair sums
    let tau = (2.0 * sum - 1.0).max(1.0 / n as f64);
    n as f64 / tau
}

/// Geweke reports for every named trace plus the p-value histogram.
pub fn batch_geweke(traces: &[(String, Vec<f64>)]) -> Result<BatchReport> {
    let mut reports = Vec::with_capacity(traces.len());
    for (name, trace) in traces {
        let (mean, var) = mean_and_var(trace);
        let (z, p) = match geweke_diagnostic(trace, 0.1, 0.5) {
            Ok(g) => (Some(g.z), Some(g.p_value)),
            Err(Error::Undefined(_)) => (None, None),
            Err(e) => return Err(Error::invalid(format!("trace '{name}': {e}"))),
        };
        reports.push(TraceReport {
            parameter: name.clone(),
            mean,
            sd: var.sqrt(),
            geweke_z: z,
            geweke_p: p,
            ess: effective_sample_size(trace),
        });
    }
    reports.sort_by(|a, b| a.parameter.cmp(&b.parameter));
    let mut histogram = vec![0; HISTOGRAM_BINS];
    for p in reports.iter().filter_map(|r| r.geweke_p) {
        histogram[((p * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1)] += 1;
    }
    Ok(BatchReport { reports, histogram })
}

/// Hyperparameter traces from the iteration log, optionally dropping the
/// first `skip` iterations.
pub fn hyper_traces(log: &[IterationRecord], skip: usize) -> Vec<(String, Vec<f64>)> {
    let kept = &log[skip.min(log.len())..];
    let q = kept.first().map_or(0, |r| r.lambda.len());
    let mut out: Vec<(String, Vec<f64>)> = (0..q)
        .map(|s| (format!("lambda[{s}]"), kept.iter().map(|r| r.lambda[s]).collect()))
        .collect();
    out.push(("gamma_sq".into(), kept.iter().map(|r| r.gamma_sq).collect()));
    out
}

/// Coefficient and diagonal-precision traces from stored draws.
pub fn coefficient_traces(draws: &CoefficientDraws) -> Vec<(String, Vec<f64>)> {
    let (p, q, l) = (draws.p, draws.q, draws.n_draws());
    let e = p * (p - 1) / 2;
    let mut out = Vec::with_capacity(e * q + p);
    for k in 0..e {
        let edge = EdgeId::from_index(p, k);
        for s in 0..q {
            let trace = (0..l).map(|d| draws.beta_draw(d)[k * q + s]).collect();
            out.push((format!("beta[{},{}][{s}]", edge.i, edge.j), trace));
        }
    }
    for i in 0..p {
        out.push((format!("omega[{i}]"), (0..l).map(|d| draws.omega_draw(d)[i]).collect()));
    }
    out
}

/// Keeps traces whose id starts with one of `prefixes`; all when empty.
pub fn filter_traces(traces: Vec<(String, Vec<f64>)>, prefixes: &[String]) -> Vec<(String, Vec<f64>)> {
    if prefixes.is_empty() {
        return traces;
    }
    traces
        .into_iter()
        .filter(|(name, _)| prefixes.iter().any(|p| name.starts_with(p.as_str())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::chi_square_uniform;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn iid_histogram_flat_and_drift_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut traces: Vec<(String, Vec<f64>)> = (0..500)
            .map(|k| (format!("t{k:03}"), (0..2000).map(|_| rng.sample(StandardNormal)).collect()))
            .collect();
        let report = batch_geweke(&traces).unwrap();
        assert_eq!(report.histogram.iter().sum::<usize>(), 500);
        assert!(chi_square_uniform(&report.histogram) > 0.01, "{:?}", report.histogram);

        traces.push((
            "drift".into(),
            (0..2000).map(|t| rng.sample::<f64, _>(StandardNormal) + 5.0 * t as f64 / 2000.0).collect(),
        ));
        let report = batch_geweke(&traces).unwrap();
        let d = report.reports.iter().find(|r| r.parameter == "drift").unwrap();
        assert!(d.geweke_p.unwrap() < 0.001);
        assert_eq!(report.reports[0].parameter, "drift");
    }

    #[test]
    fn constant_trace_is_null_not_dropped() {
        let report = batch_geweke(&[("c".into(), vec![2.0; 200])]).unwrap();
        assert_eq!(report.reports.len(), 1);
        assert!(report.reports[0].geweke_p.is_none());
        assert_eq!(report.histogram.iter().sum::<usize>(), 0);
        assert!(batch_geweke(&[]).unwrap().reports.is_empty());
    }

    #[test]
    fn ess_for_iid_and_ar1() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let iid: Vec<f64> = (0..20_000).map(|_| rng.sample(StandardNormal)).collect();
        let ess = effective_sample_size(&iid);
        assert!((ess / 20_000.0 - 1.0).abs() < 0.1, "{ess}");
        // AR(1) with 0.8: ESS / n = (1 - 0.8) / (1 + 0.8)
        let mut x = 0.0;
        let ar: Vec<f64> = (0..50_000)
            .map(|_| {
                x = 0.8 * x + rng.sample::<f64, _>(StandardNormal);
                x
            })
            .collect();
        let ratio = effective_sample_size(&ar) / 50_000.0;
        assert!((ratio - 0.2 / 1.8).abs() < 0.02, "{ratio}");
    }

    #[test]
    fn filters_by_prefix() {
        let t = vec![("lambda[0]".to_string(), vec![]), ("gamma_sq".to_string(), vec![])];
        let f = filter_traces(t, &["gamma".into()]);
        assert_eq!(f.len(), 1);
    }
}
