//! Structure-recovery metrics against a known graph: TPR/FPR, ROC sweeps
//! over `(kappa, alpha)`, univariate AUCs and the binned bivariate AUC.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{compute_ppi, fdr_select, PosteriorDraws};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Confusion {
    pub tpr: f64,
    pub fpr: f64,
}

/// TPR and FPR of a selection mask against a truth mask over the same
/// edge universe.
pub fn confusion(selected: &[bool], truth: &[bool]) -> Result<Confusion> {
    if selected.len() != truth.len() {
        return Err(Error::dim("selection and truth masks differ in length"));
    }
    let positives = truth.iter().filter(|t| **t).count();
    let negatives = truth.len() - positives;
    if positives == 0 {
        return Err(Error::Undefined("TPR is undefined without true edges".into()));
    }
    if negatives == 0 {
        return Err(Error::Undefined("FPR is undefined without true non-edges".into()));
    }
    let tp = selected.iter().zip(truth).filter(|(s, t)| **s && **t).count();
    let fp = selected.iter().zip(truth).filter(|(s, t)| **s && !**t).count();
    Ok(Confusion {
        tpr: tp as f64 / positives as f64,
        fpr: fp as f64 / negatives as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub kappa: f64,
    pub alpha: f64,
}

/// `0, 0.02, ..., 0.3`.
pub fn default_kappa_grid() -> Vec<f64> {
    (0..=15).map(|k| k as f64 * 0.02).collect()
}

/// `0.01, 0.02, ..., 0.99`.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..=99).map(|k| k as f64 / 100.0).collect()
}

/// One ROC point per `(kappa, alpha)` cell at a recorded level; points are
/// ordered kappa-major.
pub fn roc_sweep(
    draws: &PosteriorDraws,
    level: usize,
    truth: &[bool],
    kappas: &[f64],
    alphas: &[f64],
) -> Result<Vec<RocPoint>> {
    if kappas.is_empty() || alphas.is_empty() {
        return Err(Error::invalid("empty kappa or alpha grid"));
    }
    if truth.len() != draws.n_edges() {
        return Err(Error::dim("truth mask length differs from the number of edges"));
    }
    let mut out = Vec::with_capacity(kappas.len() * alphas.len());
    let mut mask = vec![false; truth.len()];
    for &kappa in kappas {
        let ppi = compute_ppi(draws, level, kappa)?;
        for &alpha in alphas {
            let sel = fdr_select(&ppi, alpha)?;
            mask.iter_mut().for_each(|m| *m = false);
            sel.selected.iter().for_each(|&k| mask[k] = true);
            let c = confusion(&mask, truth)?;
            out.push(RocPoint {
                fpr: c.fpr,
                tpr: c.tpr,
                kappa,
                alpha,
            });
        }
    }
    Ok(out)
}

fn dedupe(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut v = points.to_vec();
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    v.dedup_by(|a, b| a.0.to_bits() == b.0.to_bits() && a.1.to_bits() == b.1.to_bits());
    v
}

fn trapezoid(curve: &[(f64, f64)]) -> f64 {
    curve.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum()
}

/// Bin `b` with `b / n <= f < (b + 1) / n`, edges evaluated in `f64` so
/// that e.g. `0.29` lands in bin 29 of 100; `f = 1` goes to the last bin.
fn fpr_bin(f: f64, n_bins: usize) -> usize {
    let n = n_bins as f64;
    let mut b = ((f * n).floor() as usize).min(n_bins - 1);
    while b + 1 < n_bins && (b + 1) as f64 / n <= f {
        b += 1;
    }
    while b > 0 && b as f64 / n > f {
        b -= 1;
    }
    b
}

/// Binned bivariate AUC: distinct `(fpr, tpr)` points are grouped into
/// `n_bins` equal-width FPR bins; each occupied bin contributes its mean
/// FPR and mean TPR, and the resulting curve, anchored at `(0, 0)` and
/// `(1, 1)`, is integrated by the trapezoid rule. Empty bins are skipped.
pub fn bauc(points: &[(f64, f64)], n_bins: usize) -> Result<f64> {
    if points.is_empty() || n_bins == 0 {
        return Err(Error::invalid("bAUC needs at least one point and one bin"));
    }
    if points.iter().any(|(f, t)| !(0.0..=1.0).contains(f) || !(0.0..=1.0).contains(t)) {
        return Err(Error::domain("ROC coordinates must lie in [0, 1]"));
    }
    let mut sums = vec![(0.0, 0.0, 0usize); n_bins];
    for (f, t) in dedupe(points) {
        let b = fpr_bin(f, n_bins);
        sums[b].0 += f;
        sums[b].1 += t;
        sums[b].2 += 1;
    }
    let mut curve = vec![(0.0, 0.0)];
    curve.extend(
        sums.iter()
            .filter(|s| s.2 > 0)
            .map(|&(f, t, c)| (f / c as f64, t / c as f64)),
    );
    curve.push((1.0, 1.0));
    Ok(trapezoid(&curve))
}

/// AUC of the upper staircase through the points (running maximum of TPR
/// in FPR order), anchored at `(0, 0)` and `(1, 1)`.
pub fn auc_univariate(points: &[(f64, f64)]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::invalid("AUC needs at least one point"));
    }
    let mut curve = vec![(0.0, 0.0)];
    let mut best: f64 = 0.0;
    for (f, t) in dedupe(points) {
        best = best.max(t);
        curve.push((f, best));
    }
    curve.push((1.0, 1.0));
    Ok(trapezoid(&curve))
}

/// `(AUC1, AUC2)`: the best AUC over kappa of curves traced by alpha, and
/// the best AUC over alpha of curves traced by kappa.
pub fn auc_pair(points: &[RocPoint]) -> Result<(f64, f64)> {
    let curves = |key: fn(&RocPoint) -> f64| -> Result<f64> {
        let mut keys: Vec<f64> = points.iter().map(key).collect();
        keys.sort_by(|a, b| a.total_cmp(b));
        keys.dedup();
        let mut best = f64::NEG_INFINITY;
        for k in keys {
            let pts: Vec<(f64, f64)> = points.iter().filter(|p| key(p) == k).map(|p| (p.fpr, p.tpr)).collect();
            best = best.max(auc_univariate(&pts)?);
        }
        Ok(best)
    };
    if points.is_empty() {
        return Err(Error::invalid("no ROC points"));
    }
    Ok((curves(|p| p.kappa)?, curves(|p| p.alpha)?))
}

/// The point whose FPR is closest to `target`; ties go to the higher TPR.
pub fn matched_fpr_point(points: &[RocPoint], target: f64) -> Result<RocPoint> {
    points
        .iter()
        .copied()
        .min_by(|a, b| {
            (a.fpr - target)
                .abs()
                .total_cmp(&(b.fpr - target).abs())
                .then(b.tpr.total_cmp(&a.tpr))
        })
        .ok_or_else(|| Error::invalid("no ROC points"))
}

/// Metrics for one graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphMetrics {
    /// At the operating point.
    pub tpr: f64,
    pub fpr: f64,
    pub auc1: f64,
    pub auc2: f64,
    pub bauc: f64,
    /// Point with FPR closest to the matching target.
    pub matched_tpr: f64,
    pub matched_fpr: f64,
}

impl GraphMetrics {
    /// Plain average of two graphs' metrics.
    pub fn average(a: &GraphMetrics, b: &GraphMetrics) -> GraphMetrics {
        let m = |x: f64, y: f64| (x + y) / 2.0;
        GraphMetrics {
            tpr: m(a.tpr, b.tpr),
            fpr: m(a.fpr, b.fpr),
            auc1: m(a.auc1, b.auc1),
            auc2: m(a.auc2, b.auc2),
            bauc: m(a.bauc, b.bauc),
            matched_tpr: m(a.matched_tpr, b.matched_tpr),
            matched_fpr: m(a.matched_fpr, b.matched_fpr),
        }
    }
}

/// Evaluation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub kappas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub operating_kappa: f64,
    pub operating_alpha: f64,
    pub matched_fpr: f64,
    pub n_bins: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            kappas: default_kappa_grid(),
            alphas: default_alpha_grid(),
            operating_kappa: 0.1,
            operating_alpha: 0.1,
            matched_fpr: 0.1,
            n_bins: 100,
        }
    }
}

/// Full evaluation of one graph at one recorded level.
pub fn evaluate_graph(
    draws: &PosteriorDraws,
    level: usize,
    truth: &[bool],
    settings: &EvalSettings,
) -> Result<(GraphMetrics, Vec<RocPoint>)> {
    let roc = roc_sweep(draws, level, truth, &settings.kappas, &settings.alphas)?;
    let xy: Vec<(f64, f64)> = roc.iter().map(|p| (p.fpr, p.tpr)).collect();
    let (auc1, auc2) = auc_pair(&roc)?;
    let ppi = compute_ppi(draws, level, settings.operating_kappa)?;
    let sel = fdr_select(&ppi, settings.operating_alpha)?;
    let mut mask = vec![false; truth.len()];
    sel.selected.iter().for_each(|&k| mask[k] = true);
    let op = confusion(&mask, truth)?;
    let matched = matched_fpr_point(&roc, settings.matched_fpr)?;
    Ok((
        GraphMetrics {
            tpr: op.tpr,
            fpr: op.fpr,
            auc1,
            auc2,
            bauc: bauc(&xy, settings.n_bins)?,
            matched_tpr: matched.tpr,
            matched_fpr: matched.fpr,
        },
        roc,
    ))
}

/// Normal-graph, tumor-graph and overall metrics for one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub normal: GraphMetrics,
    pub tumor: GraphMetrics,
    pub overall: GraphMetrics,
    pub normal_roc: Vec<RocPoint>,
    pub tumor_roc: Vec<RocPoint>,
}

/// Evaluates the normal graph at `normal_level` and the tumor graph at
/// `tumor_level`.
pub fn evaluate(
    draws: &PosteriorDraws,
    normal_level: usize,
    tumor_level: usize,
    normal_truth: &[bool],
    tumor_truth: &[bool],
    settings: &EvalSettings,
) -> Result<EvalReport> {
    let (normal, normal_roc) = evaluate_graph(draws, normal_level, normal_truth, settings)?;
    let (tumor, tumor_roc) = evaluate_graph(draws, tumor_level, tumor_truth, settings)?;
    Ok(EvalReport {
        overall: GraphMetrics::average(&normal, &tumor),
        normal,
        tumor,
        normal_roc,
        tumor_roc,
    })
}
