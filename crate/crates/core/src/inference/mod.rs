//! Posterior summaries: edge inclusion probabilities, Bayesian FDR
//! selection, graph prediction, positive-definiteness audits and the
//! Geweke diagnostic.

mod draws;
mod geweke;
mod pd;

pub use draws::{CoefficientDraws, PosteriorDraws};
pub(crate) use draws::fill_rho;
pub use geweke::{geweke_diagnostic, spectrum_at_zero, Geweke};
pub use pd::{is_positive_definite, pd_audit, PdAudit};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{n_edges, EdgeId};

/// Fraction of draws with `|rho| > kappa`, per edge.
pub fn compute_ppi(draws: &PosteriorDraws, level: usize, kappa: f64) -> Result<Vec<f64>> {
    check_level(draws, level)?;
    if !(kappa >= 0.0) {
        return Err(Error::domain(format!("kappa must be non-negative, got {kappa}")));
    }
    let l = draws.n_draws();
    let mut counts = vec![0usize; draws.n_edges()];
    for d in 0..l {
        for (c, r) in counts.iter_mut().zip(draws.slice(d, level)) {
            *c += (r.abs() > kappa) as usize;
        }
    }
    Ok(counts.into_iter().map(|c| c as f64 / l as f64).collect())
}

/// Posterior mean of `rho` per edge.
pub fn rho_mean(draws: &PosteriorDraws, level: usize) -> Result<Vec<f64>> {
    check_level(draws, level)?;
    let l = draws.n_draws();
    let mut acc = vec![0.0; draws.n_edges()];
    for d in 0..l {
        for (a, r) in acc.iter_mut().zip(draws.slice(d, level)) {
            *a += r;
        }
    }
    Ok(acc.into_iter().map(|a| a / l as f64).collect())
}

fn check_level(draws: &PosteriorDraws, level: usize) -> Result<()> {
    if draws.n_draws() == 0 {
        return Err(Error::invalid("no posterior draws"));
    }
    if level >= draws.levels().len() {
        return Err(Error::invalid(format!(
            "level {level} not recorded ({} levels)",
            draws.levels().len()
        )));
    }
    Ok(())
}

/// Result of Bayesian FDR thresholding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdrSelection {
    /// Selected edge positions, ascending.
    pub selected: Vec<usize>,
    /// Threshold `phi` on `q = 1 - PPI`.
    pub phi: f64,
}

/// Bayesian FDR selection: sort `q = 1 - PPI` ascending, take the longest
/// prefix whose mean is below `alpha`, set `phi` to its last value and
/// keep edges with `q < phi`. When `phi = 0`, edges with `q = 0` are kept.
pub fn fdr_select(ppi: &[f64], alpha: f64) -> Result<FdrSelection> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if ppi.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::domain("PPI values must lie in [0, 1]"));
    }
    let q: Vec<f64> = ppi.iter().map(|p| 1.0 - p).collect();
    let mut sorted = q.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut cum = 0.0;
    let mut t_star = 0;
    for (t, v) in sorted.iter().enumerate() {
        cum += v;
        if cum / ((t + 1) as f64) < alpha {
            t_star = t + 1;
        }
    }
    if t_star == 0 {
        return Ok(FdrSelection {
            selected: Vec::new(),
            phi: 0.0,
        });
    }
    let phi = sorted[t_star - 1];
    let selected = if phi == 0.0 {
        (0..q.len()).filter(|&k| q[k] == 0.0).collect()
    } else {
        (0..q.len()).filter(|&k| q[k] < phi).collect()
    };
    Ok(FdrSelection { selected, phi })
}

/// Estimated graph at one covariate level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEstimate {
    pub p: usize,
    pub level: Vec<f64>,
    pub selected: Vec<EdgeId>,
    pub ppi: Vec<f64>,
    pub rho_mean: Vec<f64>,
    pub kappa: f64,
    pub alpha: f64,
    /// PPI cutoff: an edge is selected iff its PPI exceeds this value.
    pub fdr_threshold: f64,
    /// Threshold on `1 - PPI` from the FDR rule.
    pub phi: f64,
}

impl GraphEstimate {
    /// Selection mask in edge order.
    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; n_edges(self.p)];
        for e in &self.selected {
            m[e.index(self.p)] = true;
        }
        m
    }

    pub fn is_selected(&self, e: EdgeId) -> bool {
        self.selected.binary_search(&e).is_ok()
    }
}

/// PPI, FDR selection and posterior-mean `rho` at one recorded level.
pub fn predict_graph(draws: &PosteriorDraws, level: usize, kappa: f64, alpha: f64) -> Result<GraphEstimate> {
    let ppi = compute_ppi(draws, level, kappa)?;
    let sel = fdr_select(&ppi, alpha)?;
    let p = draws.p();
    let mut chosen = vec![false; ppi.len()];
    sel.selected.iter().for_each(|&k| chosen[k] = true);
    let fdr_threshold = (0..ppi.len())
        .filter(|&k| !chosen[k])
        .map(|k| ppi[k])
        .fold(0.0, f64::max);
    Ok(GraphEstimate {
        p,
        level: draws.levels()[level].clone(),
        selected: sel.selected.iter().map(|&k| EdgeId::from_index(p, k)).collect(),
        rho_mean: rho_mean(draws, level)?,
        ppi,
        kappa,
        alpha,
        fdr_threshold,
        phi: sel.phi,
    })
}

/// Counts of selected edges within and between node groups (e.g.
/// pathways). Entry `[a][b]`, `a <= b`, counts edges joining groups `a`
/// and `b`; the lower triangle mirrors it.
pub fn pathway_edge_counts(selected: &[EdgeId], group_of: &[usize], n_groups: usize) -> Result<Vec<Vec<usize>>> {
    if let Some(g) = group_of.iter().find(|&&g| g >= n_groups) {
        return Err(Error::invalid(format!("group {g} outside 0..{n_groups}")));
    }
    let mut counts = vec![vec![0; n_groups]; n_groups];
    for e in selected {
        if e.j >= group_of.len() {
            return Err(Error::dim(format!("edge ({}, {}) outside the group map", e.i, e.j)));
        }
        let (a, b) = (group_of[e.i], group_of[e.j]);
        counts[a][b] += 1;
        if a != b {
            counts[b][a] += 1;
        }
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single_edge_draws(values: &[f64]) -> PosteriorDraws {
        PosteriorDraws::from_parts(2, vec![vec![1.0]], values.to_vec(), (0..values.len()).collect()).unwrap()
    }

    /// Every prefix evaluated from scratch, no running sums.
    fn brute_force(ppi: &[f64], alpha: f64) -> (Vec<usize>, f64) {
        let q: Vec<f64> = ppi.iter().map(|p| 1.0 - p).collect();
        let mut order: Vec<usize> = (0..q.len()).collect();
        order.sort_by(|&a, &b| q[a].total_cmp(&q[b]));
        let mut best = None;
        for t in 1..=q.len() {
            let mean = order[..t].iter().map(|&k| q[k]).sum::<f64>() / t as f64;
            if mean < alpha {
                best = Some(t);
            }
        }
        let Some(t) = best else {
            return (Vec::new(), 0.0);
        };
        let phi = q[order[t - 1]];
        let sel = (0..q.len())
            .filter(|&k| if phi == 0.0 { q[k] == 0.0 } else { q[k] < phi })
            .collect();
        (sel, phi)
    }

    #[test]
    fn ppi_examples() {
        assert_eq!(compute_ppi(&single_edge_draws(&[0.5, -0.5]), 0, 0.1).unwrap(), vec![1.0]);
        assert_eq!(compute_ppi(&single_edge_draws(&[0.0; 3]), 0, 1e-9).unwrap(), vec![0.0]);
        assert_eq!(
            compute_ppi(&single_edge_draws(&[0.05, -0.2, 0.15, 0.08]), 0, 0.1).unwrap(),
            vec![0.5]
        );
        let empty = PosteriorDraws::new(2, vec![vec![1.0]]);
        assert!(compute_ppi(&empty, 0, 0.1).is_err());
        assert!(compute_ppi(&single_edge_draws(&[0.1]), 1, 0.1).is_err());
    }

    #[test]
    fn fdr_examples() {
        let s = fdr_select(&[0.99, 0.95, 0.5], 0.1).unwrap();
        assert_eq!(s.selected, vec![0]);
        assert!((s.phi - 0.05).abs() < 1e-12);

        let s = fdr_select(&[1.0; 4], 0.1).unwrap();
        assert_eq!(s.selected, vec![0, 1, 2, 3]);
        assert_eq!(s.phi, 0.0);

        let s = fdr_select(&[0.0; 4], 0.5).unwrap();
        assert!(s.selected.is_empty());
        assert!(fdr_select(&[0.5], 1.0).is_err());
        assert!(fdr_select(&[1.5], 0.1).is_err());
    }

    #[test]
    fn pathway_counts_symmetric() {
        let sel = [EdgeId { i: 0, j: 1 }, EdgeId { i: 0, j: 2 }, EdgeId { i: 2, j: 3 }];
        let c = pathway_edge_counts(&sel, &[0, 0, 1, 1], 2).unwrap();
        assert_eq!(c, vec![vec![1, 1], vec![1, 1]]);
        assert!(pathway_edge_counts(&sel, &[0, 0, 2, 1], 2).is_err());
    }

    fn grid_ppi() -> impl Strategy<Value = Vec<f64>> {
        // Mix of coarse values (ties, zeros, ones) and continuous values.
        prop::collection::vec(
            prop_oneof![
                (0u32..=20).prop_map(|k| k as f64 / 20.0),
                0.0f64..=1.0,
            ],
            1..=50,
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn fdr_matches_brute_force(ppi in grid_ppi(), alpha in 0.01f64..0.99) {
            let s = fdr_select(&ppi, alpha).unwrap();
            let (sel, phi) = brute_force(&ppi, alpha);
            prop_assert_eq!(s.selected, sel);
            prop_assert_eq!(s.phi, phi);
        }

        #[test]
        fn fdr_nested_in_alpha(ppi in grid_ppi(), a in 0.01f64..0.98, b in 0.01f64..0.98) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let s_lo = fdr_select(&ppi, lo).unwrap().selected;
            let s_hi = fdr_select(&ppi, hi).unwrap().selected;
            prop_assert!(s_lo.iter().all(|k| s_hi.contains(k)));
        }

        #[test]
        fn ppi_monotone_in_kappa(
            vals in prop::collection::vec(-1.0f64..1.0, 6..60),
            k1 in 0.0f64..0.5,
            k2 in 0.0f64..0.5,
        ) {
            let n = vals.len() / 3 * 3;
            let draws = PosteriorDraws::from_parts(3, vec![vec![1.0]], vals[..n].to_vec(), (0..n / 3).collect()).unwrap();
            let (lo, hi) = if k1 < k2 { (k1, k2) } else { (k2, k1) };
            let a = compute_ppi(&draws, 0, lo).unwrap();
            let b = compute_ppi(&draws, 0, hi).unwrap();
            prop_assert!(a.iter().zip(&b).all(|(x, y)| x >= y));
        }

        #[test]
        fn graph_cutoff_reproduces_selection(
            vals in prop::collection::vec(-0.6f64..0.6, 30..120),
            kappa in 0.0f64..0.4,
            alpha in 0.01f64..0.9,
        ) {
            let n = vals.len() / 6 * 6;
            let draws = PosteriorDraws::from_parts(4, vec![vec![1.0]], vals[..n].to_vec(), (0..n / 6).collect()).unwrap();
            let g = predict_graph(&draws, 0, kappa, alpha).unwrap();
            let by_cutoff: Vec<EdgeId> = (0..6)
                .filter(|&k| g.ppi[k] > g.fdr_threshold)
                .map(|k| EdgeId::from_index(4, k))
                .collect();
            prop_assert_eq!(by_cutoff, g.selected.clone());
        }

        #[test]
        fn selection_invariant_to_edge_permutation(ppi in grid_ppi(), alpha in 0.01f64..0.9, seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut perm: Vec<usize> = (0..ppi.len()).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let permuted: Vec<f64> = perm.iter().map(|&k| ppi[k]).collect();
            let mut a: Vec<usize> = fdr_select(&permuted, alpha).unwrap().selected.iter().map(|&k| perm[k]).collect();
            a.sort();
            prop_assert_eq!(a, fdr_select(&ppi, alpha).unwrap().selected);
        }
    }
}
