use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Dataset;

/// Diagonal loading applied when a subsample covariance cannot be inverted.
const LOADING: f64 = 1e-3;

/// Which samples inform the scale target of each covariate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSelector {
    rows: Vec<Vec<usize>>,
}

impl SampleSelector {
    pub fn from_rows(rows: Vec<Vec<usize>>) -> Self {
        SampleSelector { rows }
    }

    /// Purity covariates `(1 - pi, pi)`: samples with `pi < 0.5` for the
    /// first, `pi >= 0.5` for the second.
    pub fn by_purity(purity: &[f64]) -> Self {
        let low = (0..purity.len()).filter(|&n| purity[n] < 0.5).collect();
        let high = (0..purity.len()).filter(|&n| purity[n] >= 0.5).collect();
        SampleSelector { rows: vec![low, high] }
    }

    /// Group covariates (normal, tumor, shared): normal rows, tumor rows
    /// and all rows.
    pub fn by_group(is_tumor: &[bool]) -> Self {
        let normal = (0..is_tumor.len()).filter(|&n| !is_tumor[n]).collect();
        let tumor = (0..is_tumor.len()).filter(|&n| is_tumor[n]).collect();
        SampleSelector {
            rows: vec![normal, tumor, (0..is_tumor.len()).collect()],
        }
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }
}

/// Mean square of the off-diagonal entries (`i < j`) of the inverse
/// maximum-likelihood covariance of each covariate's subsample.
pub fn compute_m_s(data: &Dataset, selector: &SampleSelector) -> Result<Vec<f64>> {
    if selector.rows.len() != data.q() {
        return Err(Error::dim(format!(
            "selector has {} groups, data has q={}",
            selector.rows.len(),
            data.q()
        )));
    }
    selector.rows.iter().map(|rows| subsample_m(data.y(), rows)).collect()
}

fn subsample_m(y: &DMatrix<f64>, rows: &[usize]) -> Result<f64> {
    let p = y.ncols();
    if rows.is_empty() {
        return Err(Error::invalid("empty subsample for scale target"));
    }
    if let Some(bad) = rows.iter().find(|&&r| r >= y.nrows()) {
        return Err(Error::dim(format!("row {bad} outside N={}", y.nrows())));
    }
    let n = rows.len() as f64;
    let mut mean = vec![0.0; p];
    for &r in rows {
        for c in 0..p {
            mean[c] += y[(r, c)] / n;
        }
    }
    let mut cov = DMatrix::zeros(p, p);
    for &r in rows {
        for a in 0..p {
            let da = y[(r, a)] - mean[a];
            for b in 0..p {
                cov[(a, b)] += da * (y[(r, b)] - mean[b]) / n;
            }
        }
    }
    let inverse = if rows.len() > p {
        cov.clone().cholesky().map(|c| c.inverse())
    } else {
        None
    };
    let inverse = match inverse {
        Some(inv) => inv,
        None => {
            let loaded = cov + DMatrix::identity(p, p) * LOADING;
            loaded
                .cholesky()
                .map(|c| c.inverse())
                .ok_or_else(|| Error::numerical("subsample covariance not invertible", "after diagonal loading"))?
        }
    };
    let pairs = (p * (p - 1) / 2) as f64;
    let mut acc = 0.0;
    for i in 0..p {
        for j in (i + 1)..p {
            acc += inverse[(i, j)].powi(2);
        }
    }
    Ok(acc / pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn independent_normals_give_small_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = DMatrix::from_fn(20_000, 4, |_, _| StandardNormal.sample(&mut rng));
        let x = DMatrix::from_element(20_000, 1, 1.0);
        let data = Dataset::unnamed(y, x).unwrap();
        let m = compute_m_s(&data, &SampleSelector::from_rows(vec![(0..20_000).collect()])).unwrap();
        assert!(m[0] < 1e-3, "{m:?}");
    }

    #[test]
    fn two_by_two_closed_form() {
        // Four points whose MLE covariance is [[1, 0.5], [0.5, 1]]:
        // its inverse has off-diagonal -0.5 / 0.75.
        let s = (0.5f64).sqrt();
        let t = (1.5f64).sqrt();
        let pts = [[t, t], [-t, -t], [s, -s], [-s, s]];
        let y = DMatrix::from_fn(4, 2, |r, c| pts[r][c]);
        let data = Dataset::unnamed(y, DMatrix::from_element(4, 1, 1.0)).unwrap();
        let m = compute_m_s(&data, &SampleSelector::from_rows(vec![vec![0, 1, 2, 3]])).unwrap();
        let off = -0.5 / 0.75;
        assert!((m[0] - off * off).abs() < 1e-12, "{m:?}");
    }

    #[test]
    fn small_subsample_uses_loading() {
        let y = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, -1.0, 0.5, 0.0]);
        let data = Dataset::unnamed(y, DMatrix::from_element(2, 1, 1.0)).unwrap();
        let m = compute_m_s(&data, &SampleSelector::from_rows(vec![vec![0, 1]])).unwrap();
        assert!(m[0].is_finite() && m[0] > 0.0);
    }

    #[test]
    fn selectors_partition_rows() {
        let sel = SampleSelector::by_purity(&[0.1, 0.5, 0.49, 0.9]);
        assert_eq!(sel.rows(), &[vec![0, 2], vec![1, 3]]);
        let sel = SampleSelector::by_group(&[false, true, true]);
        assert_eq!(sel.rows(), &[vec![0], vec![1, 2], vec![0, 1, 2]]);
    }
}
