use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{n_edges, predict_precision, DiagPrecision, EdgeCoefficients, EdgeId};

/// Positive-definiteness flags over a grid of covariate levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdAudit {
    pub flags: Vec<bool>,
    pub fraction: f64,
}

/// Strict test: Cholesky must succeed without any diagonal perturbation.
pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite()) && m.clone().cholesky().is_some()
}

/// Assembles the precision matrix at every grid level and tests it for
/// positive definiteness. With `keep`, off-diagonal entries whose edge is
/// not kept at that level are zeroed first (one mask per level, in edge
/// order); diagonals are untouched.
pub fn pd_audit(
    coeffs: &EdgeCoefficients,
    diag: &DiagPrecision,
    grid: &[Vec<f64>],
    keep: Option<&[Vec<bool>]>,
) -> Result<PdAudit> {
    if grid.is_empty() {
        return Err(Error::invalid("empty covariate grid"));
    }
    let p = coeffs.p();
    if let Some(masks) = keep {
        if masks.len() != grid.len() || masks.iter().any(|m| m.len() != n_edges(p)) {
            return Err(Error::dim("one edge mask of length E is needed per grid level"));
        }
    }
    let mut flags = Vec::with_capacity(grid.len());
    for (l, x) in grid.iter().enumerate() {
        let mut m = predict_precision(coeffs, diag, x)?;
        if let Some(masks) = keep {
            for (k, kept) in masks[l].iter().enumerate() {
                if !kept {
                    let e = EdgeId::from_index(p, k);
                    m[(e.i, e.j)] = 0.0;
                    m[(e.j, e.i)] = 0.0;
                }
            }
        }
        flags.push(is_positive_definite(&m));
    }
    let fraction = flags.iter().filter(|f| **f).count() as f64 / flags.len() as f64;
    Ok(PdAudit { flags, fraction })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_coefficients_always_pd() {
        let grid: Vec<Vec<f64>> = (0..=100).map(|k| vec![1.0 - k as f64 / 100.0, k as f64 / 100.0]).collect();
        let a = pd_audit(&EdgeCoefficients::zeros(4, 2), &DiagPrecision::ones(4), &grid, None).unwrap();
        assert_eq!(a.fraction, 1.0);
    }

    #[test]
    fn strong_edge_fails_and_thresholding_repairs() {
        let coeffs = EdgeCoefficients::from_values(2, 1, vec![2.0]).unwrap();
        let grid = vec![vec![1.0]];
        let a = pd_audit(&coeffs, &DiagPrecision::ones(2), &grid, None).unwrap();
        assert_eq!(a.flags, vec![false]);
        let b = pd_audit(&coeffs, &DiagPrecision::ones(2), &grid, Some(&[vec![false]])).unwrap();
        assert_eq!(b.flags, vec![true]);
    }

    #[test]
    fn semidefinite_counts_as_failure() {
        let coeffs = EdgeCoefficients::from_values(2, 1, vec![1.0]).unwrap();
        let a = pd_audit(&coeffs, &DiagPrecision::ones(2), &[vec![1.0]], None).unwrap();
        assert_eq!(a.fraction, 0.0);
    }
}
