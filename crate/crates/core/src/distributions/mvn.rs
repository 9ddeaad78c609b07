//! Multivariate normal draws via a dense Cholesky factor with a bounded
//! diagonal-jitter fallback.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-6;

/// In-place lower Cholesky factorization of a row-major `k x k` matrix.
/// Returns `false` when a pivot is not strictly positive. The strict upper
/// triangle is left untouched.
pub fn cholesky_in_place(a: &mut [f64], k: usize) -> bool {
    debug_assert_eq!(a.len(), k * k);
    for j in 0..k {
        let mut d = a[j * k + j];
        for l in 0..j {
            d -= a[j * k + l] * a[j * k + l];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        a[j * k + j] = d;
        for i in (j + 1)..k {
            let mut s = a[i * k + j];
            for l in 0..j {
                s -= a[i * k + l] * a[j * k + l];
            }
            a[i * k + j] = s / d;
        }
    }
    true
}

/// Factorizes `matrix` (row-major, symmetric) into `factor`, adding
/// `1e-10 * trace / k` to the diagonal on failure and escalating by 10x up
/// to `1e-6 * trace / k`.
pub fn cholesky_with_jitter(matrix: &[f64], k: usize, factor: &mut [f64]) -> Result<()> {
    factor.copy_from_slice(matrix);
    if cholesky_in_place(factor, k) {
        return Ok(());
    }
    let trace: f64 = (0..k).map(|i| matrix[i * k + i]).sum();
    let base = (trace / k as f64).abs().max(f64::MIN_POSITIVE);
    let mut level = JITTER_START;
    while level <= JITTER_MAX * (1.0 + 1e-9) {
        factor.copy_from_slice(matrix);
        for i in 0..k {
            factor[i * k + i] += level * base;
        }
        if cholesky_in_place(factor, k) {
            return Ok(());
        }
        level *= 10.0;
    }
    Err(Error::numerical(
        "Cholesky factorization failed after maximal jitter",
        format!("k={k}, trace={trace:e}, max jitter={:e}", JITTER_MAX * base),
    ))
}

/// Draws `N(mean, covariance)`; `covariance` is row-major `k x k`.
pub fn sample_mvn<R: Rng + ?Sized>(mean: &[f64], covariance: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    let k = mean.len();
    if covariance.len() != k * k {
        return Err(Error::dim(format!("covariance has {} entries for k={k}", covariance.len())));
    }
    let mut l = vec![0.0; k * k];
    cholesky_with_jitter(covariance, k, &mut l)?;
    let z: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
    Ok((0..k)
        .map(|i| mean[i] + (0..=i).map(|j| l[i * k + j] * z[j]).sum::<f64>())
        .collect())
}

/// Draws `N(P^-1 h, P^-1)` from a precision matrix `P` (row-major) and a
/// linear term `h`, writing the draw into `out`. `scratch` must hold `k*k`
/// values. Avoids forming the covariance, which matters when prior
/// variances are tiny.
pub fn sample_mvn_canonical<R: Rng + ?Sized>(
    precision: &[f64],
    h: &[f64],
    scratch: &mut [f64],
    out: &mut [f64],
    rng: &mut R,
) -> Result<()> {
    let k = h.len();
    cholesky_with_jitter(precision, k, scratch)?;
    let l = &*scratch;
    // Forward solve L w = h, then back solve L^T m = w + z gives
    // m ~ N(P^-1 h, P^-1).
    let mut w = [0.0f64; 8];
    let mut heap;
    let w: &mut [f64] = if k <= 8 {
        &mut w[..k]
    } else {
        heap = vec![0.0; k];
        &mut heap
    };
    for i in 0..k {
        let mut s = h[i];
        for j in 0..i {
            s -= l[i * k + j] * w[j];
        }
        w[i] = s / l[i * k + i];
    }
    for wi in w.iter_mut() {
        *wi += rng.sample::<f64, _>(StandardNormal);
    }
    for i in (0..k).rev() {
        let mut s = w[i];
        for j in (i + 1)..k {
            s -= l[j * k + i] * out[j];
        }
        out[i] = s / l[i * k + i];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mean_and_var;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 50_000;
        let draws: Vec<Vec<f64>> = (0..n)
            .map(|_| sample_mvn(&[0.0, 0.0], &[1.0, 0.0, 0.0, 1.0], &mut rng).unwrap())
            .collect();
        let c01: f64 = draws.iter().map(|d| d[0] * d[1]).sum::<f64>() / n as f64;
        let (_, v0) = mean_and_var(&draws.iter().map(|d| d[0]).collect::<Vec<_>>());
        assert!(c01.abs() < 4.0 / (n as f64).sqrt());
        assert!((v0 - 1.0).abs() < 0.03);
    }

    #[test]
    fn scalar_case() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let draws: Vec<f64> = (0..50_000).map(|_| sample_mvn(&[3.0], &[4.0], &mut rng).unwrap()[0]).collect();
        let (m, v) = mean_and_var(&draws);
        assert!((m - 3.0).abs() < 0.03);
        assert!((v.sqrt() - 2.0).abs() < 0.03);
    }

    #[test]
    fn correlated_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 50_000;
        let draws: Vec<Vec<f64>> = (0..n)
            .map(|_| sample_mvn(&[0.0, 0.0], &[2.0, 1.0, 1.0, 2.0], &mut rng).unwrap())
            .collect();
        let a: Vec<f64> = draws.iter().map(|d| d[0]).collect();
        let b: Vec<f64> = draws.iter().map(|d| d[1]).collect();
        let (ma, va) = mean_and_var(&a);
        let (mb, vb) = mean_and_var(&b);
        let cov = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n as f64 - 1.0);
        let corr = cov / (va * vb).sqrt();
        assert!((corr - 0.5).abs() < 0.015, "{corr}");
    }

    #[test]
    fn jitter_rescues_semidefinite_and_caps_indefinite() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        // Rank-one PSD matrix factorizes after jitter.
        assert!(sample_mvn(&[0.0, 0.0], &[1.0, 1.0, 1.0, 1.0], &mut rng).is_ok());
        // Clearly indefinite matrix exhausts the jitter ladder.
        let err = sample_mvn(&[0.0, 0.0], &[1.0, 2.0, 2.0, 1.0], &mut rng).unwrap_err();
        assert!(matches!(err, Error::Numerical { .. }));
    }

    #[test]
    fn canonical_form_moments() {
        // P = [[3, 1], [1, 2]], h = (1, -1): mean = P^-1 h = (0.6, -0.8)
        let p = [3.0, 1.0, 1.0, 2.0];
        let h = [1.0, -1.0];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut scratch = [0.0; 4];
        let mut out = [0.0; 2];
        let n = 60_000;
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            sample_mvn_canonical(&p, &h, &mut scratch, &mut out, &mut rng).unwrap();
            xs.push(out[0]);
            ys.push(out[1]);
        }
        let (mx, vx) = mean_and_var(&xs);
        let (my, vy) = mean_and_var(&ys);
        assert!((mx - 0.6).abs() < 0.01 && (my + 0.8).abs() < 0.01);
        // P^-1 = [[0.4, -0.2], [-0.2, 0.6]]
        assert!((vx - 0.4).abs() < 0.01 && (vy - 0.6).abs() < 0.015);
    }
}
