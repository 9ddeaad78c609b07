//! Ground-truth precision matrices and synthetic tumor/normal mixtures.

use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::is_positive_definite;
use crate::model::{all_edges, Dataset, EdgeId};

const PD_RETRIES: usize = 100;
const OVERLAP_RETRIES: usize = 10_000;

/// Normal and tumor precision matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub omega_n: DMatrix<f64>,
    pub omega_t: DMatrix<f64>,
}

impl GroundTruth {
    /// Checks shape, symmetry and positive definiteness of both matrices.
    pub fn new(omega_n: DMatrix<f64>, omega_t: DMatrix<f64>) -> Result<Self> {
        for (name, m) in [("normal", &omega_n), ("tumor", &omega_t)] {
            if !m.is_square() || m.nrows() < 2 {
                return Err(Error::dim(format!("{name} precision must be square with p >= 2")));
            }
            if m != &m.transpose() {
                return Err(Error::invalid(format!("{name} precision is not symmetric")));
            }
            if !is_positive_definite(m) {
                return Err(Error::invalid(format!("{name} precision is not positive definite")));
            }
        }
        if omega_n.nrows() != omega_t.nrows() {
            return Err(Error::dim("normal and tumor precisions differ in size"));
        }
        Ok(GroundTruth { omega_n, omega_t })
    }

    pub fn p(&self) -> usize {
        self.omega_n.nrows()
    }

    /// Edge-order mask of the normal graph.
    pub fn normal_edges(&self) -> Vec<bool> {
        edge_mask(&self.omega_n)
    }

    pub fn tumor_edges(&self) -> Vec<bool> {
        edge_mask(&self.omega_t)
    }

    pub fn overlap(&self) -> usize {
        self.normal_edges()
            .iter()
            .zip(self.tumor_edges())
            .filter(|(a, b)| **a && *b)
            .count()
    }
}

/// Nonzero off-diagonal pattern in edge order.
pub fn edge_mask(m: &DMatrix<f64>) -> Vec<bool> {
    all_edges(m.nrows()).iter().map(|e| m[(e.i, e.j)] != 0.0).collect()
}

fn signed_uniform<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    let mag = rng.random_range(lo..=hi);
    if rng.random::<bool>() {
        mag
    } else {
        -mag
    }
}

fn banded<R: Rng + ?Sized>(p: usize, offset: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::identity(p, p);
    for i in 0..p.saturating_sub(offset) {
        let v = signed_uniform(0.3, 0.5, rng);
        m[(i, i + offset)] = v;
        m[(i + offset, i)] = v;
    }
    m
}

/// Low-overlap design: tumor edges on `(i, i+2)`, normal edges on
/// `(i, i+1)`, magnitudes uniform on `[0.3, 0.5]` with random sign.
pub fn build_sim1<R: Rng + ?Sized>(p: usize, rng: &mut R) -> Result<GroundTruth> {
    if p < 3 {
        return Err(Error::invalid("simulation 1 needs p >= 3"));
    }
    for _ in 0..PD_RETRIES {
        let omega_t = banded(p, 2, rng);
        let omega_n = banded(p, 1, rng);
        if is_positive_definite(&omega_t) && is_positive_definite(&omega_n) {
            return GroundTruth::new(omega_n, omega_t);
        }
    }
    Err(Error::numerical("simulation 1 matrices not positive definite", format!("after {PD_RETRIES} draws")))
}

/// Fixed tumor precision of the high-overlap design: unit diagonal, 0.5 on
/// the first band and 0.4 on the second.
pub fn sim2_tumor(p: usize) -> DMatrix<f64> {
    let mut m = DMatrix::identity(p, p);
    for i in 0..p {
        if i + 1 < p {
            m[(i, i + 1)] = 0.5;
            m[(i + 1, i)] = 0.5;
        }
        if i + 2 < p {
            m[(i, i + 2)] = 0.4;
            m[(i + 2, i)] = 0.4;
        }
    }
    m
}

/// Scales each off-diagonal entry by `1 / (1.5 * row absolute off-diagonal
/// sum)`, then averages with the transpose. Diagonals are left unchanged.
pub fn repair(m: &DMatrix<f64>) -> DMatrix<f64> {
    let p = m.nrows();
    let mut scaled = m.clone();
    for i in 0..p {
        let sum: f64 = (0..p).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
        if sum > 0.0 {
            for j in (0..p).filter(|&j| j != i) {
                scaled[(i, j)] = m[(i, j)] / (1.5 * sum);
            }
        }
    }
    (&scaled + scaled.transpose()) * 0.5
}

/// Settings of the high-overlap design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sim2Settings {
    pub n_remove: usize,
    pub n_add: usize,
    /// Required number of shared edges.
    pub overlap: usize,
}

impl Default for Sim2Settings {
    fn default() -> Self {
        Sim2Settings {
            n_remove: 30,
            n_add: 30,
            overlap: 7,
        }
    }
}

/// High-overlap design: the normal graph removes `n_remove` tumor edges,
/// adds `n_add` new ones with magnitudes on `[0.4, 0.6]`, then is repaired
/// to diagonal dominance.
pub fn build_sim2<R: Rng + ?Sized>(p: usize, settings: Sim2Settings, rng: &mut R) -> Result<GroundTruth> {
    let omega_t = sim2_tumor(p);
    if !is_positive_definite(&omega_t) {
        return Err(Error::invalid(format!("banded tumor precision is not positive definite at p={p}")));
    }
    let tumor_mask = edge_mask(&omega_t);
    let present: Vec<usize> = (0..tumor_mask.len()).filter(|&k| tumor_mask[k]).collect();
    let absent: Vec<usize> = (0..tumor_mask.len()).filter(|&k| !tumor_mask[k]).collect();
    if settings.n_remove > present.len() || settings.n_add > absent.len() {
        return Err(Error::invalid(format!(
            "cannot remove {} of {} edges and add {} of {} non-edges",
            settings.n_remove,
            present.len(),
            settings.n_add,
            absent.len()
        )));
    }
    let mut pd_failures = 0;
    for _ in 0..OVERLAP_RETRIES {
        let mut omega_n = omega_t.clone();
        for r in sample(rng, present.len(), settings.n_remove) {
            let e = EdgeId::from_index(p, present[r]);
            omega_n[(e.i, e.j)] = 0.0;
            omega_n[(e.j, e.i)] = 0.0;
        }
        for a in sample(rng, absent.len(), settings.n_add) {
            let e = EdgeId::from_index(p, absent[a]);
            let v = signed_uniform(0.4, 0.6, rng);
            omega_n[(e.i, e.j)] = v;
            omega_n[(e.j, e.i)] = v;
        }
        let omega_n = repair(&omega_n);
        let shared = edge_mask(&omega_n).iter().zip(&tumor_mask).filter(|(a, b)| **a && **b).count();
        if shared != settings.overlap {
            continue;
        }
        if !is_positive_definite(&omega_n) {
            pd_failures += 1;
            if pd_failures >= PD_RETRIES {
                break;
            }
            continue;
        }
        return GroundTruth::new(omega_n, omega_t);
    }
    Err(Error::numerical(
        "simulation 2 normal precision not constructed",
        format!("overlap {} unattainable or {pd_failures} PD failures", settings.overlap),
    ))
}

/// `log2((1 - pi) 2^n + pi 2^t)` elementwise.
pub fn mix_expressions(n_expr: &[f64], t_expr: &[f64], pi: f64) -> Result<Vec<f64>> {
    if n_expr.len() != t_expr.len() {
        return Err(Error::dim("normal and tumor expression vectors differ in length"));
    }
    if !(0.0..=1.0).contains(&pi) {
        return Err(Error::domain(format!("purity {pi} outside [0, 1]")));
    }
    Ok(n_expr
        .iter()
        .zip(t_expr)
        .map(|(&n, &t)| {
            if pi == 0.0 {
                n
            } else if pi == 1.0 {
                t
            } else {
                ((1.0 - pi) * n.exp2() + pi * t.exp2()).log2()
            }
        })
        .collect())
}

/// `n` evenly spaced purities from 0.01 to 0.99 inclusive.
pub fn purity_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.01],
        _ => (0..n).map(|k| 0.01 + 0.98 * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Draws from `N(0, Omega^-1)` through the Cholesky factor of `Omega`.
pub struct PrecisionSampler {
    upper: DMatrix<f64>,
}

impl PrecisionSampler {
    pub fn new(omega: &DMatrix<f64>) -> Result<Self> {
        let chol = omega
            .clone()
            .cholesky()
            .ok_or_else(|| Error::numerical("precision matrix not positive definite", "sampling"))?;
        Ok(PrecisionSampler {
            upper: chol.l().transpose(),
        })
    }

    /// Solves `L^T v = z` for standard normal `z`, so `cov(v) = Omega^-1`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let p = self.upper.nrows();
        let z: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
        let mut v = vec![0.0; p];
        for i in (0..p).rev() {
            let s: f64 = ((i + 1)..p).map(|j| self.upper[(i, j)] * v[j]).sum();
            v[i] = (z[i] - s) / self.upper[(i, i)];
        }
        v
    }
}

/// A generated dataset with its per-sample annotations.
#[derive(Debug, Clone)]
pub struct SimDataset {
    /// Standardized expressions with covariates `(1 - pi, pi)`.
    pub data: Dataset,
    pub purity: Vec<f64>,
    pub groups: Vec<Group>,
}

/// `n_reference` pure-normal samples followed by `n_mixed` mixtures on the
/// purity grid, then standardized.
pub fn generate_dataset<R: Rng + ?Sized>(
    truth: &GroundTruth,
    n_reference: usize,
    n_mixed: usize,
    rng: &mut R,
) -> Result<SimDataset> {
    if n_reference + n_mixed < 2 {
        return Err(Error::invalid("need at least two samples"));
    }
    let p = truth.p();
    let normal = PrecisionSampler::new(&truth.omega_n)?;
    let tumor = PrecisionSampler::new(&truth.omega_t)?;
    let n = n_reference + n_mixed;
    let mut y = DMatrix::zeros(n, p);
    let mut purity = vec![0.0; n_reference];
    purity.extend(purity_grid(n_mixed));
    for (r, &pi) in purity.iter().enumerate() {
        let row = if r < n_reference {
            normal.sample(rng)
        } else {
            let nv = normal.sample(rng);
            let tv = tumor.sample(rng);
            mix_expressions(&nv, &tv, pi)?
        };
        for (c, v) in row.into_iter().enumerate() {
            y[(r, c)] = v;
        }
    }
    let x = DMatrix::from_fn(n, 2, |r, c| if c == 0 { 1.0 - purity[r] } else { purity[r] });
    let node_names = (1..=p).map(|i| format!("g{i}")).collect();
    let data = Dataset::new(y, x, node_names, vec!["normal".into(), "tumor".into()])?.standardize()?;
    let groups = (0..n)
        .map(|r| if r < n_reference { Group::Normal } else { Group::Tumor })
        .collect();
    Ok(SimDataset { data, purity, groups })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Normal,
    Tumor,
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" | "n" => Ok(Group::Normal),
            "tumor" | "tumour" | "t" => Ok(Group::Tumor),
            other => Err(Error::invalid(format!("unknown group label '{other}'"))),
        }
    }
}

impl std::fmt::Display for Group {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Group::Normal => "normal",
            Group::Tumor => "tumor",
        })
    }
}

/// Group covariates: normal `(1, 0, 1)`, tumor `(0, 1, 1)`.
pub fn encode_groups(groups: &[Group]) -> DMatrix<f64> {
    DMatrix::from_fn(groups.len(), 3, |r, c| match (groups[r], c) {
        (_, 2) => 1.0,
        (Group::Normal, 0) | (Group::Tumor, 1) => 1.0,
        _ => 0.0,
    })
}

/// Seed of replicate `index` derived from `base` by a SplitMix64 step.
pub fn replicate_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn count(mask: &[bool]) -> usize {
        mask.iter().filter(|b| **b).count()
    }

    #[test]
    fn sim1_counts_and_magnitudes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let t = build_sim1(20, &mut rng).unwrap();
            assert_eq!(count(&t.normal_edges()), 19);
            assert_eq!(count(&t.tumor_edges()), 18);
            assert_eq!(t.overlap(), 0);
            for m in [&t.omega_n, &t.omega_t] {
                for e in all_edges(20) {
                    let v = m[(e.i, e.j)].abs();
                    assert!(v == 0.0 || (0.3..=0.5).contains(&v));
                }
                assert!((0..20).all(|i| m[(i, i)] == 1.0));
            }
        }
    }

    #[test]
    fn sim2_structure() {
        let t = sim2_tumor(20);
        assert_eq!(t[(3, 4)], 0.5);
        assert_eq!(t[(3, 5)], 0.4);
        assert_eq!(t[(3, 6)], 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let g = build_sim2(20, Sim2Settings::default(), &mut rng).unwrap();
            assert_eq!(count(&g.tumor_edges()), 37);
            assert_eq!(count(&g.normal_edges()), 37);
            assert_eq!(g.overlap(), 7);
            assert!(is_positive_definite(&g.omega_n));
            assert!((0..20).all(|i| g.omega_n[(i, i)] == 1.0));
        }
    }

    #[test]
    fn repair_keeps_sign_pattern() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = build_sim2(20, Sim2Settings::default(), &mut rng).unwrap();
        let again = repair(&g.omega_n);
        for (a, b) in g.omega_n.iter().zip(again.iter()) {
            assert_eq!((*a > 0.0, *a < 0.0), (*b > 0.0, *b < 0.0));
        }
        assert_eq!(again, again.transpose());
    }

    #[test]
    fn mix_examples() {
        assert_eq!(mix_expressions(&[0.3, -1.0], &[2.0, 0.5], 1.0).unwrap(), vec![2.0, 0.5]);
        assert_eq!(mix_expressions(&[0.3, -1.0], &[2.0, 0.5], 0.0).unwrap(), vec![0.3, -1.0]);
        let v = mix_expressions(&[0.0], &[1.0], 0.5).unwrap()[0];
        assert!((v - 0.584_962_500_721_156_2).abs() < 1e-15);
        assert!(mix_expressions(&[0.0], &[1.0], 1.5).is_err());
    }

    #[test]
    fn dataset_shape_and_encoding() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = build_sim1(20, &mut rng).unwrap();
        let d = generate_dataset(&t, 50, 150, &mut rng).unwrap();
        assert_eq!((d.data.n(), d.data.p(), d.data.q()), (200, 20, 2));
        assert!(d.data.is_standardized());
        for r in 0..50 {
            assert_eq!((d.data.x()[(r, 0)], d.data.x()[(r, 1)]), (1.0, 0.0));
        }
        assert!((d.purity[50] - 0.01).abs() < 1e-15 && (d.purity[199] - 0.99).abs() < 1e-15);

        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        let da = generate_dataset(&t, 5, 10, &mut a).unwrap();
        let db = generate_dataset(&t, 5, 10, &mut b).unwrap();
        assert_eq!(da.data.y(), db.data.y());
    }

    #[test]
    fn high_purity_covariance_approaches_tumor() {
        // Pooled mixtures within a narrow purity bin: distance to the tumor
        // covariance shrinks as the bin moves towards 1.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = build_sim1(6, &mut rng).unwrap();
        let sig_t = t.omega_t.clone().try_inverse().unwrap();
        let normal = PrecisionSampler::new(&t.omega_n).unwrap();
        let tumor = PrecisionSampler::new(&t.omega_t).unwrap();
        let dist = |pi: f64, rng: &mut ChaCha8Rng| {
            let n = 40_000;
            let mut cov = DMatrix::<f64>::zeros(6, 6);
            let mut mean = [0.0; 6];
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| mix_expressions(&normal.sample(rng), &tumor.sample(rng), pi).unwrap())
                .collect();
            for r in &rows {
                for i in 0..6 {
                    mean[i] += r[i] / n as f64;
                }
            }
            for r in &rows {
                for i in 0..6 {
                    for j in 0..6 {
                        cov[(i, j)] += (r[i] - mean[i]) * (r[j] - mean[j]) / (n as f64 - 1.0);
                    }
                }
            }
            (cov - &sig_t).norm()
        };
        let d = [0.2, 0.6, 0.95].map(|pi| dist(pi, &mut rng));
        assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
    }

    #[test]
    fn group_encoding() {
        let g = encode_groups(&[Group::Normal, Group::Tumor, Group::Normal]);
        assert_eq!(g.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 0.0, 1.0]);
        assert_eq!(g.row(1).iter().copied().collect::<Vec<_>>(), vec![0.0, 1.0, 1.0]);
        assert_eq!(g.row(2).iter().copied().collect::<Vec<_>>(), vec![1.0, 0.0, 1.0]);
        assert!("stroma".parse::<Group>().is_err());
    }

    #[test]
    fn precision_sampler_covariance() {
        let omega = DMatrix::from_row_slice(2, 2, &[2.0, -0.8, -0.8, 1.0]);
        let s = PrecisionSampler::new(&omega).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 100_000;
        let mut acc = [0.0; 3];
        for _ in 0..n {
            let v = s.sample(&mut rng);
            acc[0] += v[0] * v[0] / n as f64;
            acc[1] += v[0] * v[1] / n as f64;
            acc[2] += v[1] * v[1] / n as f64;
        }
        let sig = omega.try_inverse().unwrap();
        assert!((acc[0] - sig[(0, 0)]).abs() < 0.02);
        assert!((acc[1] - sig[(0, 1)]).abs() < 0.02);
        assert!((acc[2] - sig[(1, 1)]).abs() < 0.03);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn mix_endpoints_and_monotone(
            n in prop::collection::vec(-5.0f64..5.0, 1..10),
            shift in prop::collection::vec(0.01f64..3.0, 10),
            a in 0.0f64..1.0,
            b in 0.0f64..1.0,
        ) {
            let t: Vec<f64> = n.iter().zip(&shift).map(|(x, s)| x + s).collect();
            prop_assert_eq!(mix_expressions(&n, &t, 0.0).unwrap(), n.clone());
            prop_assert_eq!(mix_expressions(&n, &t, 1.0).unwrap(), t.clone());
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let ml = mix_expressions(&n, &t, lo).unwrap();
            let mh = mix_expressions(&n, &t, hi).unwrap();
            prop_assert!(ml.iter().zip(&mh).all(|(x, y)| x <= y));
        }
    }
}
