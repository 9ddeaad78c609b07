//! Domain types and the deterministic map from edge coefficients to
//! covariate-specific precision matrices and partial correlations.
//!
//! Each off-diagonal precision element is a linear function of the
//! covariates, `omega_ij(x) = sum_s beta_s^ij x_s`. Only canonical edges
//! `(i, j)` with `i < j` are stored, so `omega_ij(x) == omega_ji(x)` holds
//! structurally.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of undirected edges among `p` nodes.
pub fn n_edges(p: usize) -> usize {
    p * p.saturating_sub(1) / 2
}

/// An undirected edge in canonical form, `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeId {
    pub i: usize,
    pub j: usize,
}

impl EdgeId {
    /// Builds the canonical edge for an unordered node pair.
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a == b {
            return Err(Error::invalid(format!("self-loop ({a}, {a}) is not an edge")));
        }
        Ok(EdgeId {
            i: a.min(b),
            j: a.max(b),
        })
    }

    /// Flat position of this edge in lexicographic `(i, j)` order.
    ///
    /// The order is `(0,1), (0,2), ..., (0,p-1), (1,2), ...`.
    pub fn index(&self, p: usize) -> usize {
        debug_assert!(self.i < self.j && self.j < p);
        self.i * (2 * p - self.i - 1) / 2 + (self.j - self.i - 1)
    }

    /// Inverse of [`EdgeId::index`].
    pub fn from_index(p: usize, k: usize) -> Self {
        debug_assert!(k < n_edges(p));
        let mut i = 0;
        let mut start = 0;
        loop {
            let row = p - i - 1;
            if k < start + row {
                return EdgeId {
                    i,
                    j: i + 1 + (k - start),
                };
            }
            start += row;
            i += 1;
        }
    }
}

/// All canonical edges of a `p`-node graph in storage order.
pub fn all_edges(p: usize) -> Vec<EdgeId> {
    let mut out = Vec::with_capacity(n_edges(p));
    for i in 0..p {
        for j in (i + 1)..p {
            out.push(EdgeId { i, j });
        }
    }
    out
}

/// Column means and standard deviations removed at ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

/// Observations (`N x p`) paired with subject-level covariates (`N x q`).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: DMatrix<f64>,
    x: DMatrix<f64>,
    node_names: Vec<String>,
    covariate_names: Vec<String>,
    standardization: Option<Standardization>,
}

impl Dataset {
    /// Wraps raw (unstandardized) data. Requires `N >= 1`, `p >= 2`,
    /// `q >= 1` and finite entries.
    pub fn new(
        y: DMatrix<f64>,
        x: DMatrix<f64>,
        node_names: Vec<String>,
        covariate_names: Vec<String>,
    ) -> Result<Self> {
        let (n, p) = y.shape();
        if n < 1 || p < 2 {
            return Err(Error::dim(format!("need N >= 1 and p >= 2, got {n} x {p}")));
        }
        if x.nrows() != n || x.ncols() < 1 {
            return Err(Error::dim(format!(
                "covariates are {} x {}, expected {n} x q with q >= 1",
                x.nrows(),
                x.ncols()
            )));
        }
        if node_names.len() != p || covariate_names.len() != x.ncols() {
            return Err(Error::dim("name lists do not match matrix widths"));
        }
        if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite entry in data"));
        }
        Ok(Dataset {
            y,
            x,
            node_names,
            covariate_names,
            standardization: None,
        })
    }

    /// Same as [`Dataset::new`] with generated names `V1..Vp` and `X1..Xq`.
    pub fn unnamed(y: DMatrix<f64>, x: DMatrix<f64>) -> Result<Self> {
        let nodes = (1..=y.ncols()).map(|k| format!("V{k}")).collect();
        let covs = (1..=x.ncols()).map(|k| format!("X{k}")).collect();
        Self::new(y, x, nodes, covs)
    }

    /// Centers every column of `y` and scales it to unit sample standard
    /// deviation (divisor `N - 1`), recording the transform.
    pub fn standardize(mut self) -> Result<Self> {
        if self.standardization.is_some() {
            return Ok(self);
        }
        let n = self.n();
        if n < 2 {
            return Err(Error::dim("standardization needs N >= 2"));
        }
        let mut means = Vec::with_capacity(self.p());
        let mut sds = Vec::with_capacity(self.p());
        for mut col in self.y.column_iter_mut() {
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            let sd = var.sqrt();
            if !(sd > 0.0) {
                return Err(Error::invalid("constant column cannot be standardized"));
            }
            for v in col.iter_mut() {
                *v = (*v - mean) / sd;
            }
            means.push(mean);
            sds.push(sd);
        }
        self.standardization = Some(Standardization { means, sds });
        Ok(self)
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn p(&self) -> usize {
        self.y.ncols()
    }

    pub fn q(&self) -> usize {
        self.x.ncols()
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn is_standardized(&self) -> bool {
        self.standardization.is_some()
    }

    pub fn standardization(&self) -> Option<&Standardization> {
        self.standardization.as_ref()
    }

    /// Appends a constant covariate column named `intercept` in front.
    pub fn with_intercept(self) -> Result<Self> {
        let n = self.n();
        let q = self.q();
        let x = DMatrix::from_fn(n, q + 1, |r, c| if c == 0 { 1.0 } else { self.x[(r, c - 1)] });
        let mut names = vec!["intercept".to_string()];
        names.extend(self.covariate_names.iter().cloned());
        Ok(Dataset {
            y: self.y,
            x,
            node_names: self.node_names,
            covariate_names: names,
            standardization: self.standardization,
        })
    }
}

/// Edge regression coefficients `beta_s^ij`, one length-`q` column per
/// canonical edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeCoefficients {
    p: usize,
    q: usize,
    /// Column-major `q x E`.
    values: Vec<f64>,
}

impl EdgeCoefficients {
    pub fn zeros(p: usize, q: usize) -> Self {
        EdgeCoefficients {
            p,
            q,
            values: vec![0.0; q * n_edges(p)],
        }
    }

    /// Builds from a column-major `q x E` buffer.
    pub fn from_values(p: usize, q: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != q * n_edges(p) {
            return Err(Error::dim(format!(
                "expected {} coefficients for p={p}, q={q}, got {}",
                q * n_edges(p),
                values.len()
            )));
        }
        Ok(EdgeCoefficients { p, q, values })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n_edges(&self) -> usize {
        n_edges(self.p)
    }

    pub fn edge(&self, k: usize) -> &[f64] {
        &self.values[k * self.q..(k + 1) * self.q]
    }

    pub fn edge_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.values[k * self.q..(k + 1) * self.q]
    }

    pub fn get(&self, edge: EdgeId) -> &[f64] {
        self.edge(edge.index(self.p))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `omega_ij(x)` for every canonical edge.
    pub fn evaluate_all(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.q {
            return Err(Error::dim(format!("covariate length {} != q={}", x.len(), self.q)));
        }
        Ok(self
            .values
            .chunks_exact(self.q)
            .map(|b| b.iter().zip(x).map(|(b, x)| b * x).sum())
            .collect())
    }
}

/// Diagonal precision elements `omega_ii`, constant across covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagPrecision(Vec<f64>);

impl DiagPrecision {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::domain("diagonal precision must be positive and finite"));
        }
        Ok(DiagPrecision(values))
    }

    pub fn ones(p: usize) -> Self {
        DiagPrecision(vec![1.0; p])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Local prior variances `psi_s^ij`, laid out like [`EdgeCoefficients`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalScales {
    q: usize,
    values: Vec<f64>,
}

impl LocalScales {
    pub fn filled(p: usize, q: usize, value: f64) -> Self {
        LocalScales {
            q,
            values: vec![value; q * n_edges(p)],
        }
    }

    pub fn edge(&self, k: usize) -> &[f64] {
        &self.values[k * self.q..(k + 1) * self.q]
    }

    pub fn edge_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.values[k * self.q..(k + 1) * self.q]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Iterator over `psi_s^ij` for one covariate `s` across all edges.
    pub fn covariate(&self, s: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().skip(s).step_by(self.q).copied()
    }
}

/// Normal-Gamma hyperparameters shared across edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkageHyper {
    /// Gamma shape per covariate.
    pub lambda: Vec<f64>,
    /// Global scale squared, common to all covariates and edges.
    pub gamma_sq: f64,
    /// Scale targets for `lambda_s * gamma^2`.
    pub m_s: Vec<f64>,
    /// Log-normal random-walk step sizes for the `lambda_s` updates.
    pub sigma_lambda: Vec<f64>,
}

impl ShrinkageHyper {
    pub fn validate(&self) -> Result<()> {
        let q = self.lambda.len();
        if self.m_s.len() != q || self.sigma_lambda.len() != q {
            return Err(Error::dim("hyperparameter vectors differ in length"));
        }
        let all_pos = self
            .lambda
            .iter()
            .chain(&self.m_s)
            .chain(&self.sigma_lambda)
            .chain(std::iter::once(&self.gamma_sq))
            .all(|v| *v > 0.0 && v.is_finite());
        if !all_pos {
            return Err(Error::domain("shrinkage hyperparameters must be positive"));
        }
        Ok(())
    }
}

/// Linear conditional precision function `sum_s beta_s x_s`.
pub fn cpf_evaluate(beta_edge: &[f64], x: &[f64]) -> Result<f64> {
    if beta_edge.len() != x.len() || x.is_empty() {
        return Err(Error::dim(format!(
            "coefficient length {} vs covariate length {}",
            beta_edge.len(),
            x.len()
        )));
    }
    Ok(beta_edge.iter().zip(x).map(|(b, x)| b * x).sum())
}

/// `-omega_ij / sqrt(omega_ii * omega_jj)`.
pub fn partial_correlation(omega_ij: f64, omega_ii: f64, omega_jj: f64) -> Result<f64> {
    if !(omega_ii > 0.0) || !(omega_jj > 0.0) {
        return Err(Error::domain(format!(
            "diagonal precisions must be positive, got {omega_ii} and {omega_jj}"
        )));
    }
    Ok(-omega_ij / (omega_ii * omega_jj).sqrt())
}

/// Assembles the precision matrix at covariate level `x`. No positive
/// definiteness is imposed.
pub fn predict_precision(
    coeffs: &EdgeCoefficients,
    diag: &DiagPrecision,
    x: &[f64],
) -> Result<DMatrix<f64>> {
    let p = coeffs.p();
    if diag.len() != p {
        return Err(Error::dim(format!("diag has {} entries, p = {p}", diag.len())));
    }
    let off = coeffs.evaluate_all(x)?;
    let mut m = DMatrix::zeros(p, p);
    for (i, d) in diag.values().iter().enumerate() {
        m[(i, i)] = *d;
    }
    for (k, w) in off.into_iter().enumerate() {
        let e = EdgeId::from_index(p, k);
        m[(e.i, e.j)] = w;
        m[(e.j, e.i)] = w;
    }
    Ok(m)
}

/// Covariate vector `(1 - pi, pi)` for tumor purity `pi`.
pub fn purity_covariates(pi: f64) -> [f64; 2] {
    [1.0 - pi, pi]
}
