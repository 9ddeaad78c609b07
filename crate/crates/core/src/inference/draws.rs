use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{n_edges, partial_correlation, DiagPrecision, EdgeCoefficients};

/// Thinned posterior draws of partial correlations `rho_ij(x)` at a fixed
/// list of covariate levels. Layout is `[draw][level][edge]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws {
    p: usize,
    levels: Vec<Vec<f64>>,
    rho: Vec<f64>,
    draw_iterations: Vec<usize>,
}

impl PosteriorDraws {
    pub fn new(p: usize, levels: Vec<Vec<f64>>) -> Self {
        PosteriorDraws {
            p,
            levels,
            rho: Vec::new(),
            draw_iterations: Vec::new(),
        }
    }

    /// Rebuilds from a flat `[draw][level][edge]` buffer.
    pub fn from_parts(p: usize, levels: Vec<Vec<f64>>, rho: Vec<f64>, draw_iterations: Vec<usize>) -> Result<Self> {
        let stride = levels.len() * n_edges(p);
        if rho.len() != stride * draw_iterations.len() {
            return Err(Error::dim(format!(
                "rho buffer has {} values, expected {} x {stride}",
                rho.len(),
                draw_iterations.len()
            )));
        }
        if rho.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite partial correlation draw"));
        }
        Ok(PosteriorDraws {
            p,
            levels,
            rho,
            draw_iterations,
        })
    }

    /// Appends one draw; `values` is `[level][edge]`.
    pub fn push(&mut self, iteration: usize, values: &[f64]) {
        debug_assert_eq!(values.len(), self.levels.len() * n_edges(self.p));
        self.rho.extend_from_slice(values);
        self.draw_iterations.push(iteration);
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n_edges(&self) -> usize {
        n_edges(self.p)
    }

    pub fn n_draws(&self) -> usize {
        self.draw_iterations.len()
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    pub fn draw_iterations(&self) -> &[usize] {
        &self.draw_iterations
    }

    pub fn raw(&self) -> &[f64] {
        &self.rho
    }

    /// All edges of draw `l` at `level`.
    pub fn slice(&self, l: usize, level: usize) -> &[f64] {
        let e = self.n_edges();
        let start = (l * self.levels.len() + level) * e;
        &self.rho[start..start + e]
    }

    /// Index of a recorded level equal to `x` within `tol`.
    pub fn find_level(&self, x: &[f64], tol: f64) -> Option<usize> {
        self.levels
            .iter()
            .position(|lv| lv.len() == x.len() && lv.iter().zip(x).all(|(a, b)| (a - b).abs() <= tol))
    }
}

/// Thinned draws of the raw coefficients and diagonal precisions, from
/// which partial correlations at any covariate level can be rebuilt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientDraws {
    pub p: usize,
    pub q: usize,
    /// `[draw][edge][covariate]`.
    pub beta: Vec<f64>,
    /// `[draw][node]`.
    pub omega_diag: Vec<f64>,
    pub draw_iterations: Vec<usize>,
}

impl CoefficientDraws {
    pub fn new(p: usize, q: usize) -> Self {
        CoefficientDraws {
            p,
            q,
            beta: Vec::new(),
            omega_diag: Vec::new(),
            draw_iterations: Vec::new(),
        }
    }

    pub fn push(&mut self, iteration: usize, coeffs: &EdgeCoefficients, diag: &DiagPrecision) {
        self.beta.extend_from_slice(coeffs.values());
        self.omega_diag.extend_from_slice(diag.values());
        self.draw_iterations.push(iteration);
    }

    pub fn n_draws(&self) -> usize {
        self.draw_iterations.len()
    }

    pub fn beta_draw(&self, l: usize) -> &[f64] {
        let w = self.q * n_edges(self.p);
        &self.beta[l * w..(l + 1) * w]
    }

    pub fn omega_draw(&self, l: usize) -> &[f64] {
        &self.omega_diag[l * self.p..(l + 1) * self.p]
    }

    /// Posterior means of the coefficients and diagonal precisions.
    pub fn posterior_mean(&self) -> Result<(EdgeCoefficients, DiagPrecision)> {
        let l = self.n_draws();
        if l == 0 {
            return Err(Error::invalid("no coefficient draws recorded"));
        }
        let w = self.q * n_edges(self.p);
        let mut beta = vec![0.0; w];
        let mut omega = vec![0.0; self.p];
        for d in 0..l {
            for (acc, v) in beta.iter_mut().zip(self.beta_draw(d)) {
                *acc += v;
            }
            for (acc, v) in omega.iter_mut().zip(self.omega_draw(d)) {
                *acc += v;
            }
        }
        beta.iter_mut().for_each(|v| *v /= l as f64);
        omega.iter_mut().for_each(|v| *v /= l as f64);
        Ok((EdgeCoefficients::from_values(self.p, self.q, beta)?, DiagPrecision::new(omega)?))
    }

    /// Partial-correlation draws at arbitrary covariate levels.
    pub fn rho_draws(&self, levels: &[Vec<f64>]) -> Result<PosteriorDraws> {
        if levels.iter().any(|x| x.len() != self.q) {
            return Err(Error::dim("level width differs from q"));
        }
        let e = n_edges(self.p);
        let mut out = PosteriorDraws::new(self.p, levels.to_vec());
        let mut buf = vec![0.0; levels.len() * e];
        for d in 0..self.n_draws() {
            let beta = self.beta_draw(d);
            let omega = self.omega_draw(d);
            fill_rho(self.p, self.q, beta, omega, levels, &mut buf)?;
            out.push(self.draw_iterations[d], &buf);
        }
        Ok(out)
    }
}

/// Writes `rho_ij(x)` for every level and edge into `out` (`[level][edge]`).
pub(crate) fn fill_rho(
    p: usize,
    q: usize,
    beta: &[f64],
    omega_diag: &[f64],
    levels: &[Vec<f64>],
    out: &mut [f64],
) -> Result<()> {
    let e = n_edges(p);
    for (li, x) in levels.iter().enumerate() {
        let row = &mut out[li * e..(li + 1) * e];
        let mut k = 0;
        for i in 0..p {
            for j in (i + 1)..p {
                let b = &beta[k * q..(k + 1) * q];
                let w: f64 = b.iter().zip(x).map(|(b, x)| b * x).sum();
                row[k] = partial_correlation(w, omega_diag[i], omega_diag[j])?;
                k += 1;
            }
        }
    }
    Ok(())
}
