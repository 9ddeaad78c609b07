//! Generalized inverse Gaussian variates.
//!
//! Density `x^(m-1) exp(-(a x + b / x) / 2)` on `x > 0`. The general case
//! follows Hörmann & Leydold (2014): after rescaling by `sqrt(b / a)` the
//! target depends only on `(m, omega = sqrt(a b))`, negative orders are
//! handled through `1 / X`, and one of three rejection schemes is chosen
//! by region (ratio-of-uniforms with or without mode shift, or a
//! piecewise hat for small `omega`). `b = 0` and `a = 0` dispatch to the
//! Gamma and inverse-Gamma limits.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::bessel::ln_bessel_k;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GigParams {
    /// Order.
    pub m: f64,
    pub a: f64,
    pub b: f64,
}

impl GigParams {
    pub fn new(m: f64, a: f64, b: f64) -> Result<Self> {
        let p = GigParams { m, a, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let GigParams { m, a, b } = *self;
        if !(m.is_finite() && a.is_finite() && b.is_finite()) || a < 0.0 || b < 0.0 {
            return Err(Error::domain(format!("GIG({m}, {a}, {b}): parameters must be finite with a, b >= 0")));
        }
        let ok = if b == 0.0 {
            m > 0.0 && a > 0.0
        } else if a == 0.0 {
            m < 0.0 && b > 0.0
        } else {
            true
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("GIG({m}, {a}, {b}) is improper")))
        }
    }

    /// Parameters of `1 / X`.
    pub fn reciprocal(&self) -> Self {
        GigParams {
            m: -self.m,
            a: self.b,
            b: self.a,
        }
    }
}

/// Draws one GIG variate.
pub fn sample_gig<R: Rng + ?Sized>(params: GigParams, rng: &mut R) -> Result<f64> {
    params.validate()?;
    let GigParams { m, a, b } = params;
    if b == 0.0 {
        return Ok(gamma_draw(m, 2.0 / a, rng));
    }
    if a == 0.0 {
        return Ok(1.0 / gamma_draw(-m, 2.0 / b, rng));
    }
    let omega = (a * b).sqrt();
    let scale = (b / a).sqrt();
    let z = if m >= 0.0 {
        standard_gig(m, omega, rng)
    } else {
        1.0 / standard_gig(-m, omega, rng)
    };
    Ok(scale * z)
}

/// Exact log density including the Bessel normalizer. Requires `a, b > 0`.
pub fn gig_log_density(x: f64, params: GigParams) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("GIG density needs x > 0, got {x}")));
    }
    let GigParams { m, a, b } = params;
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::domain("GIG normalizer requires a > 0 and b > 0"));
    }
    let log_norm = 0.5 * m * (a / b).ln() - std::f64::consts::LN_2 - ln_bessel_k(m, (a * b).sqrt());
    Ok(log_norm + (m - 1.0) * x.ln() - 0.5 * (a * x + b / x))
}

fn gamma_draw<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    // Parameters are validated upstream.
    Gamma::new(shape, scale).expect("valid gamma parameters").sample(rng)
}

fn mode(lambda: f64, omega: f64) -> f64 {
    if lambda >= 1.0 {
        (((lambda - 1.0).powi(2) + omega * omega).sqrt() + (lambda - 1.0)) / omega
    } else {
        omega / (((1.0 - lambda).powi(2) + omega * omega).sqrt() + (1.0 - lambda))
    }
}

/// Density proportional to `x^(lambda-1) exp(-omega/2 (x + 1/x))`, `lambda >= 0`.
fn standard_gig<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    if lambda > 2.0 || omega > 3.0 {
        rou_shift(lambda, omega, rng)
    } else if lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2 {
        rou_noshift(lambda, omega, rng)
    } else {
        piecewise_hat(lambda, omega, rng)
    }
}

fn rou_noshift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let ym = ((lambda + 1.0) + ((lambda + 1.0).powi(2) + omega * omega).sqrt()) / omega;
    let um = (0.5 * (lambda + 1.0) * ym.ln() - s * (ym + 1.0 / ym) - nc).exp();
    loop {
        let u = um * rng.random::<f64>();
        let v: f64 = rng.random();
        let x = u / v;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

fn rou_shift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);

    // Roots of the cubic bounding the shifted ROU region.
    let a = -(2.0 * (lambda + 1.0) / omega + xm);
    let b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
    let c = xm;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let fi = (-q / (2.0 * (-(p * p * p) / 27.0).sqrt())).clamp(-1.0, 1.0).acos();
    let fak = 2.0 * (-p / 3.0).sqrt();
    let y1 = fak * (fi / 3.0).cos() - a / 3.0;
    let y2 = fak * (fi / 3.0 + 4.0 / 3.0 * std::f64::consts::PI).cos() - a / 3.0;
    let uplus = (y1 - xm) * (t * y1.ln() - s * (y1 + 1.0 / y1) - nc).exp();
    let uminus = (y2 - xm) * (t * y2.ln() - s * (y2 + 1.0 / y2) - nc).exp();

    loop {
        let u = uminus + rng.random::<f64>() * (uplus - uminus);
        let v: f64 = rng.random();
        let x = u / v + xm;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

/// Rejection from a three-piece hat; valid for `0 <= lambda < 1` and small omega.
fn piecewise_hat<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let xm = mode(lambda, omega);
    let x0 = omega / (1.0 - lambda);
    let k0 = ((lambda - 1.0) * xm.ln() - 0.5 * omega * (xm + 1.0 / xm)).exp();
    let a0 = k0 * x0;
    let (k1, a1, k2, a2);
    if x0 >= 2.0 / omega {
        k1 = 0.0;
        a1 = 0.0;
        k2 = x0.powf(lambda - 1.0);
        a2 = k2 * 2.0 * (-omega * x0 / 2.0).exp() / omega;
    } else {
        k1 = (-omega).exp();
        a1 = if lambda == 0.0 {
            k1 * (2.0 / (omega * omega)).ln()
        } else {
            k1 / lambda * ((2.0 / omega).powf(lambda) - x0.powf(lambda))
        };
        k2 = (2.0 / omega).powf(lambda - 1.0);
        a2 = k2 * 2.0 * (-1.0f64).exp() / omega;
    }
    let total = a0 + a1 + a2;

    loop {
        let mut v = total * rng.random::<f64>();
        let (x, hx);
        if v <= a0 {
            x = x0 * v / a0;
            hx = k0;
        } else {
            v -= a0;
            if v <= a1 {
                if lambda == 0.0 {
                    x = omega * (omega.exp() * v).exp();
                    hx = k1 / x;
                } else {
                    x = (x0.powf(lambda) + lambda / k1 * v).powf(1.0 / lambda);
                    hx = k1 * x.powf(lambda - 1.0);
                }
            } else {
                v -= a1;
                let lo = x0.max(2.0 / omega);
                x = -2.0 / omega * ((-omega / 2.0 * lo).exp() - omega / (2.0 * k2) * v).ln();
                hx = k2 * (-omega / 2.0 * x).exp();
            }
        }
        if !(x > 0.0) || !x.is_finite() {
            continue;
        }
        let u = rng.random::<f64>() * hx;
        if u.ln() <= (lambda - 1.0) * x.ln() - omega / 2.0 * (x + 1.0 / x) {
            return x;
        }
    }
}
