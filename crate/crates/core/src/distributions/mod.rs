//! Random-variate generators for the full conditionals.

mod bessel;
mod gig;
mod mvn;

pub use bessel::ln_bessel_k;
pub use gig::{gig_log_density, sample_gig, GigParams};
pub use mvn::{cholesky_in_place, cholesky_with_jitter, sample_mvn, sample_mvn_canonical};

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};

/// Gamma draw with shape and *rate*.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0 && rate > 0.0) || !shape.is_finite() || !rate.is_finite() {
        return Err(Error::domain(format!("Gamma(shape={shape}, rate={rate})")));
    }
    let g = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::domain(e.to_string()))?;
    Ok(g.sample(rng))
}
