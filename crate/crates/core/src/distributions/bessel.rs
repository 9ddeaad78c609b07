//! Logarithm of the modified Bessel function of the second kind.

/// `ln K_nu(z)` for real order `nu` and `z > 0`.
///
/// Uses `K_nu(z) = int_0^inf exp(-z cosh t) cosh(nu t) dt` evaluated by the
/// trapezoid rule in log space. The integrand is analytic and decays
/// double-exponentially, so the rule converges geometrically in the step.
pub fn ln_bessel_k(nu: f64, z: f64) -> f64 {
    assert!(z > 0.0, "ln_bessel_k requires z > 0");
    let nu = nu.abs();
    // exp(-z) factored out: exponent is -z (cosh t - 1) + ln cosh(nu t).
    let log_integrand = |t: f64| {
        let c = if t < 1e-4 {
            // cosh t - 1 without cancellation
            0.5 * t * t * (1.0 + t * t / 12.0)
        } else {
            t.cosh() - 1.0
        };
        let nt = nu * t;
        let ln_cosh = nt + (-2.0 * nt).exp().ln_1p() - std::f64::consts::LN_2;
        -z * c + ln_cosh
    };

    // Peak location, then extend the range until the tail is negligible.
    let mut upper: f64 = 1.0;
    let mut peak = log_integrand(0.0);
    loop {
        let v = log_integrand(upper);
        peak = peak.max(v);
        let slope_down = log_integrand(upper * 1.01) < v;
        if v < peak - 60.0 && slope_down {
            break;
        }
        upper *= 2.0;
        if upper > 1e4 {
            break;
        }
    }

    let steps = 8000usize;
    let h = upper / steps as f64;
    let values: Vec<f64> = (0..=steps).map(|k| log_integrand(k as f64 * h)).collect();
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut acc = 0.0;
    for (k, v) in values.iter().enumerate() {
        let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
        acc += w * (v - max).exp();
    }
    -z + max + (acc * h).ln()
}
