//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// `z` with `P(Z > z) = q`, by bisection on the complementary error function.
pub fn upper_quantile_bisect(q: f64) -> f64 {
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 0.5 * libm::erfc(mid * FRAC_1_SQRT_2) > q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Natural log of the standard normal density.
pub fn ln_phi(z: f64) -> f64 {
    -0.5 * z * z - 0.5 * (2.0 * PI).ln()
}

/// Log of the likelihood bound built by hand: rank `i` of `n` gets the
/// quantile at `i α / (2n)` and the bound is the product of endpoint densities.
pub fn brute_force_log_bound(sigmas: &[f64], alpha: f64) -> f64 {
    let n = sigmas.len();
    let mut total = 0.0;
    for i in 1..=n {
        let z = upper_quantile_bisect(i as f64 * alpha / n as f64 / 2.0);
        total += ln_phi(z);
    }
    total - sigmas.iter().map(|s| s.ln()).sum::<f64>()
}
