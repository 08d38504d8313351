//! Standard normal distribution helpers.
//!
//! The quantile uses Acklam's rational approximation (relative error below
//! 1.2e-9 over the open unit interval) followed by one Newton step against
//! the complementary error function, which brings the absolute error well
//! under 1e-10 for every probability representable as a normal `f64`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// `ln(2π)`.
pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

const ACKLAM_A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const ACKLAM_B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const ACKLAM_C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const ACKLAM_D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];
const ACKLAM_P_LOW: f64 = 0.02425;

/// Standard normal density.
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Natural log of the standard normal density.
pub fn ln_pdf(x: f64) -> f64 {
    -0.5 * x * x - 0.5 * LN_2PI
}

/// `P(Z <= x)`.
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `P(Z >= x)`, accurate in the upper tail.
pub fn sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Two-sided tail probability `2 min(Φ(x), 1 − Φ(x))`.
pub fn two_sided_p(x: f64) -> f64 {
    // erfc(|x|/√2) equals both tails summed and is symmetric by construction.
    libm::erfc(x.abs() * FRAC_1_SQRT_2).min(1.0)
}

fn acklam_lower(p: f64) -> f64 {
    if p < ACKLAM_P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        let c = &ACKLAM_C;
        let d = &ACKLAM_D;
        (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
            / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        let a = &ACKLAM_A;
        let b = &ACKLAM_B;
        (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    }
}

/// Inverse of [`cdf`] for `p` in the open unit interval.
///
/// Returns `-inf`/`+inf` at 0 and 1, and NaN outside `[0, 1]`.
pub fn quantile(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    if p > 0.5 {
        return -lower_quantile(1.0 - p);
    }
    lower_quantile(p)
}

/// `Φ⁻¹(1 − q)` computed from the upper-tail mass `q` without forming `1 − q`.
pub fn upper_quantile(q: f64) -> f64 {
    -quantile(q)
}

fn lower_quantile(p: f64) -> f64 {
    let x = acklam_lower(p);
    let density = pdf(x);
    if density == 0.0 {
        return x;
    }
    x - (cdf(x) - p) / density
}

#[cfg(test)]
mod tests {
    use super::*;

    // Bisection on erfc, independent of the rational approximation.
    fn bisect_quantile(p: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn quantile_matches_bisection() {
        for &p in &[
            1e-300, 1e-100, 1e-20, 1e-8, 1e-4, 0.01, 0.02425, 0.025, 0.1, 0.3, 0.5, 0.7, 0.975,
            0.999,
        ] {
            let q = quantile(p);
            let b = bisect_quantile(p);
            assert!((q - b).abs() < 1e-10, "p={p}: {q} vs {b}");
        }
    }

    #[test]
    fn known_values() {
        assert!((quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        assert_eq!(quantile(0.5), 0.0);
        assert!((ln_pdf(0.0) + 0.918_938_533_204_672_7).abs() < 1e-15);
        assert!((two_sided_p(1.959_963_984_540_054) - 0.05).abs() < 1e-14);
        assert_eq!(two_sided_p(0.0), 1.0);
    }

    #[test]
    fn edge_probabilities() {
        assert_eq!(quantile(0.0), f64::NEG_INFINITY);
        assert_eq!(quantile(1.0), f64::INFINITY);
        assert!(quantile(1.5).is_nan());
        assert!((upper_quantile(0.025) - 1.959_963_984_540_054).abs() < 1e-12);
    }
}
