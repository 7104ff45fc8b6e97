//! Standard normal density, distribution and quantile functions.
//!
//! Everything goes through libm's complementary error function so that
//! both tails keep full relative precision. Arguments beyond |x| = 38 are
//! short-circuited: the tail mass there is below the smallest normal f64.

use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{PI, SQRT_2};

/// Arguments past this magnitude return exactly 0 or 1 from [`norm_cdf`].
pub const TAIL_CUTOFF: f64 = 38.0;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density φ(x).
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF Φ(x).
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    if x < -TAIL_CUTOFF {
        0.0
    } else if x > TAIL_CUTOFF {
        1.0
    } else {
        0.5 * erfc(-x / SQRT_2)
    }
}

/// Upper tail 1 − Φ(x), accurate for large positive x.
#[inline]
pub fn norm_sf(x: f64) -> f64 {
    norm_cdf(-x)
}

/// Standard normal quantile Φ⁻¹(p).
///
/// The inverse-erfc estimate is only good to about 1e-11, so it is
/// polished with two Halley steps against [`norm_cdf`].
pub fn norm_quantile(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    if p > 0.5 {
        // Work in the lower tail where p carries full precision.
        return -norm_quantile_lower(1.0 - p);
    }
    norm_quantile_lower(p)
}

fn norm_quantile_lower(p: f64) -> f64 {
    let mut x = -SQRT_2 * erfc_inv(2.0 * p);
    for _ in 0..2 {
        let d = norm_pdf(x);
        if !(d > 0.0) || !x.is_finite() {
            break;
        }
        let e = (norm_cdf(x) - p) / d;
        x -= e / (1.0 + 0.5 * x * e);
    }
    x
}

/// √π, used by the leader-change bound.
pub const SQRT_PI: f64 = 1.772_453_850_905_516;

/// √(2π)
pub fn sqrt_two_pi() -> f64 {
    (2.0 * PI).sqrt()
}
