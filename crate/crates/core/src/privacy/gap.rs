//! Law of the gap between the two largest of `n` i.i.d. centred Gaussians.

use crate::numerics::quad::{integrate, QuadOptions};
use crate::numerics::{norm_cdf, norm_pdf};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapLawParams {
    pub n: usize,
    /// Standard deviation of each coordinate.
    pub scale: f64,
}

impl GapLawParams {
    pub fn new(n: usize, scale: f64) -> Result<Self> {
        let p = GapLawParams { n, scale };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 || !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::invalid(format!("gap law needs n >= 2 and scale > 0, got {self:?}")));
        }
        Ok(())
    }
}

/// Integration window in the unit-scale variable; the integrands are below
/// 1e-22 outside it.
const X_LO: f64 = -10.0;
const X_HI: f64 = 10.0;

fn quad_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        max_intervals: 4000,
    }
}

fn pow_cdf(x: f64, k: i32) -> f64 {
    if k == 0 {
        1.0
    } else {
        norm_cdf(x).powi(k)
    }
}

/// Unit-scale CDF, computed as `n∫φ(x)[Φ(x)^{n−1} − Φ(x−ε)^{n−1}]dx`, which
/// equals `1 − n∫φ(x)Φ(x−ε)^{n−1}dx` without the cancellation.
pub fn unit_gap_cdf(eps: f64, n: usize) -> Result<f64> {
    if eps <= 0.0 {
        return Ok(0.0);
    }
    let k = n as i32 - 1;
    let r = integrate(
        |x| norm_pdf(x) * (pow_cdf(x, k) - pow_cdf(x - eps, k)),
        X_LO,
        X_HI + eps,
        quad_opts(),
    )?;
    Ok((n as f64 * r.value).clamp(0.0, 1.0))
}

/// Unit-scale density `n(n−1)∫φ(x)φ(x−ε)Φ(x−ε)^{n−2}dx`.
pub fn unit_gap_pdf(eps: f64, n: usize) -> Result<f64> {
    if eps < 0.0 {
        return Ok(0.0);
    }
    let k = n as i32 - 2;
    let r = integrate(
        |x| norm_pdf(x) * norm_pdf(x - eps) * pow_cdf(x - eps, k),
        X_LO,
        X_HI + eps,
        quad_opts(),
    )?;
    Ok((n * (n - 1)) as f64 * r.value)
}

/// Unit-scale derivative of the density.
pub fn unit_gap_pdf_derivative(eps: f64, n: usize) -> Result<f64> {
    if eps < 0.0 {
        return Ok(0.0);
    }
    let k = n as i32 - 2;
    let r = integrate(
        |x| {
            let y = x - eps;
            let py = norm_pdf(y);
            let mut v = y * py * pow_cdf(y, k);
            if k >= 1 {
                v -= k as f64 * py * py * pow_cdf(y, k - 1);
            }
            norm_pdf(x) * v
        },
        X_LO,
        X_HI + eps,
        quad_opts(),
    )?;
    Ok((n * (n - 1)) as f64 * r.value)
}

/// `P[gap ≤ eps]` for `n` i.i.d. N(0, scale²) coordinates.
pub fn gap_cdf(eps: f64, params: &GapLawParams) -> Result<f64> {
    params.validate()?;
    if !(eps >= 0.0) {
        return Err(Error::invalid(format!("gap must be non-negative, got {eps}")));
    }
    unit_gap_cdf(eps / params.scale, params.n)
}

/// Density of the gap for `n` i.i.d. N(0, scale²) coordinates.
pub fn gap_pdf(eps: f64, params: &GapLawParams) -> Result<f64> {
    params.validate()?;
    if !(eps >= 0.0) {
        return Err(Error::invalid(format!("gap must be non-negative, got {eps}")));
    }
    Ok(unit_gap_pdf(eps / params.scale, params.n)? / params.scale)
}

/// Unit-scale gap law tabulated on `[0, GAP_TABLE_MAX]` and interpolated
/// with cubic Hermite polynomials, for inner loops that need many
/// evaluations at the same `n`.
#[derive(Debug, Clone)]
pub struct GapTable {
    n: usize,
    cdf: Vec<f64>,
    pdf: Vec<f64>,
    dpdf: Vec<f64>,
}

/// Upper end of the tabulated range; the unit-scale gap exceeds it with
/// probability below 1e-40 for every `n`.
pub const GAP_TABLE_MAX: f64 = 15.0;
const GAP_TABLE_STEP: f64 = 0.01;

impl GapTable {
    pub fn new(n: usize) -> Result<Self> {
        GapLawParams::new(n, 1.0)?;
        let count = (GAP_TABLE_MAX / GAP_TABLE_STEP).round() as usize + 1;
        let mut cdf = Vec::with_capacity(count);
        let mut pdf = Vec::with_capacity(count);
        let mut dpdf = Vec::with_capacity(count);
        for i in 0..count {
            let u = i as f64 * GAP_TABLE_STEP;
            cdf.push(unit_gap_cdf(u, n)?);
            pdf.push(unit_gap_pdf(u, n)?);
            dpdf.push(unit_gap_pdf_derivative(u, n)?);
        }
        Ok(GapTable { n, cdf, pdf, dpdf })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn hermite(values: &[f64], slopes: &[f64], u: f64) -> f64 {
        let pos = u / GAP_TABLE_STEP;
        let i = (pos.floor() as usize).min(values.len() - 2);
        let s = pos - i as f64;
        let (s2, s3) = (s * s, s * s * s);
        let h = GAP_TABLE_STEP;
        (2.0 * s3 - 3.0 * s2 + 1.0) * values[i]
            + (s3 - 2.0 * s2 + s) * h * slopes[i]
            + (-2.0 * s3 + 3.0 * s2) * values[i + 1]
            + (s3 - s2) * h * slopes[i + 1]
    }

    /// Unit-scale CDF.
    pub fn cdf(&self, u: f64) -> f64 {
        if u <= 0.0 {
            0.0
        } else if u >= GAP_TABLE_MAX {
            1.0
        } else {
            Self::hermite(&self.cdf, &self.pdf, u).clamp(0.0, 1.0)
        }
    }

    /// Unit-scale density.
    pub fn pdf(&self, u: f64) -> f64 {
        if !(0.0..GAP_TABLE_MAX).contains(&u) {
            0.0
        } else {
            Self::hermite(&self.pdf, &self.dpdf, u).max(0.0)
        }
    }
}
