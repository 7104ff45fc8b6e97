//! Tradeoff curves, batch-size distributions and the Gaussian mixture
//! bound that links them.

use crate::numerics::{norm_cdf, norm_quantile};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub alpha: f64,
    pub beta: f64,
}

/// A sampled tradeoff function: false-positive rate → smallest achievable
/// false-negative rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCurve {
    pub points: Vec<TradeoffPoint>,
    pub label: String,
}

impl TradeoffCurve {
    /// Sorts by alpha and keeps the smallest beta among equal alphas.
    pub fn from_points(mut points: Vec<TradeoffPoint>, label: impl Into<String>) -> Result<Self> {
        if points.iter().any(|p| !p.alpha.is_finite() || !p.beta.is_finite()) {
            return Err(Error::invalid("tradeoff points must be finite"));
        }
        points.sort_by(|a, b| a.alpha.total_cmp(&b.alpha).then(a.beta.total_cmp(&b.beta)));
        points.dedup_by(|later, earlier| later.alpha == earlier.alpha);
        Ok(TradeoffCurve {
            points,
            label: label.into(),
        })
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.alpha).collect()
    }

    /// Piecewise-linear interpolation; `None` outside the sampled range.
    pub fn beta_at(&self, alpha: f64) -> Option<f64> {
        let pts = &self.points;
        let first = pts.first()?;
        let last = pts.last()?;
        if alpha < first.alpha || alpha > last.alpha {
            return None;
        }
        let i = pts.partition_point(|p| p.alpha < alpha);
        if pts[i].alpha == alpha {
            return Some(pts[i].beta);
        }
        let (a, b) = (pts[i - 1], pts[i]);
        let w = (alpha - a.alpha) / (b.alpha - a.alpha);
        Some(a.beta + w * (b.beta - a.beta))
    }

    /// Checks the tradeoff-function invariants: alpha strictly increasing
    /// within [0, 1], beta in [0, 1] and nonincreasing, and nondecreasing
    /// slopes (convexity), each up to `tol`.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let pts = &self.points;
        if pts.len() < 2 {
            return Err(Error::invalid("a tradeoff curve needs at least two points"));
        }
        for p in pts {
            if !(-tol..=1.0 + tol).contains(&p.alpha) || !(-tol..=1.0 + tol).contains(&p.beta) {
                return Err(Error::invalid(format!("point ({}, {}) outside the unit square", p.alpha, p.beta)));
            }
        }
        for w in pts.windows(2) {
            if !(w[1].alpha > w[0].alpha) {
                return Err(Error::invalid(format!("alpha not strictly increasing at {}", w[1].alpha)));
            }
            if w[1].beta > w[0].beta + tol {
                return Err(Error::invalid(format!("beta increases at alpha = {}", w[1].alpha)));
            }
        }
        // Convexity in the form (β₁ − β₀)(α₂ − α₁) ≤ (β₂ − β₁)(α₁ − α₀),
        // which avoids dividing by tiny alpha steps.
        for w in pts.windows(3) {
            let lhs = (w[1].beta - w[0].beta) * (w[2].alpha - w[1].alpha);
            let rhs = (w[2].beta - w[1].beta) * (w[1].alpha - w[0].alpha);
            if lhs > rhs + tol * (w[2].alpha - w[0].alpha) {
                return Err(Error::invalid(format!("curve is not convex near alpha = {}", w[1].alpha)));
            }
        }
        Ok(())
    }

    /// CSV with header `alpha,beta`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,beta\n");
        for p in &self.points {
            out.push_str(&format!("{:e},{:e}\n", p.alpha, p.beta));
        }
        out
    }
}

/// α grid used for curves evaluated at fixed false-positive rates: 0, a
/// log-spaced stretch from 1e-15 to 1e-2, and a linear stretch up to 1.
pub fn default_alpha_grid() -> Vec<f64> {
    let mut grid = vec![0.0];
    let log_points = 261;
    for i in 0..log_points {
        grid.push(10f64.powf(-15.0 + 13.0 * i as f64 / (log_points - 1) as f64));
    }
    let lin_points = 991;
    for i in 1..lin_points {
        grid.push(0.01 + 0.99 * i as f64 / (lin_points - 1) as f64);
    }
    *grid.last_mut().unwrap() = 1.0;
    grid
}

/// `Φ(Φ⁻¹(1 − α) − μ)`, written as `Φ(−Φ⁻¹(α) − μ)` to keep precision at
/// small α.
pub fn gaussian_beta(mu: f64, alpha: f64) -> f64 {
    if alpha <= 0.0 {
        return 1.0;
    }
    if alpha >= 1.0 {
        return 0.0;
    }
    norm_cdf(-norm_quantile(alpha) - mu)
}

/// The μ-GDP tradeoff curve on [`default_alpha_grid`].
pub fn gaussian_tradeoff(mu: f64) -> Result<TradeoffCurve> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(Error::invalid(format!("mu must be finite and non-negative, got {mu}")));
    }
    let points = default_alpha_grid()
        .into_iter()
        .map(|alpha| TradeoffPoint {
            alpha,
            beta: gaussian_beta(mu, alpha),
        })
        .collect();
    TradeoffCurve::from_points(points, format!("gaussian(mu={mu})"))
}

/// Probability mass over batch sizes `1..=b_max`; `weights[b − 1]` is the
/// mass of size `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSizeDistribution {
    weights: Vec<f64>,
}

impl BatchSizeDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("batch-size distribution needs at least one size"));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("batch-size weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("batch-size weights sum to {total}, not 1")));
        }
        Ok(BatchSizeDistribution { weights })
    }

    pub fn point_mass(b: usize, b_max: usize) -> Result<Self> {
        if b == 0 || b > b_max {
            return Err(Error::invalid(format!("point mass at {b} outside 1..={b_max}")));
        }
        let mut w = vec![0.0; b_max];
        w[b - 1] = 1.0;
        Self::new(w)
    }

    /// Normalized counts; sizes above `b_max` are folded into `b_max`.
    pub fn from_counts(counts: &BTreeMap<u64, u64>, b_max: usize) -> Result<Self> {
        let total: u64 = counts.values().sum();
        if total == 0 || b_max == 0 {
            return Err(Error::invalid("cannot normalize an empty batch-size count"));
        }
        let mut w = vec![0.0; b_max];
        for (&b, &c) in counts {
            if b == 0 {
                return Err(Error::invalid("batch size 0 in counts"));
            }
            w[(b as usize).min(b_max) - 1] += c as f64;
        }
        for x in &mut w {
            *x /= total as f64;
        }
        let s: f64 = w.iter().sum();
        // Put the rounding residue on the largest entry.
        let imax = w.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap();
        w[imax] += 1.0 - s;
        Self::new(w)
    }

    pub fn b_max(&self) -> usize {
        self.weights.len()
    }

    /// Mass of batch size `b` (0 outside the support).
    pub fn weight(&self, b: usize) -> f64 {
        if b == 0 {
            0.0
        } else {
            self.weights.get(b - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(b, w_b)` for every size with positive mass.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights.iter().enumerate().filter(|(_, w)| **w > 0.0).map(|(i, w)| (i + 1, *w))
    }

    /// `P[size > b]`.
    pub fn survival(&self, b: usize) -> f64 {
        self.weights.iter().skip(b).sum::<f64>().clamp(0.0, 1.0)
    }

    pub fn mean(&self) -> f64 {
        self.support().map(|(b, w)| b as f64 * w).sum()
    }

    /// JSON object mapping each supported size to its weight.
    pub fn to_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> =
            self.support().map(|(b, w)| (b.to_string(), serde_json::json!(w))).collect();
        serde_json::Value::Object(map)
    }
}

/// The tradeoff function of a batch-size mixture: each batch size `b`
/// contributes a Gaussian test at level `μ/√b`, weighted by `w_b`.
///
/// At a common likelihood-ratio threshold `t` the component error rates are
/// `α_b(t) = Φ(−t√b/μ − μ/(2√b))` and `β_b(t) = Φ(t√b/μ − μ/(2√b))`.
#[derive(Debug, Clone)]
pub struct MixtureTradeoff {
    mu: f64,
    // (√b / μ, μ / (2√b), w_b)
    components: Vec<(f64, f64, f64)>,
}

impl MixtureTradeoff {
    pub fn new(dist: &BatchSizeDistribution, mu: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::invalid(format!("mu must be positive and finite, got {mu}")));
        }
        let components = dist
            .support()
            .map(|(b, w)| {
                let rb = (b as f64).sqrt();
                (rb / mu, mu / (2.0 * rb), w)
            })
            .collect();
        Ok(MixtureTradeoff { mu, components })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn alpha(&self, t: f64) -> f64 {
        self.components.iter().map(|&(s, c, w)| w * norm_cdf(-t * s - c)).sum()
    }

    pub fn beta(&self, t: f64) -> f64 {
        self.components.iter().map(|&(s, c, w)| w * norm_cdf(t * s - c)).sum()
    }

    /// Threshold range that carries every component's error rates out to
    /// the normal tail cutoff.
    pub fn threshold_span(&self) -> f64 {
        40f64.max(self.mu * (38.0 + self.mu / 2.0))
    }

    /// Exact β at a given α, by bisection on the threshold.
    pub fn beta_at(&self, alpha: f64) -> f64 {
        if alpha <= 0.0 {
            return 1.0;
        }
        if alpha >= 1.0 {
            return 0.0;
        }
        let mut span = self.threshold_span();
        while self.alpha(span) > alpha && span < 1e8 {
            span *= 2.0;
        }
        let (mut lo, mut hi) = (-span, span);
        while self.alpha(lo) < alpha && lo > -1e8 {
            lo *= 2.0;
        }
        // alpha(t) is decreasing: alpha(lo) ≥ target ≥ alpha(hi).
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.alpha(mid) > alpha {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (a_lo, a_hi) = (self.alpha(lo), self.alpha(hi));
        let (b_lo, b_hi) = (self.beta(lo), self.beta(hi));
        if a_lo == a_hi {
            return b_hi;
        }
        let w = (a_lo - alpha) / (a_lo - a_hi);
        b_lo + w * (b_hi - b_lo)
    }

    /// `δ(ε) = 1 − e^ε α(ε) − β(ε)` at the optimal threshold `t = ε`.
    pub fn delta(&self, eps: f64) -> f64 {
        let mut delta = 0.0;
        for &(s, c, w) in &self.components {
            let a = norm_cdf(-eps * s - c);
            let one_minus_b = norm_cdf(-eps * s + c);
            let scaled = if a == 0.0 { 0.0 } else { (eps + a.ln()).exp() };
            delta += w * (one_minus_b - scaled);
        }
        delta.clamp(0.0, 1.0)
    }

    /// The curve sampled at 2001 thresholds, denser near 0, plus the two
    /// corner points.
    pub fn curve(&self, label: impl Into<String>) -> Result<TradeoffCurve> {
        let span = self.threshold_span();
        let count = 2001;
        let mut points = Vec::with_capacity(count + 2);
        points.push(TradeoffPoint { alpha: 0.0, beta: 1.0 });
        for i in 0..count {
            let u = -1.0 + 2.0 * i as f64 / (count - 1) as f64;
            let t = span * u.signum() * (1.0 - (0.5 * PI * u.abs()).cos());
            points.push(TradeoffPoint {
                alpha: self.alpha(t),
                beta: self.beta(t),
            });
        }
        points.push(TradeoffPoint { alpha: 1.0, beta: 0.0 });
        TradeoffCurve::from_points(points, label)
    }
}

/// The tradeoff curve of the batch-size mixture `dist` at base level `mu`.
pub fn amplified_tradeoff(dist: &BatchSizeDistribution, mu: f64) -> Result<TradeoffCurve> {
    MixtureTradeoff::new(dist, mu)?.curve(format!("amplified(mu={mu})"))
}

/// The δ for which the mixture is (ε, δ)-DP.
pub fn to_approx_dp(dist: &BatchSizeDistribution, mu: f64, eps: f64) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(Error::invalid(format!("epsilon must be non-negative, got {eps}")));
    }
    Ok(MixtureTradeoff::new(dist, mu)?.delta(eps))
}
