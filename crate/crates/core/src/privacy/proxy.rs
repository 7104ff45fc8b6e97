//! A batch-size distribution that is stochastically smaller than the size
//! of the batch containing a given round, whatever the data.
//!
//! For round `t` and `B ≥ 0`, let κ be the smallest gap at which a flush
//! would choose a delay above `B + 1`. If the gap is at least κ at every
//! flush in the `B + 1` rounds before `t`, round `t` lands in a batch of
//! size above `B + 1`. The gap at round `t − B − 1` is stochastically
//! smallest when every gain is zero, and over the following `B` rounds it
//! can shrink by at most `B` through the gains plus a Gaussian walk whose
//! excursions are controlled by the stability bound. Integrating over the
//! starting gap lower-bounds `P[size > B + 1]`.

use super::gap::{GapTable, GAP_TABLE_MAX};
use super::tradeoff::BatchSizeDistribution;
use crate::adabatch::{compute_delay, stability_bound, StabilityQuery};
use crate::numerics::quad::{integrate, QuadOptions};
use crate::numerics::root::bisect_predicate;
use crate::{Error, Result};
use rayon::prelude::*;

/// Largest gap tried by [`batch_threshold`] before giving up.
pub const THRESHOLD_SEARCH_CAP: f64 = 1e12;

/// Default truncation point of proxy distributions.
pub const DEFAULT_B_MAX: usize = 4096;

/// Smallest gap κ with `compute_delay(κ, eta, n, alpha, t) > b + 1`, to
/// within a relative step of 1e-10. `None` when no gap below
/// [`THRESHOLD_SEARCH_CAP`] gets there.
pub fn batch_threshold(t: u64, b: u64, eta: f64, n: usize, alpha: f64) -> Result<Option<f64>> {
    let target = b + 1;
    let exceeds = |k: f64| compute_delay(k, eta, n, alpha, t).map(|d| d > target);
    if exceeds(0.0)? {
        return Ok(Some(0.0));
    }
    let mut hi = (b as f64 + 2.0).max(1.0);
    while !exceeds(hi)? {
        if hi >= THRESHOLD_SEARCH_CAP {
            return Ok(None);
        }
        hi = (hi * 2.0).min(THRESHOLD_SEARCH_CAP);
    }
    let step = 1e-10 * hi;
    let mut failure = None;
    let kappa = bisect_predicate(
        |k| match exceeds(k) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                true
            }
        },
        0.0,
        hi,
        step,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(Some(kappa)),
    }
}

/// Lower bound on `P[size of the batch containing t > b + 1]`.
fn survival_lower_bound(
    table: &GapTable,
    t: u64,
    b: u64,
    eta: f64,
    n: usize,
    alpha: f64,
) -> Result<f64> {
    if t < b + 2 {
        return Ok(0.0);
    }
    let start = t - b - 1;
    let kappa = match batch_threshold(t - 1, b, eta, n, alpha)? {
        Some(k) => k,
        None => return Ok(0.0),
    };
    // Per-coordinate noise of the cumulative estimate after `start` rounds
    // plus the initial perturbation.
    let sigma = eta * ((start + 1) as f64).sqrt();
    let u_min = kappa / sigma;
    if u_min >= GAP_TABLE_MAX {
        return Ok(0.0);
    }
    if b == 0 {
        return Ok(1.0 - table.cdf(u_min));
    }
    let margin = crate::adabatch::union_margin(n);
    let floor = kappa + b as f64;
    // Below this starting gap the stability bound is vacuous.
    let u_lo = ((floor + eta * (2.0 * b as f64).sqrt() * margin) / sigma).max(u_min);
    if u_lo >= GAP_TABLE_MAX {
        return Ok(0.0);
    }
    let mut failure = None;
    let r = integrate(
        |u| {
            let q = StabilityQuery {
                k: sigma * u,
                kappa: floor,
                eta,
                b,
                n,
            };
            match stability_bound(&q) {
                Ok(s) => table.pdf(u) * (1.0 - s),
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        u_lo,
        GAP_TABLE_MAX,
        QuadOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_intervals: 2000,
        },
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r.value.clamp(0.0, 1.0))
}

fn validate(t: u64, eta: f64, n: usize, alpha: f64, b_max: usize) -> Result<()> {
    if t == 0 || !(eta > 0.0) || n < 2 || !(alpha > 0.0) || b_max == 0 {
        return Err(Error::invalid(format!(
            "proxy distribution needs t >= 1, eta > 0, n >= 2, alpha > 0, B_max >= 1; got t={t}, eta={eta}, n={n}, alpha={alpha}, B_max={b_max}"
        )));
    }
    Ok(())
}

/// The proxy containing-batch-size distribution for round `t`.
///
/// `L(B)` lower-bounds `P[size > B + 1]`; the proxy survival function at
/// `b` is the largest `L(b' − 1)` over `b' ≥ b`, so it is nonincreasing and
/// still a lower bound. Mass beyond `b_max` is folded into `b_max`.
pub fn proxy_batch_distribution(t: u64, eta: f64, n: usize, alpha: f64, b_max: usize) -> Result<BatchSizeDistribution> {
    validate(t, eta, n, alpha, b_max)?;
    let table = GapTable::new(n)?;
    proxy_batch_distribution_with_table(&table, t, eta, alpha, b_max)
}

/// [`proxy_batch_distribution`] reusing a gap table built for the same `n`.
pub fn proxy_batch_distribution_with_table(
    table: &GapTable,
    t: u64,
    eta: f64,
    alpha: f64,
    b_max: usize,
) -> Result<BatchSizeDistribution> {
    let n = table.n();
    validate(t, eta, n, alpha, b_max)?;
    if b_max == 1 {
        return BatchSizeDistribution::new(vec![1.0]);
    }
    let lower: Vec<f64> = (0..(b_max - 1) as u64)
        .into_par_iter()
        .map(|b| survival_lower_bound(table, t, b, eta, n, alpha))
        .collect::<Result<_>>()?;

    // survival[b] = P[size > b] for b = 1..b_max-1, from L(b − 1).
    let mut survival = vec![0.0; b_max];
    let mut running = 0.0f64;
    for b in (1..b_max).rev() {
        running = running.max(lower[b - 1]);
        survival[b] = running;
    }
    survival[0] = 1.0;

    let mut weights = vec![0.0; b_max];
    for b in 1..b_max {
        weights[b - 1] = survival[b - 1] - survival[b];
    }
    weights[b_max - 1] = survival[b_max - 1];
    let total: f64 = weights.iter().sum();
    weights[0] += 1.0 - total;
    BatchSizeDistribution::new(weights)
}

/// Rough amplification ratio at the `gamma` quantile of the containing
/// batch size: `γ²πt / (√(2 ln(2n−2)) + √(2 ln(1/α) + ln(t / ln n)))²`.
/// Heuristic only; never used for accounting.
pub fn heuristic_amplification(t: u64, n: usize, alpha: f64, gamma: f64) -> Result<f64> {
    if t < 2 || n < 2 || !(alpha > 0.0) || !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid("heuristic needs t >= 2, n >= 2, alpha > 0 and 0 < gamma < 1"));
    }
    let tf = t as f64;
    let nf = n as f64;
    let inner = 2.0 * (1.0 / alpha).ln() + (tf / nf.ln()).ln();
    if inner < 0.0 {
        return Err(Error::invalid("heuristic is undefined for these parameters"));
    }
    let denom = (2.0 * (2.0 * nf - 2.0).ln()).sqrt() + inner.sqrt();
    Ok(gamma * gamma * std::f64::consts::PI * tf / (denom * denom))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_zero_when_already_exceeded() {
        // Huge alpha makes the tolerance trivially satisfied.
        let d0 = compute_delay(0.0, 1.0, 2, 1e6, 1).unwrap();
        assert!(d0 > 3);
        assert_eq!(batch_threshold(1, 1, 1.0, 2, 1e6).unwrap(), Some(0.0));
    }

    #[test]
    fn threshold_is_tight() {
        let (t, b, eta, n, alpha) = (500, 10, 5.0, 25, 0.01);
        let k = batch_threshold(t, b, eta, n, alpha).unwrap().unwrap();
        let step = 1e-9 * k;
        assert!(compute_delay(k + step, eta, n, alpha, t).unwrap() > b + 1);
        assert!(compute_delay(k - step, eta, n, alpha, t).unwrap() <= b + 1);
    }

    #[test]
    fn tiny_alpha_puts_all_mass_on_one() {
        let d = proxy_batch_distribution(100, 1.0, 2, 1e-300, 64).unwrap();
        assert!(d.weight(1) > 1.0 - 1e-6);
    }

    #[test]
    fn heuristic_values() {
        let r = heuristic_amplification(10_000, 25, 0.01, 0.9).unwrap();
        let d = (2.0 * 48f64.ln()).sqrt() + (2.0 * 100f64.ln() + (1e4 / 25f64.ln()).ln()).sqrt();
        assert!((r - 0.81 * std::f64::consts::PI * 1e4 / (d * d)).abs() < 1e-9);
        assert!(heuristic_amplification(100, 2, 0.01, 1e-9).unwrap() < 1e-12);
    }
}
