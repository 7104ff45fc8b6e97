//! RW-AdaBatch: RW-FTPL that absorbs noisy gains in adaptively sized
//! batches, choosing each batch as long as the leader is unlikely to
//! change while it is being collected.

use crate::mechanism::{argmax_tiebreak, check_dims, gaussian_vector, CumulativeEstimate, NoisyGainVector, RoundSeed};
use crate::numerics::pchip::MonotoneCubic;
use crate::numerics::root::{find_root, RootOptions};
use crate::numerics::special::SQRT_PI;
use crate::numerics::{norm_cdf, norm_pdf};
use crate::rwftpl::ftpl_regret_bound;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;
use std::sync::Arc;

/// Upper bound on the probability that the leader of a Gaussian random
/// walk changes, as a function of the standardized margin β:
/// `2Φ(−√2β) + 2√π φ(β) [Φ(β) − Φ(−β)]`.
///
/// Decreasing in β, with `g(−β) = 2 − g(β)`; only values at β > 0 are
/// informative (`g(0) = 1`).
pub fn leader_change_bound(beta: f64) -> f64 {
    2.0 * norm_cdf(-SQRT_2 * beta) + 2.0 * SQRT_PI * norm_pdf(beta) * (norm_cdf(beta) - norm_cdf(-beta))
}

/// `√ln(2n − 2)`.
pub fn union_margin(n: usize) -> f64 {
    (2.0 * n as f64 - 2.0).ln().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityQuery {
    /// Current gap.
    pub k: f64,
    /// The gap must not dip below this value.
    pub kappa: f64,
    pub eta: f64,
    /// Walk length.
    pub b: u64,
    pub n: usize,
}

impl StabilityQuery {
    pub fn validate(&self) -> Result<()> {
        if !(self.k.is_finite() && self.kappa.is_finite() && self.eta.is_finite()) {
            return Err(Error::invalid("stability query fields must be finite"));
        }
        if self.k < 0.0 || self.kappa < 0.0 || !(self.eta > 0.0) || self.b == 0 || self.n < 2 {
            return Err(Error::invalid(format!(
                "stability query needs k, kappa >= 0, eta > 0, B >= 1, n >= 2; got {self:?}"
            )));
        }
        Ok(())
    }

    /// `(k − κ)/(η√(2B)) − √ln(2n−2)`.
    pub fn beta(&self) -> f64 {
        (self.k - self.kappa) / (self.eta * (2.0 * self.b as f64).sqrt()) - union_margin(self.n)
    }
}

/// Probability bound that, over a B-step Gaussian walk started from gap
/// `k`, the gap ever dips below `kappa`. Clamped to 1 where the bound is
/// vacuous.
pub fn stability_bound(q: &StabilityQuery) -> Result<f64> {
    q.validate()?;
    let beta = q.beta();
    if beta <= 0.0 {
        return Ok(1.0);
    }
    Ok(leader_change_bound(beta).min(1.0))
}

/// The margin used by the delay rule: the gap `k` shrinks by up to `B`
/// from the gains themselves before the noise is accounted for.
fn drift_beta(k: f64, eta: f64, b: f64, margin: f64) -> f64 {
    (k - b) / (eta * (2.0 * b).sqrt()) - margin
}

/// Tolerance schedule `α √(ln n / (t + B))`.
pub fn tolerance(alpha: f64, n: usize, t: u64, b: f64) -> f64 {
    alpha * ((n as f64).ln() / (t as f64 + b)).sqrt()
}

/// Headroom the root bracket gets above the current round index.
pub const DELAY_CAP_HEADROOM: f64 = 1e6;

fn validate_delay_args(k: f64, eta: f64, n: usize, alpha: f64, t: u64) -> Result<()> {
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::invalid(format!("gap must be finite and non-negative, got {k}")));
    }
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::invalid(format!("eta must be positive, got {eta}")));
    }
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 experts, got {n}")));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    if t == 0 {
        return Err(Error::invalid("round index t must be at least 1"));
    }
    Ok(())
}

/// Excess of the leader-change bound over the tolerance at batch length B,
/// with the bound supplied by the caller (direct or interpolated).
fn delay_excess(bound: &impl Fn(f64) -> f64, k: f64, eta: f64, n: usize, alpha: f64, t: u64, b: f64) -> f64 {
    bound(drift_beta(k, eta, b, union_margin(n))) - tolerance(alpha, n, t, b)
}

fn solve_delay(bound: impl Fn(f64) -> f64, k: f64, eta: f64, n: usize, alpha: f64, t: u64) -> Result<u64> {
    validate_delay_args(k, eta, n, alpha, t)?;
    let f = |b: f64| delay_excess(&bound, k, eta, n, alpha, t, b);
    if f(1.0) > 0.0 {
        return Ok(0);
    }
    let cap = (t as f64 + DELAY_CAP_HEADROOM).floor();
    if f(cap) <= 0.0 {
        return Ok(cap as u64);
    }
    let root = find_root(f, 1.0, cap, RootOptions::default())?;
    // The root is only known to ~1e-9 relative; settle the integer exactly.
    let mut b = root.floor().max(1.0);
    while b > 1.0 && f(b) > 0.0 {
        b -= 1.0;
    }
    while b + 1.0 <= cap && f(b + 1.0) <= 0.0 {
        b += 1.0;
    }
    Ok(b as u64)
}

/// The largest delay whose leader-change bound stays within the tolerance
/// schedule at round `t`: the floor of the root in B of
/// `g((k − B)/(η√(2B)) − √ln(2n−2)) − α√(ln n/(t+B))`, or 0 when that root
/// lies below 1.
pub fn compute_delay(k: f64, eta: f64, n: usize, alpha: f64, t: u64) -> Result<u64> {
    solve_delay(leader_change_bound, k, eta, n, alpha, t)
}

/// The left-hand side of the delay rule at batch length `b`, for checking
/// feasibility of a returned delay.
pub fn delay_rule_bound(k: f64, eta: f64, n: usize, b: f64) -> f64 {
    leader_change_bound(drift_beta(k, eta, b, union_margin(n)))
}

/// Margin range covered by [`BoundInverse`]. Below it the bound is within
/// 1e-14 of 2; above it the bound is below 1e-140.
pub const BOUND_TABLE_RANGE: (f64, f64) = (-8.0, 25.0);
const BOUND_TABLE_STEP: f64 = 0.025;

/// Precomputed monotone cubic interpolant of the leader-change bound, for
/// fast repeated delay queries at fixed `(eta, n, alpha)`.
///
/// The spline is fitted to `−ln g(β)`, which is smooth and increasing, and
/// exponentiated on evaluation.
#[derive(Debug, Clone)]
pub struct BoundInverse {
    pub eta: f64,
    pub n: usize,
    pub alpha: f64,
    spline: MonotoneCubic,
}

pub fn build_bound_inverse(eta: f64, n: usize, alpha: f64) -> Result<BoundInverse> {
    validate_delay_args(0.0, eta, n, alpha, 1)?;
    let (lo, hi) = BOUND_TABLE_RANGE;
    let count = ((hi - lo) / BOUND_TABLE_STEP).round() as usize;
    let xs: Vec<f64> = (0..=count).map(|i| lo + i as f64 * BOUND_TABLE_STEP).collect();
    let ys: Vec<f64> = xs.iter().map(|&b| -leader_change_bound(b).ln()).collect();
    Ok(BoundInverse {
        eta,
        n,
        alpha,
        spline: MonotoneCubic::new(xs, ys)?,
    })
}

impl BoundInverse {
    /// Knots as `(β, −ln g(β))` pairs.
    pub fn knots(&self) -> (&[f64], &[f64]) {
        self.spline.knots()
    }

    /// Interpolated leader-change bound g(β).
    pub fn bound(&self, beta: f64) -> f64 {
        (-self.spline.eval(beta)).exp()
    }

    /// [`compute_delay`] with the interpolated bound.
    pub fn compute_delay(&self, k: f64, t: u64) -> Result<u64> {
        solve_delay(|b| self.bound(b), k, self.eta, self.n, self.alpha, t)
    }
}

/// A flushed batch: its first round (1-based) and number of rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub start: u64,
    pub size: u64,
}

#[derive(Debug, Clone)]
pub struct AdaBatchState {
    /// Initial perturbation plus every flushed round.
    pub estimate: CumulativeEstimate,
    /// Rounds received since the last flush.
    pub buffer: Vec<NoisyGainVector>,
    /// Rounds left before the next flush.
    pub delay: u64,
    pub t: u64,
    pub alpha: f64,
    pub eta: f64,
    inverse: Option<Arc<BoundInverse>>,
}

pub fn adabatch_init(n: usize, eta: f64, alpha: f64, seed: RoundSeed) -> Result<AdaBatchState> {
    validate_delay_args(0.0, eta, n, alpha, 1)?;
    Ok(AdaBatchState {
        estimate: CumulativeEstimate::new(gaussian_vector(n, eta, seed)),
        buffer: Vec::new(),
        delay: 0,
        t: 0,
        alpha,
        eta,
        inverse: None,
    })
}

impl AdaBatchState {
    /// Routes delay queries through a precomputed interpolant. The table
    /// must have been built for this state's `(eta, n, alpha)`.
    pub fn with_bound_inverse(mut self, inverse: Arc<BoundInverse>) -> Result<Self> {
        if inverse.eta != self.eta || inverse.n != self.estimate.values.len() || inverse.alpha != self.alpha {
            return Err(Error::invalid("bound inverse was built for different (eta, n, alpha)"));
        }
        self.inverse = Some(inverse);
        Ok(self)
    }

    pub fn action(&self) -> usize {
        self.estimate.leader()
    }

    /// Size the batch currently being collected will have when flushed.
    pub fn pending_batch_size(&self) -> u64 {
        self.buffer.len() as u64 + self.delay + 1
    }

    /// In-place version of [`adabatch_step`].
    pub fn step(&mut self, g_noisy: &NoisyGainVector) -> Result<(usize, Option<BatchRecord>)> {
        let n = self.estimate.values.len();
        check_dims(n, g_noisy.len())?;
        let action = argmax_tiebreak(&self.estimate.values)?;
        self.t += 1;
        self.buffer.push(g_noisy.clone());
        if self.delay > 0 {
            self.delay -= 1;
            return Ok((action, None));
        }

        let size = self.buffer.len() as u64;
        let record = BatchRecord {
            start: self.t + 1 - size,
            size,
        };
        // Sorted per-coordinate sums make the flush exactly invariant to the
        // order of rounds inside the batch.
        let mut column = Vec::with_capacity(self.buffer.len());
        for i in 0..n {
            column.clear();
            column.extend(self.buffer.iter().map(|g| g.values[i]));
            column.sort_by(f64::total_cmp);
            let sum: f64 = column.iter().sum();
            self.estimate.values[i] += sum;
        }
        self.estimate.t += size;
        self.buffer.clear();

        let k = self.estimate.gap();
        self.delay = match &self.inverse {
            Some(inv) => inv.compute_delay(k, self.t)?,
            None => compute_delay(k, self.eta, n, self.alpha, self.t)?,
        };
        Ok((action, Some(record)))
    }
}

/// Plays the leader of the absorbed estimate, buffers `g_noisy`, and
/// flushes the buffer if the delay has run out.
pub fn adabatch_step(
    state: &AdaBatchState,
    g_noisy: &NoisyGainVector,
) -> Result<(usize, AdaBatchState, Option<BatchRecord>)> {
    let mut next = state.clone();
    let (action, record) = next.step(g_noisy)?;
    Ok((action, next, record))
}

/// `(1 + α/2)(η + 2/η)√(2 T ln n)`.
pub fn adabatch_regret_bound(eta: f64, horizon: u64, n: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::invalid("alpha must be positive"));
    }
    Ok((1.0 + alpha / 2.0) * ftpl_regret_bound(eta, horizon, n)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::special::norm_sf;
    use proptest::prelude::*;

    fn q(k: f64, kappa: f64, eta: f64, b: u64, n: usize) -> StabilityQuery {
        StabilityQuery { k, kappa, eta, b, n }
    }

    #[test]
    fn bound_at_zero_margin_is_one() {
        assert!((leader_change_bound(0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bound_reflection_identity() {
        for &b in &[0.1, 0.7, 1.9, 3.3] {
            assert!((leader_change_bound(-b) + leader_change_bound(b) - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn stability_vacuous_at_zero_gap() {
        for n in [2, 5, 25] {
            for b in [1, 8, 100] {
                assert_eq!(stability_bound(&q(0.0, 0.0, 1.0, b, n)).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn stability_formula_value() {
        let beta = 2.5 - 2f64.ln().sqrt();
        let expected = 2.0 * norm_sf(SQRT_2 * beta)
            + 2.0 * SQRT_PI * norm_pdf(beta) * (1.0 - 2.0 * norm_sf(beta));
        let got = stability_bound(&q(10.0, 0.0, 1.0, 8, 2)).unwrap();
        assert!((got - expected).abs() < 1e-15);
    }

    #[test]
    fn stability_tail() {
        // β = 10 for n = 2, η = 1, B = 1: k = √2 (10 + √ln 2).
        let k = SQRT_2 * (10.0 + 2f64.ln().sqrt());
        assert!(stability_bound(&q(k, 0.0, 1.0, 1, 2)).unwrap() < 1e-12);
    }

    #[test]
    fn zero_gap_gives_zero_delay() {
        assert_eq!(compute_delay(0.0, 1.0, 25, 0.01, 1).unwrap(), 0);
        assert_eq!(compute_delay(0.0, 5.0, 2, 0.5, 1000).unwrap(), 0);
    }

    #[test]
    fn delay_is_largest_feasible() {
        for &(k, eta, n, alpha, t) in &[
            (100.0, 1.0, 25, 0.01, 100u64),
            (40.0, 2.0, 5, 0.1, 10),
            (1e4, 5.0, 25, 0.01, 2000),
        ] {
            let b = compute_delay(k, eta, n, alpha, t).unwrap();
            assert!(b >= 1);
            let bf = b as f64;
            assert!(delay_rule_bound(k, eta, n, bf) <= tolerance(alpha, n, t, bf));
            assert!(delay_rule_bound(k, eta, n, bf + 1.0) > tolerance(alpha, n, t, bf + 1.0));
        }
    }

    #[test]
    fn delay_rejects_bad_input() {
        assert!(compute_delay(-1.0, 1.0, 2, 0.01, 1).is_err());
        assert!(compute_delay(1.0, 0.0, 2, 0.01, 1).is_err());
        assert!(compute_delay(1.0, 1.0, 1, 0.01, 1).is_err());
        assert!(compute_delay(1.0, 1.0, 2, 0.0, 1).is_err());
        assert!(compute_delay(1.0, 1.0, 2, 0.01, 0).is_err());
    }

    #[test]
    fn regret_bound_examples() {
        let base = ftpl_regret_bound(2.0, 100, 4.0).unwrap();
        assert!((adabatch_regret_bound(2.0, 100, 4.0, 0.01).unwrap() - 1.005 * base).abs() < 1e-12);
        assert!((adabatch_regret_bound(2.0, 100, 4.0, 1e-300).unwrap() - base).abs() < 1e-12);
        let v = adabatch_regret_bound(SQRT_2, 1, std::f64::consts::E, 2.0).unwrap();
        assert!((v - 8.0).abs() < 1e-12);
    }

    #[test]
    fn spline_hits_knots() {
        let inv = build_bound_inverse(1.0, 25, 0.01).unwrap();
        let (xs, ys) = inv.knots();
        for i in (0..xs.len()).step_by(37) {
            assert_eq!(inv.bound(xs[i]), (-ys[i]).exp());
        }
    }

    #[test]
    fn first_round_flushes_and_records() {
        let mut s = adabatch_init(2, 1e-9, 0.01, RoundSeed::new(1, 0, crate::mechanism::StreamId(1))).unwrap();
        s.estimate.values = vec![100.0, 0.0];
        let g = NoisyGainVector { values: vec![0.0, 0.0], noise_scale: 1.0 };
        let (a, rec) = s.step(&g).unwrap();
        assert_eq!(a, 0);
        assert_eq!(rec, Some(BatchRecord { start: 1, size: 1 }));
        assert!(s.delay > 0);
        assert_eq!(s.pending_batch_size(), s.delay + 1);
    }

    proptest! {
        #[test]
        fn bound_is_decreasing(a in -30.0f64..30.0, d in 1e-3f64..5.0) {
            prop_assert!(leader_change_bound(a + d) <= leader_change_bound(a) + 1e-15);
        }

        #[test]
        fn delay_monotone_in_gap(k in 0.0f64..500.0, dk in 0.0f64..200.0, t in 1u64..5000) {
            let lo = compute_delay(k, 1.0, 25, 0.01, t).unwrap();
            let hi = compute_delay(k + dk, 1.0, 25, 0.01, t).unwrap();
            prop_assert!(lo <= hi);
        }
    }
}
