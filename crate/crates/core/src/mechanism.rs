//! Domain types shared by every algorithm: gain vectors, their Gaussian
//! local randomizer, and the argmax/gap primitives.
//!
//! Every random draw in the crate is keyed by a [`RoundSeed`], i.e. by
//! `(master_seed, round, stream)`. Replaying a run with the same master
//! seed reproduces it exactly, and two streams with different ids never
//! share randomness, which is what lets the simulations pair algorithms on
//! identical noise.

use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// A gain vector in `[0, 1]^n`, `n >= 2`. This is the sensitive data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainVector(Vec<f64>);

impl GainVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid(format!(
                "a gain vector needs at least 2 experts, got {}",
                values.len()
            )));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("gain {v} at expert {i} is outside [0, 1]")));
        }
        Ok(GainVector(values))
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A gain vector after local randomization. Only these ever reach the
/// learning algorithms.
///
/// `noise_scale` is zero only for the unperturbed (μ = ∞) configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyGainVector {
    pub values: Vec<f64>,
    pub noise_scale: f64,
}

impl NoisyGainVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Gaussian-DP level, sensitivity and the noise scale that realizes them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub mu: f64,
    pub sensitivity: f64,
    pub eta: f64,
}

impl PrivacyParams {
    /// Builds parameters for `n` experts, checking `eta >= sensitivity / mu`
    /// and `sensitivity <= sqrt(n)`.
    pub fn new(mu: f64, sensitivity: f64, eta: f64, n: usize) -> Result<Self> {
        if !(mu > 0.0) || !(sensitivity > 0.0) || !(eta > 0.0) {
            return Err(Error::invalid("mu, sensitivity and eta must all be positive"));
        }
        if sensitivity > (n as f64).sqrt() * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "sensitivity {sensitivity} exceeds sqrt(n) = {}",
                (n as f64).sqrt()
            )));
        }
        if eta < sensitivity / mu * (1.0 - 1e-12) {
            return Err(Error::invalid(format!(
                "eta {eta} is below sensitivity / mu = {}; the local mechanism would not be {mu}-GDP",
                sensitivity / mu
            )));
        }
        Ok(PrivacyParams { mu, sensitivity, eta })
    }

    /// The GDP level actually delivered by `eta`.
    pub fn effective_mu(&self) -> f64 {
        self.sensitivity / self.eta
    }
}

/// Running sum of noisy gains, including any initial perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeEstimate {
    pub values: Vec<f64>,
    /// Number of noisy gain vectors absorbed.
    pub t: u64,
}

impl CumulativeEstimate {
    pub fn new(values: Vec<f64>) -> Self {
        CumulativeEstimate { values, t: 0 }
    }

    pub fn absorb(&mut self, g: &NoisyGainVector) -> Result<()> {
        check_dims(self.values.len(), g.len())?;
        for (s, x) in self.values.iter_mut().zip(&g.values) {
            *s += x;
        }
        self.t += 1;
        Ok(())
    }

    pub fn leader(&self) -> usize {
        argmax_tiebreak(&self.values).expect("estimate is never empty")
    }

    pub fn gap(&self) -> f64 {
        gap(&self.values).expect("estimate has at least two entries")
    }
}

pub(crate) fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::invalid(format!(
            "dimension mismatch: expected {expected} entries, got {got}"
        )));
    }
    Ok(())
}

/// Identifies an independent random stream within a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamId(pub u64);

impl StreamId {
    /// Derives an id from a label and an index (typically the run number).
    pub fn new(label: &str, index: u64) -> Self {
        // FNV-1a over the label, then mixed with the index.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in label.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        StreamId(splitmix64(h ^ splitmix64(index)))
    }
}

/// Key for all randomness consumed in one round of one stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundSeed {
    pub master_seed: u64,
    pub round: u64,
    pub stream: StreamId,
}

impl RoundSeed {
    pub fn new(master_seed: u64, round: u64, stream: StreamId) -> Self {
        RoundSeed {
            master_seed,
            round,
            stream,
        }
    }

    /// A fresh generator positioned at the start of this round's stream.
    ///
    /// The ChaCha key is derived from `(master_seed, stream)`; the round
    /// selects the ChaCha stream, so rounds are independent counters under
    /// one key.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut key = [0u8; 32];
        let words = [
            splitmix64(self.master_seed ^ 0x5851_f42d_4c95_7f2d),
            splitmix64(self.stream.0 ^ 0x1405_7b7e_f767_814f),
            splitmix64(self.master_seed.wrapping_add(self.stream.0.rotate_left(17))),
            splitmix64(self.stream.0.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ self.master_seed),
        ];
        for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        let mut rng = ChaCha12Rng::from_seed(key);
        rng.set_stream(self.round);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax_tiebreak(v: &[f64]) -> Result<usize> {
    if v.is_empty() {
        return Err(Error::invalid("argmax of an empty vector"));
    }
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Largest entry minus second largest.
pub fn gap(v: &[f64]) -> Result<f64> {
    if v.len() < 2 {
        return Err(Error::invalid(format!("gap needs at least 2 entries, got {}", v.len())));
    }
    let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &x in v {
        if x > first {
            second = first;
            first = x;
        } else if x > second {
            second = x;
        }
    }
    Ok(first - second)
}

/// `n` i.i.d. draws from N(0, eta²).
pub fn gaussian_vector(n: usize, eta: f64, seed: RoundSeed) -> Vec<f64> {
    let mut rng = seed.rng();
    (0..n)
        .map(|_| eta * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// The local randomizer: adds i.i.d. N(0, eta²) noise to every coordinate.
pub fn gaussian_perturb(g: &GainVector, eta: f64, seed: RoundSeed) -> Result<NoisyGainVector> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::invalid(format!("noise scale must be positive and finite, got {eta}")));
    }
    let noise = gaussian_vector(g.len(), eta, seed);
    Ok(NoisyGainVector {
        values: g.values().iter().zip(noise).map(|(x, z)| x + z).collect(),
        noise_scale: eta,
    })
}

/// Noise scale for a target GDP level: `sensitivity / mu`, or
/// `max(sqrt(2), sensitivity / mu)` when tuning for worst-case regret.
pub fn default_eta(mu: f64, sensitivity: f64, worst_case: bool) -> Result<f64> {
    if !(mu > 0.0) || !(sensitivity > 0.0) {
        return Err(Error::invalid("mu and sensitivity must be positive"));
    }
    let eta = sensitivity / mu;
    Ok(if worst_case { eta.max(std::f64::consts::SQRT_2) } else { eta })
}

/// The per-run source of noisy gains.
///
/// All algorithms that are driven by the same `(master_seed, run)` see the
/// same initial perturbation and the same noisy gain vectors, so their
/// regrets can be compared run by run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseStream {
    pub master_seed: u64,
    pub run: u64,
    pub eta: f64,
}

impl NoiseStream {
    pub fn new(master_seed: u64, run: u64, eta: f64) -> Self {
        NoiseStream { master_seed, run, eta }
    }

    /// An independent noise source for the same run, keyed by `label`.
    pub fn fork(&self, label: &str, eta: f64) -> NoiseStream {
        NoiseStream {
            master_seed: splitmix64(self.master_seed ^ StreamId::new(label, 0).0),
            run: self.run,
            eta,
        }
    }

    /// Seed for the initial perturbation (round 0).
    pub fn init_seed(&self) -> RoundSeed {
        RoundSeed::new(self.master_seed, 0, StreamId::new("init", self.run))
    }

    pub fn round_seed(&self, round: u64) -> RoundSeed {
        RoundSeed::new(self.master_seed, round, StreamId::new("gain-noise", self.run))
    }

    /// Seed for an auxiliary stream of this run (e.g. RW-Meta's selection noise).
    pub fn aux_seed(&self, label: &str, round: u64) -> RoundSeed {
        RoundSeed::new(self.master_seed, round, StreamId::new(label, self.run))
    }

    /// The noisy version of `g` released in `round`. With `eta == 0` the
    /// gains pass through untouched.
    pub fn perturb(&self, round: u64, g: &GainVector) -> NoisyGainVector {
        if self.eta == 0.0 {
            return NoisyGainVector {
                values: g.values().to_vec(),
                noise_scale: 0.0,
            };
        }
        gaussian_perturb(g, self.eta, self.round_seed(round)).expect("eta validated at construction")
    }
}
