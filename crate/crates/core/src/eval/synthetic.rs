//! Piecewise-stationary gain streams whose best expert rotates.

use crate::mechanism::{RoundSeed, StreamId};
use crate::stream::GainStream;
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Each round every expert gains `base + U(−jitter, jitter)`, and the
/// regime's best expert gains `advantage` on top, clamped to [0, 1]. The
/// best expert of regime `r` is `perm[r mod n]` for a seeded permutation,
/// so consecutive regimes always have different leaders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub horizon: usize,
    pub regime_length: usize,
    pub advantage: f64,
    pub base: f64,
    pub jitter: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(n: usize, horizon: usize, regime_length: usize, seed: u64) -> Self {
        SyntheticSpec {
            n,
            horizon,
            regime_length,
            advantage: 0.3,
            base: 0.3,
            jitter: 0.1,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 || self.horizon == 0 || self.regime_length == 0 {
            return Err(Error::invalid(format!(
                "synthetic stream needs n >= 2, T >= 1 and regime length >= 1; got {self:?}"
            )));
        }
        if !(self.jitter >= 0.0) || !(self.advantage >= 0.0) || !self.base.is_finite() {
            return Err(Error::invalid("synthetic stream parameters must be finite and non-negative"));
        }
        Ok(())
    }

    /// Best expert of each regime, in order.
    pub fn regime_leaders(&self) -> Result<Vec<usize>> {
        self.validate()?;
        let mut perm: Vec<usize> = (0..self.n).collect();
        perm.shuffle(&mut RoundSeed::new(self.seed, 0, StreamId::new("synthetic-leaders", 0)).rng());
        let regimes = self.horizon.div_ceil(self.regime_length);
        Ok((0..regimes).map(|r| perm[r % self.n]).collect())
    }

    pub fn generate(&self) -> Result<GainStream> {
        let leaders = self.regime_leaders()?;
        let rows = (0..self.horizon)
            .map(|t| {
                let mut rng = RoundSeed::new(self.seed, t as u64, StreamId::new("synthetic-gains", 0)).rng();
                let best = leaders[t / self.regime_length];
                (0..self.n)
                    .map(|i| {
                        let noise = if self.jitter > 0.0 {
                            rng.random_range(-self.jitter..self.jitter)
                        } else {
                            0.0
                        };
                        let bonus = if i == best { self.advantage } else { 0.0 };
                        (self.base + noise + bonus).clamp(0.0, 1.0)
                    })
                    .collect()
            })
            .collect();
        GainStream::from_rows(rows)
    }
}

pub fn synthetic_drift_stream(n: usize, horizon: usize, regime_length: usize, seed: u64) -> Result<GainStream> {
    SyntheticSpec::new(n, horizon, regime_length, seed).generate()
}
