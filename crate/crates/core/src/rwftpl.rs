//! RW-FTPL: follow the leader of the noisy cumulative gains, starting from
//! a Gaussian perturbation of scale η.

use crate::mechanism::{argmax_tiebreak, check_dims, gaussian_vector, CumulativeEstimate, NoisyGainVector, RoundSeed};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FtplState {
    pub estimate: CumulativeEstimate,
    pub t: u64,
}

impl FtplState {
    /// A state with no initial perturbation (the η = 0 limit).
    pub fn unperturbed(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("need at least 2 experts, got {n}")));
        }
        Ok(FtplState {
            estimate: CumulativeEstimate::new(vec![0.0; n]),
            t: 0,
        })
    }

    /// The action for the coming round.
    pub fn action(&self) -> usize {
        self.estimate.leader()
    }

    /// In-place version of [`ftpl_step`].
    pub fn step(&mut self, g_noisy: &NoisyGainVector) -> Result<usize> {
        check_dims(self.estimate.values.len(), g_noisy.len())?;
        let action = argmax_tiebreak(&self.estimate.values)?;
        self.estimate.absorb(g_noisy)?;
        self.t += 1;
        Ok(action)
    }
}

pub fn ftpl_init(n: usize, eta: f64, seed: RoundSeed) -> Result<FtplState> {
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 experts, got {n}")));
    }
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::invalid(format!("noise scale must be positive and finite, got {eta}")));
    }
    Ok(FtplState {
        estimate: CumulativeEstimate::new(gaussian_vector(n, eta, seed)),
        t: 0,
    })
}

/// Plays the leader of `state`, then absorbs `g_noisy`.
pub fn ftpl_step(state: &FtplState, g_noisy: &NoisyGainVector) -> Result<(usize, FtplState)> {
    let mut next = state.clone();
    let action = next.step(g_noisy)?;
    Ok((action, next))
}

/// `(η + 2/η) √(2 T ln n)`.
pub fn ftpl_regret_bound(eta: f64, horizon: u64, n: f64) -> Result<f64> {
    if !(eta > 0.0) || horizon == 0 || !(n >= 2.0) {
        return Err(Error::invalid("regret bound needs eta > 0, T >= 1 and n >= 2"));
    }
    Ok((eta + 2.0 / eta) * (2.0 * horizon as f64 * n.ln()).sqrt())
}
