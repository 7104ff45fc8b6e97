//! The learner zoo: rolling ridge regressions on the time index, RW-FTPL
//! run as a learner, and constant vertices.

use crate::mechanism::{argmax_tiebreak, gaussian_vector, RoundSeed};
use crate::rwmeta::{vertex, ConstantVertex, Learner, NoisyHistory};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularization {
    Weak,
    Medium,
    Strong,
}

impl Regularization {
    /// Ridge penalty per unit of window length.
    pub fn strength(self) -> f64 {
        match self {
            Regularization::Weak => 0.1,
            Regularization::Medium => 1.0,
            Regularization::Strong => 10.0,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Regularization::Weak => "weak",
            Regularization::Medium => "medium",
            Regularization::Strong => "strong",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerSpec {
    RollingRegression { window: usize, regularization: Regularization },
    FtplBaseline,
    ConstantVertex { vertex: usize },
}

impl LearnerSpec {
    pub fn id(&self) -> String {
        match self {
            LearnerSpec::RollingRegression { window, regularization } => {
                format!("regression_w{window}_{}", regularization.label())
            }
            LearnerSpec::FtplBaseline => "rw_ftpl".to_string(),
            LearnerSpec::ConstantVertex { vertex } => format!("constant_{vertex}"),
        }
    }

    /// Instantiates the learner for `n` experts. The FTPL learner draws its
    /// initial perturbation of scale `eta` from `seed`.
    pub fn build(&self, n: usize, eta: f64, seed: RoundSeed) -> Result<Box<dyn Learner>> {
        Ok(match *self {
            LearnerSpec::RollingRegression { .. } => rolling_regression_learner(self)?,
            LearnerSpec::FtplBaseline => Box::new(FtplLearner::new(n, eta, seed)?),
            LearnerSpec::ConstantVertex { vertex } => {
                if vertex >= n {
                    return Err(Error::invalid(format!("constant vertex {vertex} out of range for n = {n}")));
                }
                Box::new(ConstantVertex::new(vertex))
            }
        })
    }
}

impl std::str::FromStr for LearnerSpec {
    type Err = Error;

    /// Parses the labels produced by [`LearnerSpec::id`].
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("unknown learner {s:?}"));
        if s == "rw_ftpl" {
            return Ok(LearnerSpec::FtplBaseline);
        }
        if let Some(v) = s.strip_prefix("constant_") {
            return Ok(LearnerSpec::ConstantVertex {
                vertex: v.parse().map_err(|_| bad())?,
            });
        }
        let rest = s.strip_prefix("regression_w").ok_or_else(bad)?;
        let (window, reg) = rest.split_once('_').ok_or_else(bad)?;
        let regularization = match reg {
            "weak" => Regularization::Weak,
            "medium" => Regularization::Medium,
            "strong" => Regularization::Strong,
            _ => return Err(bad()),
        };
        Ok(LearnerSpec::RollingRegression {
            window: window.parse().map_err(|_| bad())?,
            regularization,
        })
    }
}

/// Windows 8/16/32/64 crossed with weak/medium/strong ridge penalties,
/// followed by RW-FTPL: 13 learners.
pub fn default_zoo() -> Vec<LearnerSpec> {
    let mut specs = Vec::new();
    for window in [8, 16, 32, 64] {
        for regularization in [Regularization::Weak, Regularization::Medium, Regularization::Strong] {
            specs.push(LearnerSpec::RollingRegression { window, regularization });
        }
    }
    specs.push(LearnerSpec::FtplBaseline);
    specs
}

pub fn build_learners(specs: &[LearnerSpec], n: usize, eta: f64, seed: RoundSeed) -> Result<Vec<Box<dyn Learner>>> {
    specs.iter().map(|s| s.build(n, eta, seed)).collect()
}

/// Per expert, a ridge-penalized linear trend on the last `window` noisy
/// gains; plays the vertex with the largest one-step-ahead forecast.
#[derive(Debug, Clone)]
pub struct RollingRegression {
    pub window: usize,
    /// Ridge penalty on the slope.
    pub lambda: f64,
    id: String,
}

impl RollingRegression {
    pub fn new(window: usize, lambda: f64, id: impl Into<String>) -> Result<Self> {
        if window < 2 {
            return Err(Error::invalid(format!("regression window must be at least 2, got {window}")));
        }
        if !(lambda >= 0.0) {
            return Err(Error::invalid(format!("ridge penalty must be non-negative, got {lambda}")));
        }
        Ok(RollingRegression {
            window,
            lambda,
            id: id.into(),
        })
    }

    /// One-step-ahead forecasts for every expert; `None` with fewer than two
    /// rounds of history.
    pub fn forecast(&self, history: &NoisyHistory) -> Option<Vec<f64>> {
        let end = history.len();
        if end < 2 {
            return None;
        }
        let start = end.saturating_sub(self.window);
        let len = (end - start) as f64;
        // With x_s = s − (len − 1)/2 centred on the window:
        // Σx² = len(len² − 1)/12, Σxy = Σ s y − (len − 1)/2 · Σy.
        let sxx = len * (len * len - 1.0) / 12.0;
        let center = 0.5 * (len - 1.0);
        let ahead = len - center;
        let (sum, moment) = history.window_sums(start, end);
        Some(
            sum.iter()
                .zip(&moment)
                .map(|(sy, sxy)| {
                    let slope = (sxy - center * sy) / (sxx + self.lambda);
                    sy / len + slope * ahead
                })
                .collect(),
        )
    }
}

impl Learner for RollingRegression {
    fn id(&self) -> &str {
        &self.id
    }

    fn predict(&self, n: usize, history: &NoisyHistory) -> Vec<f64> {
        match self.forecast(history) {
            Some(f) => vertex(n, argmax_tiebreak(&f).expect("n >= 1")),
            None => vertex(n, 0),
        }
    }
}

pub fn rolling_regression_learner(spec: &LearnerSpec) -> Result<Box<dyn Learner>> {
    match *spec {
        LearnerSpec::RollingRegression { window, regularization } => Ok(Box::new(RollingRegression::new(
            window,
            regularization.strength() * window as f64,
            spec.id(),
        )?)),
        _ => Err(Error::invalid(format!("{} is not a rolling-regression spec", spec.id()))),
    }
}

/// RW-FTPL as a learner: the leader of a fixed initial perturbation plus
/// the noisy cumulative gains.
#[derive(Debug, Clone)]
pub struct FtplLearner {
    initial: Vec<f64>,
}

impl FtplLearner {
    /// `eta = 0` gives plain follow-the-leader on the noisy gains.
    pub fn new(n: usize, eta: f64, seed: RoundSeed) -> Result<Self> {
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::invalid(format!("noise scale must be finite and non-negative, got {eta}")));
        }
        let initial = if eta > 0.0 { gaussian_vector(n, eta, seed) } else { vec![0.0; n] };
        Ok(FtplLearner { initial })
    }
}

impl Learner for FtplLearner {
    fn id(&self) -> &str {
        "rw_ftpl"
    }

    fn predict(&self, n: usize, history: &NoisyHistory) -> Vec<f64> {
        let cum = history.cumulative();
        let score: Vec<f64> = if cum.is_empty() {
            self.initial.clone()
        } else {
            self.initial.iter().zip(cum).map(|(a, b)| a + b).collect()
        };
        vertex(n, argmax_tiebreak(&score).expect("n >= 1"))
    }
}
