//! The evaluation pipeline: RW-Meta over a learner zoo, the naive
//! budget-split baseline, every individual learner and the best static
//! action, on a panel dataset or a synthetic drifting stream.

mod dataset;
mod learners;
mod synthetic;

pub use dataset::{ingest_csv, panel_from_stream, parse_panel, PanelDataset};
pub use learners::{
    build_learners, default_zoo, rolling_regression_learner, FtplLearner, LearnerSpec, Regularization,
    RollingRegression,
};
pub use synthetic::{synthetic_drift_stream, SyntheticSpec};

use crate::mechanism::{gaussian_perturb, GainVector, NoiseStream, NoisyGainVector};
use crate::numerics::stats::{bonferroni_z, Summary};
use crate::rwmeta::{evaluate_learners, meta_init, Learner, NoisyHistory};
use crate::stream::GainStream;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Bed count behind the synthetic stream's sensitivity, `√2 / 10`.
pub const SYNTHETIC_MIN_BEDS: f64 = 10.0;

/// Per-learner GDP level when a budget `mu` is split evenly over `m`
/// learners by Gaussian composition.
pub fn naive_budget_split(m: usize, mu: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::invalid("budget split needs at least one learner"));
    }
    if !(mu > 0.0) {
        return Err(Error::invalid(format!("privacy level must be positive, got {mu}")));
    }
    Ok(mu / (m as f64).sqrt())
}

/// A GDP level; `inf` means no privacy (no noise).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct PrivacyLevel(f64);

impl PrivacyLevel {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::invalid(format!("privacy level must be positive, got {mu}")));
        }
        Ok(PrivacyLevel(mu))
    }

    pub const INFINITE: PrivacyLevel = PrivacyLevel(f64::INFINITY);

    pub fn mu(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// The four levels of the hospital evaluation: ∞, 1, 0.5, 0.25.
    pub fn standard() -> Vec<PrivacyLevel> {
        vec![PrivacyLevel::INFINITE, PrivacyLevel(1.0), PrivacyLevel(0.5), PrivacyLevel(0.25)]
    }
}

impl fmt::Display for PrivacyLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for PrivacyLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "Inf" | "∞" => Ok(PrivacyLevel::INFINITE),
            other => {
                let mu: f64 = other
                    .parse()
                    .map_err(|_| Error::invalid(format!("privacy level {other:?} is not a number or 'inf'")))?;
                PrivacyLevel::new(mu)
            }
        }
    }
}

impl From<PrivacyLevel> for String {
    fn from(p: PrivacyLevel) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for PrivacyLevel {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Gains plus the per-round sensitivity used to calibrate noise.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalData {
    pub gains: GainStream,
    pub sensitivity: Vec<f64>,
}

impl EvalData {
    pub fn new(gains: GainStream, sensitivity: Vec<f64>) -> Result<Self> {
        if sensitivity.len() != gains.len() {
            return Err(Error::invalid(format!(
                "{} sensitivities for {} rounds",
                sensitivity.len(),
                gains.len()
            )));
        }
        if sensitivity.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(Error::invalid("sensitivities must be positive and finite"));
        }
        Ok(EvalData { gains, sensitivity })
    }

    pub fn from_panel(panel: &PanelDataset) -> Result<Self> {
        EvalData::new(panel.gain_stream()?, panel.sensitivities())
    }

    /// A synthetic stream with the sensitivity of a 10-bed minimum.
    pub fn synthetic(spec: &SyntheticSpec) -> Result<Self> {
        let gains = spec.generate()?;
        let sensitivity = vec![std::f64::consts::SQRT_2 / SYNTHETIC_MIN_BEDS; gains.len()];
        EvalData::new(gains, sensitivity)
    }

    pub fn max_sensitivity(&self) -> f64 {
        self.sensitivity.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub levels: Vec<PrivacyLevel>,
    pub learners: Vec<LearnerSpec>,
    pub runs: usize,
    pub master_seed: u64,
    /// Family-wise confidence of the reported intervals.
    pub confidence: f64,
    /// Scale noise by each round's own sensitivity instead of the maximum.
    pub per_week_eta: bool,
    pub include_naive: bool,
}

impl EvalConfig {
    pub fn new(levels: Vec<PrivacyLevel>, learners: Vec<LearnerSpec>, runs: usize, master_seed: u64) -> Self {
        EvalConfig {
            levels,
            learners,
            runs,
            master_seed,
            confidence: 0.95,
            per_week_eta: false,
            include_naive: true,
        }
    }

    /// Column labels in table order.
    pub fn algorithms(&self) -> Vec<String> {
        let mut cols = vec!["rw_meta".to_string()];
        if self.include_naive {
            cols.push("naive_split".to_string());
        }
        cols.extend(self.learners.iter().map(LearnerSpec::id));
        cols.push("best_static_action".to_string());
        cols
    }

    fn validate(&self) -> Result<()> {
        if self.levels.is_empty() || self.learners.is_empty() || self.runs == 0 {
            return Err(Error::invalid("evaluation needs at least one level, one learner and one run"));
        }
        if let Some(l) = self.levels.iter().find(|l| !(l.mu() > 0.0)) {
            return Err(Error::invalid(format!("privacy level must be positive, got {l}")));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::invalid("confidence must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoSummary {
    pub algorithm: String,
    pub mean: f64,
    pub std_err: f64,
    /// Bonferroni-corrected half-width.
    pub ci_half_width: f64,
    pub per_run: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelResults {
    pub level: PrivacyLevel,
    /// Noise scale used on the shared stream (0 at `inf`).
    pub eta: f64,
    pub algorithms: Vec<AlgoSummary>,
    /// Individual learner with the highest mean gain.
    pub best_learner: String,
}

impl LevelResults {
    pub fn get(&self, algorithm: &str) -> Option<&AlgoSummary> {
        self.algorithms.iter().find(|a| a.algorithm == algorithm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResults {
    pub config: EvalConfig,
    pub horizon: usize,
    pub n: usize,
    pub comparisons: usize,
    pub z: f64,
    pub levels: Vec<LevelResults>,
}

impl EvalResults {
    /// One row per privacy level; `{algo}_mean` and `{algo}_ci` columns.
    pub fn to_csv(&self) -> String {
        let algos = self.config.algorithms();
        let mut out = String::from("privacy_level");
        for a in &algos {
            out.push_str(&format!(",{a}_mean,{a}_ci"));
        }
        out.push('\n');
        for level in &self.levels {
            out.push_str(&level.level.to_string());
            for a in &algos {
                let s = level.get(a).expect("every column is filled");
                out.push_str(&format!(",{},{}", s.mean, s.ci_half_width));
            }
            out.push('\n');
        }
        out
    }
}

/// True gain of a simplex action.
fn dot(x: &[f64], g: &GainVector) -> f64 {
    x.iter().zip(g.values()).map(|(a, b)| a * b).sum()
}

fn eta_for(level: PrivacyLevel, sensitivity: f64) -> f64 {
    if level.is_infinite() {
        0.0
    } else {
        sensitivity / level.mu()
    }
}

struct RunGains {
    meta: f64,
    naive: f64,
    learners: Vec<f64>,
}

/// Noisy release of round `round` on `stream`, at either the stream's fixed
/// scale or a per-round one.
fn release(stream: &NoiseStream, round: u64, g: &GainVector, eta_t: Option<f64>) -> NoisyGainVector {
    match eta_t {
        Some(eta) if eta > 0.0 => {
            gaussian_perturb(g, eta, stream.round_seed(round)).expect("positive finite noise scale")
        }
        Some(_) => NoisyGainVector {
            values: g.values().to_vec(),
            noise_scale: 0.0,
        },
        None => stream.perturb(round, g),
    }
}

fn run_once(data: &EvalData, cfg: &EvalConfig, level: PrivacyLevel, eta: f64, run: u64) -> Result<RunGains> {
    let n = data.gains.n();
    let m = cfg.learners.len();
    let noise = NoiseStream::new(cfg.master_seed, run, eta);
    let per_round = |t: usize, scale: f64| cfg.per_week_eta.then(|| eta_for(level, data.sensitivity[t]) * scale);

    // RW-Meta: every learner reads the same noisy stream.
    let learners = build_learners(&cfg.learners, n, eta, noise.init_seed())?;
    let mut meta = meta_init(m, eta, noise.aux_seed("meta-init", 0))?;
    let mut history = NoisyHistory::new();
    let mut meta_gain = 0.0;
    let mut learner_gains = vec![0.0; m];
    for (t, g) in data.gains.rows().iter().enumerate() {
        let round = t as u64 + 1;
        let noisy = release(&noise, round, g, per_round(t, 1.0));
        let eta_t = per_round(t, 1.0).unwrap_or(eta);
        let r = meta.step(&learners, &history, &noisy, eta_t, noise.aux_seed("meta-select", round))?;
        meta_gain += dot(&r.action, g);
        for (acc, x) in learner_gains.iter_mut().zip(&r.predictions) {
            *acc += dot(x, g);
        }
        history.push(&noisy)?;
    }

    // Naive split: each learner gets budget μ/√m and its own noisy stream.
    let mut naive_gain = 0.0;
    if cfg.include_naive {
        let scale = (m as f64).sqrt();
        let eta_naive = eta * scale;
        let streams: Vec<NoiseStream> = (0..m).map(|i| noise.fork(&format!("naive-{i}"), eta_naive)).collect();
        let naive_learners: Vec<Box<dyn Learner>> = cfg
            .learners
            .iter()
            .zip(&streams)
            .map(|(spec, s)| spec.build(n, eta_naive, s.init_seed()))
            .collect::<Result<_>>()?;
        let mut histories = vec![NoisyHistory::new(); m];
        let mut selector = meta_init(m, eta_naive, noise.aux_seed("naive-init", 0))?;
        for (t, g) in data.gains.rows().iter().enumerate() {
            let round = t as u64 + 1;
            let eta_t = per_round(t, scale).unwrap_or(eta_naive);
            let mut gains = Vec::with_capacity(m);
            let mut variances = Vec::with_capacity(m);
            let mut actions = Vec::with_capacity(m);
            for i in 0..m {
                let x = evaluate_learners(&naive_learners[i..=i], n, &histories[i])?.pop().expect("one learner");
                let noisy = release(&streams[i], round, g, per_round(t, scale));
                gains.push(x.iter().zip(&noisy.values).map(|(a, b)| a * b).sum());
                variances.push(eta_t * eta_t * x.iter().map(|v| v * v).sum::<f64>());
                histories[i].push(&noisy)?;
                actions.push(x);
            }
            let (chosen, _, _) = selector.select(noise.aux_seed("naive-select", round))?;
            naive_gain += dot(&actions[chosen], g);
            selector.absorb_independent(&gains, &variances)?;
        }
    }
    Ok(RunGains {
        meta: meta_gain,
        naive: naive_gain,
        learners: learner_gains,
    })
}

fn summarize(algorithm: String, per_run: Vec<f64>, z: f64) -> AlgoSummary {
    let s = Summary::of(&per_run);
    AlgoSummary {
        algorithm,
        mean: s.mean,
        std_err: s.std_err,
        ci_half_width: z * s.std_err,
        per_run,
    }
}

/// Mean total gain per algorithm and privacy level over `cfg.runs` runs,
/// with Bonferroni-corrected CLT intervals over all reported cells.
pub fn run_eval(data: &EvalData, cfg: &EvalConfig) -> Result<EvalResults> {
    cfg.validate()?;
    let algos = cfg.algorithms();
    let comparisons = cfg.levels.len() * algos.len();
    let z = bonferroni_z(cfg.confidence, comparisons);
    let best_static = data.gains.best_static().1;

    let mut levels = Vec::with_capacity(cfg.levels.len());
    for &level in &cfg.levels {
        let eta = eta_for(level, data.max_sensitivity());
        let runs: Vec<RunGains> = (0..cfg.runs as u64)
            .into_par_iter()
            .map(|run| run_once(data, cfg, level, eta, run))
            .collect::<Result<_>>()?;

        let mut algorithms = vec![summarize("rw_meta".into(), runs.iter().map(|r| r.meta).collect(), z)];
        if cfg.include_naive {
            algorithms.push(summarize("naive_split".into(), runs.iter().map(|r| r.naive).collect(), z));
        }
        for (i, spec) in cfg.learners.iter().enumerate() {
            algorithms.push(summarize(spec.id(), runs.iter().map(|r| r.learners[i]).collect(), z));
        }
        let best_learner = algorithms
            .iter()
            .filter(|a| a.algorithm != "rw_meta" && a.algorithm != "naive_split")
            .max_by(|a, b| a.mean.total_cmp(&b.mean))
            .map(|a| a.algorithm.clone())
            .expect("at least one learner");
        algorithms.push(summarize("best_static_action".into(), vec![best_static; cfg.runs], z));
        levels.push(LevelResults {
            level,
            eta,
            algorithms,
            best_learner,
        });
    }
    Ok(EvalResults {
        config: cfg.clone(),
        horizon: data.gains.len(),
        n: data.gains.n(),
        comparisons,
        z,
        levels,
    })
}
