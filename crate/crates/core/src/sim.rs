//! Monte Carlo harness: single-run drivers with per-round logs, empirical
//! containing-batch-size PMFs, leader-change frequencies of Gaussian random
//! walks, and paired regret experiments.

use crate::adabatch::{
    adabatch_init, adabatch_regret_bound, build_bound_inverse, stability_bound, BatchRecord, BoundInverse,
    StabilityQuery,
};
use crate::eval::{build_learners, default_zoo, LearnerSpec, SyntheticSpec};
use crate::mechanism::{GainVector, NoiseStream, RoundSeed, StreamId};
use crate::numerics::stats::{wilson_interval, Summary};
use crate::privacy::{amplified_tradeoff, BatchSizeDistribution, TradeoffCurve};
use crate::rwftpl::{ftpl_init, ftpl_regret_bound};
use crate::rwmeta::{decorrelate, meta_init, meta_regret_bound, NoisyHistory};
use crate::stream::GainStream;
use crate::{Error, Result};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

/// Where a Monte Carlo study gets its gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StreamSource {
    AllZero,
    File { path: PathBuf },
    Synthetic { regime_length: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub runs: usize,
    pub horizon: usize,
    pub n: usize,
    pub eta: f64,
    pub alpha: f64,
    pub master_seed: u64,
    pub source: StreamSource,
    /// Share noise streams across algorithms run by run.
    pub paired: bool,
    /// Answer delay queries from the precomputed interpolant.
    pub use_spline: bool,
    /// Learner zoo for RW-Meta experiments.
    pub learners: Vec<LearnerSpec>,
}

impl McConfig {
    pub fn new(runs: usize, horizon: usize, n: usize, eta: f64, alpha: f64, master_seed: u64) -> Self {
        McConfig {
            runs,
            horizon,
            n,
            eta,
            alpha,
            master_seed,
            source: StreamSource::AllZero,
            paired: true,
            use_spline: false,
            learners: default_zoo(),
        }
    }

    pub fn with_source(mut self, source: StreamSource) -> Self {
        self.source = source;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 || self.horizon == 0 {
            return Err(Error::invalid("runs and horizon must be at least 1"));
        }
        if self.n < 2 {
            return Err(Error::invalid(format!("need at least 2 experts, got {}", self.n)));
        }
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::invalid(format!("noise scale must be finite and non-negative, got {}", self.eta)));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::invalid(format!("alpha must be positive, got {}", self.alpha)));
        }
        Ok(())
    }

    /// The first `horizon` rounds of the configured source.
    pub fn resolve_stream(&self) -> Result<GainStream> {
        self.validate()?;
        let stream = match &self.source {
            StreamSource::AllZero => return GainStream::zeros(self.n, self.horizon),
            StreamSource::File { path } => GainStream::read_csv(path)?,
            StreamSource::Synthetic { regime_length, seed } => {
                SyntheticSpec::new(self.n, self.horizon, *regime_length, *seed).generate()?
            }
        };
        self.check_stream(&stream)?;
        stream.truncated(self.horizon)
    }

    fn check_stream(&self, stream: &GainStream) -> Result<()> {
        if stream.n() != self.n {
            return Err(Error::invalid(format!("stream has {} experts, config says {}", stream.n(), self.n)));
        }
        if stream.len() < self.horizon {
            return Err(Error::invalid(format!(
                "stream has {} rounds, horizon is {}",
                stream.len(),
                self.horizon
            )));
        }
        Ok(())
    }

    fn noise(&self, run: u64, label: &str) -> NoiseStream {
        let base = NoiseStream::new(self.master_seed, run, self.eta);
        if self.paired {
            base
        } else {
            base.fork(label, self.eta)
        }
    }

    fn bound_inverse(&self) -> Result<Option<Arc<BoundInverse>>> {
        if self.use_spline {
            Ok(Some(Arc::new(build_bound_inverse(self.eta, self.n, self.alpha)?)))
        } else {
            Ok(None)
        }
    }
}

fn check_horizon(stream: &GainStream, horizon: usize) -> Result<()> {
    if stream.len() < horizon {
        return Err(Error::invalid(format!("stream has {} rounds, horizon is {horizon}", stream.len())));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionLogRow {
    pub round: u64,
    pub action: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FtplRun {
    pub log: Vec<ActionLogRow>,
    pub total_gain: f64,
    pub best_static: f64,
    pub regret: f64,
}

/// Drives RW-FTPL over `stream` with noise from `noise` (`noise.eta > 0`).
pub fn run_ftpl(stream: &GainStream, noise: &NoiseStream) -> Result<FtplRun> {
    let mut state = ftpl_init(stream.n(), noise.eta, noise.init_seed())?;
    let mut log = Vec::with_capacity(stream.len());
    let mut total = 0.0;
    for (t, g) in stream.rows().iter().enumerate() {
        let round = t as u64 + 1;
        let action = state.step(&noise.perturb(round, g))?;
        total += g.values()[action];
        log.push(ActionLogRow { round, action });
    }
    let best_static = stream.best_static().1;
    Ok(FtplRun {
        log,
        total_gain: total,
        best_static,
        regret: best_static - total,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBatchLogRow {
    pub round: u64,
    pub action: usize,
    /// Delay left after this round.
    pub delay_remaining: u64,
    pub flush: bool,
    /// Size of the batch this round belongs to.
    pub batch_size: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBatchRun {
    pub log: Vec<AdaBatchLogRow>,
    pub batches: Vec<BatchRecord>,
    pub total_gain: f64,
    pub best_static: f64,
    pub regret: f64,
}

impl AdaBatchRun {
    pub fn actions(&self) -> Vec<ActionLogRow> {
        self.log
            .iter()
            .map(|r| ActionLogRow {
                round: r.round,
                action: r.action,
            })
            .collect()
    }
}

/// Drives RW-AdaBatch over `stream`. Rounds still buffered at the end are
/// attributed the size their batch would have on flushing.
pub fn run_adabatch(
    stream: &GainStream,
    noise: &NoiseStream,
    alpha: f64,
    inverse: Option<Arc<BoundInverse>>,
) -> Result<AdaBatchRun> {
    let mut state = adabatch_init(stream.n(), noise.eta, alpha, noise.init_seed())?;
    if let Some(inv) = inverse {
        state = state.with_bound_inverse(inv)?;
    }
    let mut log: Vec<AdaBatchLogRow> = Vec::with_capacity(stream.len());
    let mut batches = Vec::new();
    let mut total = 0.0;
    for (t, g) in stream.rows().iter().enumerate() {
        let round = t as u64 + 1;
        let (action, record) = state.step(&noise.perturb(round, g))?;
        total += g.values()[action];
        log.push(AdaBatchLogRow {
            round,
            action,
            delay_remaining: state.delay,
            flush: record.is_some(),
            batch_size: 0,
        });
        if let Some(rec) = record {
            for row in &mut log[(rec.start - 1) as usize..] {
                row.batch_size = rec.size;
            }
            batches.push(rec);
        }
    }
    if !state.buffer.is_empty() {
        let pending = state.pending_batch_size();
        let start = log.len() - state.buffer.len();
        for row in &mut log[start..] {
            row.batch_size = pending;
        }
    }
    let best_static = stream.best_static().1;
    Ok(AdaBatchRun {
        log,
        batches,
        total_gain: total,
        best_static,
        regret: best_static - total,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaLogRow {
    pub round: u64,
    pub chosen: usize,
    pub sigma_sq: f64,
    pub lambda_max: f64,
    pub action_vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaRun {
    pub log: Vec<MetaLogRow>,
    pub total_gain: f64,
    pub learner_totals: Vec<f64>,
    pub best_static: f64,
    /// Best learner's total minus RW-Meta's.
    pub regret: f64,
    pub static_regret: f64,
    /// Smallest eigenvalue of σ²I − Σ* seen in any round, relative to σ².
    pub min_cov_eigenvalue: f64,
    pub bound: Option<f64>,
}

/// Drives RW-Meta over the learners in `specs`, all reading the one noisy
/// stream from `noise`.
pub fn run_meta(stream: &GainStream, noise: &NoiseStream, specs: &[LearnerSpec]) -> Result<MetaRun> {
    let n = stream.n();
    let eta = noise.eta;
    let learners = build_learners(specs, n, eta, noise.init_seed())?;
    let mut state = meta_init(learners.len(), eta, noise.aux_seed("meta-init", 0))?;
    let mut history = NoisyHistory::new();
    let mut log = Vec::with_capacity(stream.len());
    let mut total = 0.0;
    let mut learner_totals = vec![0.0; learners.len()];
    let mut min_eig = f64::INFINITY;
    for (t, g) in stream.rows().iter().enumerate() {
        let round = t as u64 + 1;
        let noisy = noise.perturb(round, g);
        let r = state.step(&learners, &history, &noisy, eta, noise.aux_seed("meta-select", round))?;
        total += dot(&r.action, g);
        for (acc, x) in learner_totals.iter_mut().zip(&r.predictions) {
            *acc += dot(x, g);
        }
        min_eig = min_eig.min(r.min_cov_eigenvalue / r.sigma_sq);
        history.push(&noisy)?;
        log.push(MetaLogRow {
            round,
            chosen: r.chosen,
            sigma_sq: r.sigma_sq,
            lambda_max: r.lambda_max,
            action_vector: r.action,
        });
    }
    let best_learner = learner_totals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let best_static = stream.best_static().1;
    let bound = if learners.len() >= 2 {
        Some(meta_regret_bound(&decorrelate(&state.sigma_mat)?, stream.len() as u64, learners.len())?)
    } else {
        None
    };
    Ok(MetaRun {
        log,
        total_gain: total,
        learner_totals,
        best_static,
        regret: best_learner - total,
        static_regret: best_static - total,
        min_cov_eigenvalue: min_eig,
        bound,
    })
}

fn dot(x: &[f64], g: &GainVector) -> f64 {
    x.iter().zip(g.values()).map(|(a, b)| a * b).sum()
}

/// Containing-batch-size counts per round over a set of runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalPmf {
    pub runs: u64,
    /// `rounds[t − 1]` maps batch size to the number of runs in which round
    /// `t` landed in a batch of that size.
    pub rounds: Vec<BTreeMap<u64, u64>>,
}

impl EmpiricalPmf {
    pub fn horizon(&self) -> usize {
        self.rounds.len()
    }

    pub fn round(&self, t: usize) -> Result<&BTreeMap<u64, u64>> {
        if t == 0 || t > self.rounds.len() {
            return Err(Error::invalid(format!("no data for round {t} (horizon {})", self.rounds.len())));
        }
        Ok(&self.rounds[t - 1])
    }

    pub fn distribution(&self, t: usize) -> Result<BatchSizeDistribution> {
        let counts = self.round(t)?;
        let b_max = counts.keys().next_back().copied().unwrap_or(1) as usize;
        BatchSizeDistribution::from_counts(counts, b_max)
    }

    /// Number of runs in which round `t` sat in a batch larger than `b`.
    pub fn exceed_count(&self, t: usize, b: u64) -> Result<u64> {
        Ok(self.round(t)?.range(b + 1..).map(|(_, c)| *c).sum())
    }

    /// JSON export, optionally restricted to some rounds.
    pub fn to_json(&self, rounds: Option<&[usize]>) -> Result<serde_json::Value> {
        let selected: Vec<usize> = match rounds {
            Some(r) => r.to_vec(),
            None => (1..=self.rounds.len()).collect(),
        };
        let mut map = serde_json::Map::new();
        for t in selected {
            let counts: serde_json::Map<String, serde_json::Value> =
                self.round(t)?.iter().map(|(b, c)| (b.to_string(), serde_json::json!(c))).collect();
            map.insert(t.to_string(), serde_json::Value::Object(counts));
        }
        Ok(serde_json::json!({ "runs": self.runs, "rounds": map }))
    }
}

fn merge_counts(mut a: Vec<BTreeMap<u64, u64>>, b: Vec<BTreeMap<u64, u64>>) -> Vec<BTreeMap<u64, u64>> {
    if a.is_empty() {
        return b;
    }
    for (x, y) in a.iter_mut().zip(b) {
        for (size, c) in y {
            *x.entry(size).or_default() += c;
        }
    }
    a
}

pub fn mc_batch_pmf(cfg: &McConfig) -> Result<EmpiricalPmf> {
    let stream = cfg.resolve_stream()?;
    mc_batch_pmf_on(cfg, &stream)
}

/// Replays RW-AdaBatch `cfg.runs` times on `stream` and tallies, for every
/// round, the size of the batch it was flushed in.
pub fn mc_batch_pmf_on(cfg: &McConfig, stream: &GainStream) -> Result<EmpiricalPmf> {
    cfg.validate()?;
    check_horizon(stream, cfg.horizon)?;
    let stream = stream.truncated(cfg.horizon)?;
    let inverse = cfg.bound_inverse()?;
    let rounds = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|run| -> Result<Vec<u64>> {
            let r = run_adabatch(&stream, &cfg.noise(run, "adabatch"), cfg.alpha, inverse.clone())?;
            Ok(r.log.iter().map(|row| row.batch_size).collect())
        })
        .try_fold(Vec::new, |acc, sizes| -> Result<Vec<BTreeMap<u64, u64>>> {
            let sizes = sizes?;
            let one: Vec<BTreeMap<u64, u64>> = sizes.into_iter().map(|b| BTreeMap::from([(b, 1)])).collect();
            Ok(merge_counts(acc, one))
        })
        .try_reduce(Vec::new, |a, b| Ok(merge_counts(a, b)))?;
    Ok(EmpiricalPmf {
        runs: cfg.runs as u64,
        rounds,
    })
}

/// Tradeoff curve implied by the empirical batch-size law at round `t`.
pub fn empirical_tradeoff(pmf: &EmpiricalPmf, t: usize, mu: f64) -> Result<TradeoffCurve> {
    let mut curve = amplified_tradeoff(&pmf.distribution(t)?, mu)?;
    curve.label = format!("empirical(t={t}, mu={mu})");
    Ok(curve)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeaderChangeEstimate {
    pub changes: u64,
    pub runs: u64,
    pub probability: f64,
    /// 99% Wilson interval.
    pub ci: (f64, f64),
    /// The analytic bound for the same walk.
    pub bound: f64,
}

impl LeaderChangeEstimate {
    /// Upper half-width of the interval.
    pub fn ci_half_width(&self) -> f64 {
        self.ci.1 - self.probability
    }
}

/// Fraction of `runs` Gaussian walks (per-step noise N(0, η²) per
/// coordinate, no drift) started at `[0, −k, …, −k]` whose leader changes
/// within `b` steps.
pub fn mc_leader_change(k: f64, eta: f64, b: u64, n: usize, runs: u64, seed: u64) -> Result<LeaderChangeEstimate> {
    let query = StabilityQuery {
        k,
        kappa: 0.0,
        eta,
        b,
        n,
    };
    let bound = stability_bound(&query)?;
    if runs < 10_000 {
        return Err(Error::invalid(format!("leader-change estimates need at least 10^4 runs, got {runs}")));
    }
    let changes: u64 = (0..runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = RoundSeed::new(seed, run, StreamId::new("leader-walk", b)).rng();
            let mut x = vec![-k; n];
            x[0] = 0.0;
            for _ in 0..b {
                for v in x.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *v += eta * z;
                }
                if x[1..].iter().any(|v| *v > x[0]) {
                    return 1u64;
                }
            }
            0
        })
        .sum();
    Ok(LeaderChangeEstimate {
        changes,
        runs,
        probability: changes as f64 / runs as f64,
        ci: wilson_interval(changes, runs, 0.99),
        bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Ftpl,
    #[serde(rename = "adabatch")]
    AdaBatch,
    Meta,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Ftpl => "ftpl",
            Algorithm::AdaBatch => "adabatch",
            Algorithm::Meta => "meta",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ftpl" => Ok(Algorithm::Ftpl),
            "adabatch" => Ok(Algorithm::AdaBatch),
            "meta" => Ok(Algorithm::Meta),
            other => Err(Error::invalid(format!("unknown algorithm {other:?}; expected ftpl, adabatch or meta"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretSummary {
    pub algorithm: Algorithm,
    pub config: McConfig,
    /// Regret against the comparator: the best single action for FTPL and
    /// AdaBatch, the best learner for RW-Meta.
    pub regret: Vec<f64>,
    pub summary: Summary,
    pub static_regret: Vec<f64>,
    pub static_summary: Summary,
    /// Analytic regret bound; for RW-Meta the mean of the per-run bounds.
    pub bound: Option<f64>,
}

pub fn regret_experiment(algorithm: Algorithm, cfg: &McConfig) -> Result<RegretSummary> {
    let stream = cfg.resolve_stream()?;
    regret_experiment_on(algorithm, cfg, &stream)
}

/// Runs `algorithm` `cfg.runs` times on `stream`. With `cfg.paired`, run
/// `r` of every algorithm sees the same noise.
pub fn regret_experiment_on(algorithm: Algorithm, cfg: &McConfig, stream: &GainStream) -> Result<RegretSummary> {
    cfg.validate()?;
    check_horizon(stream, cfg.horizon)?;
    let stream = stream.truncated(cfg.horizon)?;
    let inverse = match algorithm {
        Algorithm::AdaBatch => cfg.bound_inverse()?,
        _ => None,
    };
    let label = algorithm.label();
    // (regret, static regret, per-run bound)
    let per_run: Vec<(f64, f64, Option<f64>)> = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|run| {
            let noise = cfg.noise(run, label);
            Ok(match algorithm {
                Algorithm::Ftpl => {
                    let r = run_ftpl(&stream, &noise)?;
                    (r.regret, r.regret, None)
                }
                Algorithm::AdaBatch => {
                    let r = run_adabatch(&stream, &noise, cfg.alpha, inverse.clone())?;
                    (r.regret, r.regret, None)
                }
                Algorithm::Meta => {
                    let r = run_meta(&stream, &noise, &cfg.learners)?;
                    (r.regret, r.static_regret, r.bound)
                }
            })
        })
        .collect::<Result<_>>()?;

    let horizon = cfg.horizon as u64;
    let n = cfg.n as f64;
    let bound = match algorithm {
        Algorithm::Ftpl => ftpl_regret_bound(cfg.eta, horizon, n).ok(),
        Algorithm::AdaBatch => adabatch_regret_bound(cfg.eta, horizon, n, cfg.alpha).ok(),
        Algorithm::Meta => {
            let bounds: Option<Vec<f64>> = per_run.iter().map(|r| r.2).collect();
            bounds.map(|b| b.iter().sum::<f64>() / b.len() as f64)
        }
    };
    let regret: Vec<f64> = per_run.iter().map(|r| r.0).collect();
    let static_regret: Vec<f64> = per_run.iter().map(|r| r.1).collect();
    Ok(RegretSummary {
        algorithm,
        config: cfg.clone(),
        summary: Summary::of(&regret),
        static_summary: Summary::of(&static_regret),
        regret,
        static_regret,
        bound,
    })
}
