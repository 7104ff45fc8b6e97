use clap::{Args, ValueEnum};
use rwexperts::adabatch::{adabatch_regret_bound, build_bound_inverse, compute_delay as delay_rule};
use rwexperts::eval::{
    default_zoo, ingest_csv, run_eval as eval_run, EvalConfig, EvalData, LearnerSpec, PrivacyLevel, SyntheticSpec,
};
use rwexperts::mechanism::{default_eta, NoiseStream};
use rwexperts::privacy::{
    default_alpha_grid, gaussian_beta, proxy_batch_distribution, BatchSizeDistribution, MixtureTradeoff, DEFAULT_B_MAX,
};
use rwexperts::rwftpl::ftpl_regret_bound;
use rwexperts::sim::{mc_batch_pmf, run_adabatch, run_ftpl, run_meta, Algorithm, McConfig, StreamSource};
use rwexperts::stream::GainStream;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::PathBuf;
use std::sync::Arc;

use crate::output::{config_value, csv_table, Common, Format, Writer};
use crate::CliError;

/// Noise scale: `--eta` if given, else sensitivity / μ with sensitivity
/// defaulting to √n (gains in [0, 1]).
fn resolve_eta(eta: Option<f64>, mu: f64, sensitivity: Option<f64>, n: usize) -> Result<f64, CliError> {
    match eta {
        Some(e) if e.is_finite() && e > 0.0 => Ok(e),
        Some(e) => Err(CliError::Usage(format!("--eta must be positive and finite, got {e}"))),
        None => Ok(default_eta(mu, sensitivity.unwrap_or((n as f64).sqrt()), false)?),
    }
}

/// Parses `start:stop:step` into an inclusive grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("grid {spec:?} must look like start:stop:step with 0 <= start <= stop, step > 0"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !(start >= 0.0 && stop >= start && step > 0.0 && stop.is_finite()) {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(CliError::Usage(format!("grid {spec:?} has {count} points; the limit is 1e6")));
    }
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

fn num(x: f64) -> String {
    x.to_string()
}

#[derive(Debug, Args, Serialize)]
pub struct PrivacyCurveArgs {
    /// Gaussian-DP level of a single release.
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,

    /// Number of experts.
    #[arg(long, default_value_t = 25)]
    pub n: usize,

    /// Per-round leader-change tolerance of the batching rule.
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,

    /// Round at which the batch-size law is evaluated.
    #[arg(long)]
    pub t: u64,

    /// Largest batch size tracked by the proxy distribution.
    #[arg(long, default_value_t = DEFAULT_B_MAX)]
    pub b_max: usize,

    /// ℓ2 sensitivity of one gain vector; defaults to √n.
    #[arg(long)]
    pub sensitivity: Option<f64>,

    /// Noise scale; overrides sensitivity / μ.
    #[arg(long)]
    pub eta: Option<f64>,

    /// ε grid for the (ε, δ) dual, as start:stop:step.
    #[arg(long, default_value = "0:5:0.1")]
    pub eps_grid: String,

    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

pub fn privacy_curve(a: &PrivacyCurveArgs) -> Result<(), CliError> {
    let eta = resolve_eta(a.eta, a.mu, a.sensitivity, a.n)?;
    let eps = parse_grid(&a.eps_grid)?;
    let dist = proxy_batch_distribution(a.t, eta, a.n, a.alpha, a.b_max)?;
    let amplified = MixtureTradeoff::new(&dist, a.mu)?;
    let baseline = MixtureTradeoff::new(&BatchSizeDistribution::point_mass(1, 1)?, a.mu)?;
    let grid = default_alpha_grid();

    let config = config_value(a, json!({ "eta": eta, "proxy_mean_batch_size": dist.mean() }));
    let mut w = Writer::new(&a.common, "privacy-curve", config)?;
    let base_pts: Vec<(f64, f64)> = grid.iter().map(|&x| (x, gaussian_beta(a.mu, x))).collect();
    let amp_pts: Vec<(f64, f64)> = grid.iter().map(|&x| (x, amplified.beta_at(x))).collect();
    let dual: Vec<(f64, f64, f64)> = eps.iter().map(|&e| (e, baseline.delta(e), amplified.delta(e))).collect();

    match a.common.format {
        Format::Csv => {
            let curve = |pts: &[(f64, f64)]| csv_table(&["alpha", "beta"], pts.iter().map(|p| vec![num(p.0), num(p.1)]));
            w.text("baseline.csv", &curve(&base_pts))?;
            w.text("amplified.csv", &curve(&amp_pts))?;
            w.text(
                "dual.csv",
                &csv_table(
                    &["epsilon", "delta_baseline", "delta_amplified"],
                    dual.iter().map(|d| vec![num(d.0), num(d.1), num(d.2)]),
                ),
            )?;
        }
        Format::Json => {
            let pts = |p: &[(f64, f64)]| p.iter().map(|q| json!({ "alpha": q.0, "beta": q.1 })).collect::<Vec<_>>();
            w.json_artifact(
                "privacy_curve.json",
                json!({
                    "baseline": pts(&base_pts),
                    "amplified": pts(&amp_pts),
                    "dual": dual.iter().map(|d| json!({ "epsilon": d.0, "delta_baseline": d.1, "delta_amplified": d.2 })).collect::<Vec<_>>(),
                    "batch_distribution": dist.to_json(),
                }),
            )?;
        }
    }
    w.finish()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    AllZero,
    File,
    Synthetic,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,

    /// Horizon.
    #[arg(long)]
    pub t: usize,

    #[arg(long, default_value_t = 25)]
    pub n: usize,

    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,

    #[arg(long)]
    pub sensitivity: Option<f64>,

    #[arg(long)]
    pub eta: Option<f64>,

    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,

    /// Rounds to report, comma separated; defaults to the horizon.
    #[arg(long, value_delimiter = ',')]
    pub rounds: Vec<usize>,

    #[arg(long, value_enum, default_value_t = SourceKind::AllZero)]
    pub source: SourceKind,

    /// Stream CSV for `--source file`.
    #[arg(long)]
    pub stream: Option<PathBuf>,

    /// Regime length for `--source synthetic`.
    #[arg(long, default_value_t = 500)]
    pub regime_length: usize,

    /// Seed of the synthetic stream; defaults to `--seed`.
    #[arg(long)]
    pub stream_seed: Option<u64>,

    /// Answer delay queries from the precomputed interpolant.
    #[arg(long)]
    pub spline: bool,

    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

pub fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let eta = resolve_eta(a.eta, a.mu, a.sensitivity, a.n)?;
    let source = match a.source {
        SourceKind::AllZero => StreamSource::AllZero,
        SourceKind::File => StreamSource::File {
            path: a
                .stream
                .clone()
                .ok_or_else(|| CliError::Usage("--source file needs --stream PATH".into()))?,
        },
        SourceKind::Synthetic => StreamSource::Synthetic {
            regime_length: a.regime_length,
            seed: a.stream_seed.unwrap_or(a.common.seed),
        },
    };
    let mut cfg = McConfig::new(a.runs, a.t, a.n, eta, a.alpha, a.common.seed).with_source(source);
    cfg.use_spline = a.spline;
    cfg.validate()?;
    let rounds = if a.rounds.is_empty() { vec![a.t] } else { a.rounds.clone() };
    if let Some(r) = rounds.iter().find(|&&r| r == 0 || r > a.t) {
        return Err(CliError::Usage(format!("round {r} is outside 1..={}", a.t)));
    }

    let pmf = mc_batch_pmf(&cfg)?;
    let config = config_value(a, json!({ "eta": eta, "rounds": rounds }));
    let mut w = Writer::new(&a.common, "simulate", config)?;
    w.json_artifact("pmf.json", json!({ "pmf": pmf.to_json(Some(&rounds))? }))?;

    let grid = default_alpha_grid();
    let mut table = Vec::new();
    for &t in &rounds {
        let empirical = MixtureTradeoff::new(&pmf.distribution(t)?, a.mu)?;
        let analytic = MixtureTradeoff::new(&proxy_batch_distribution(t as u64, eta, a.n, a.alpha, DEFAULT_B_MAX)?, a.mu)?;
        for &x in &grid {
            table.push((t, x, empirical.beta_at(x), analytic.beta_at(x), gaussian_beta(a.mu, x)));
        }
    }
    let header = ["round", "alpha", "beta_empirical", "beta_analytic", "beta_baseline"];
    match a.common.format {
        Format::Csv => w.text(
            "tradeoff.csv",
            &csv_table(&header, table.iter().map(|r| vec![r.0.to_string(), num(r.1), num(r.2), num(r.3), num(r.4)])),
        )?,
        Format::Json => w.json_artifact(
            "tradeoff.json",
            json!({ "tradeoff": table.iter().map(|r| json!({
                "round": r.0, "alpha": r.1, "beta_empirical": r.2, "beta_analytic": r.3, "beta_baseline": r.4,
            })).collect::<Vec<_>>() }),
        )?,
    }

    if a.runs == 1 {
        let stream = cfg.resolve_stream()?;
        let inverse = if a.spline { Some(Arc::new(build_bound_inverse(eta, a.n, a.alpha)?)) } else { None };
        let run = run_adabatch(&stream, &NoiseStream::new(a.common.seed, 0, eta), a.alpha, inverse)?;
        write_batch_log(&mut w, a.common.format, "trajectory", &run.log)?;
    }
    w.finish()?;
    Ok(())
}

fn write_batch_log(
    w: &mut Writer,
    format: Format,
    stem: &str,
    log: &[rwexperts::sim::AdaBatchLogRow],
) -> Result<(), CliError> {
    match format {
        Format::Csv => w.text(
            &format!("{stem}.csv"),
            &csv_table(
                &["round", "action", "delay_remaining", "flush", "batch_size"],
                log.iter().map(|r| {
                    vec![
                        r.round.to_string(),
                        r.action.to_string(),
                        r.delay_remaining.to_string(),
                        r.flush.to_string(),
                        r.batch_size.to_string(),
                    ]
                }),
            ),
        ),
        Format::Json => w.json(&format!("{stem}.json"), &log),
    }
}

#[derive(Debug, Args)]
pub struct ComputeDelayArgs {
    /// Current gap between the two leading noisy totals.
    #[arg(long, allow_negative_numbers = true)]
    pub k: f64,

    #[arg(long)]
    pub eta: f64,

    #[arg(long)]
    pub n: usize,

    #[arg(long)]
    pub alpha: f64,

    /// Current round.
    #[arg(long)]
    pub t: u64,

    /// Answer from the precomputed interpolant instead of solving directly.
    #[arg(long)]
    pub spline: bool,
}

pub fn compute_delay(a: &ComputeDelayArgs) -> Result<(), CliError> {
    let b = if a.spline {
        build_bound_inverse(a.eta, a.n, a.alpha)?.compute_delay(a.k, a.t)?
    } else {
        delay_rule(a.k, a.eta, a.n, a.alpha, a.t)?
    };
    println!("{b}");
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct RunArgs {
    /// ftpl, adabatch or meta.
    #[arg(long)]
    pub algo: Algorithm,

    /// Gain stream CSV: one round per line, one column per expert.
    #[arg(long)]
    pub stream: PathBuf,

    /// Expected number of experts; checked against the stream.
    #[arg(long)]
    pub n: Option<usize>,

    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,

    #[arg(long)]
    pub sensitivity: Option<f64>,

    #[arg(long)]
    pub eta: Option<f64>,

    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,

    /// Learner for meta, repeatable (e.g. regression_w16_weak, rw_ftpl,
    /// constant_0); defaults to the standard zoo.
    #[arg(long = "learner")]
    pub learners: Vec<LearnerSpec>,

    #[arg(long)]
    pub spline: bool,

    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

pub fn run(a: &RunArgs) -> Result<(), CliError> {
    let stream = GainStream::read_csv(&a.stream)?;
    if let Some(n) = a.n.filter(|&n| n != stream.n()) {
        return Err(CliError::Usage(format!("stream has {} experts, --n says {n}", stream.n())));
    }
    let n = stream.n();
    let horizon = stream.len() as u64;
    let eta = resolve_eta(a.eta, a.mu, a.sensitivity, n)?;
    let noise = NoiseStream::new(a.common.seed, 0, eta);
    let learners = if a.learners.is_empty() { default_zoo() } else { a.learners.clone() };

    let mut extra = json!({ "eta": eta, "n": n, "horizon": horizon });
    if a.algo == Algorithm::Meta {
        extra["learners"] = json!(learners.iter().map(LearnerSpec::id).collect::<Vec<_>>());
    }
    let mut w = Writer::new(&a.common, "run", config_value(a, extra))?;
    let fmt = a.common.format;

    let summary: Value = match a.algo {
        Algorithm::Ftpl => {
            let r = run_ftpl(&stream, &noise)?;
            write_actions(&mut w, fmt, r.log.iter().map(|x| (x.round, x.action)), "action")?;
            json!({
                "total_gain": r.total_gain, "best_static": r.best_static, "regret": r.regret,
                "bound": ftpl_regret_bound(eta, horizon, n as f64).ok(),
            })
        }
        Algorithm::AdaBatch => {
            let inverse = if a.spline { Some(Arc::new(build_bound_inverse(eta, n, a.alpha)?)) } else { None };
            let r = run_adabatch(&stream, &noise, a.alpha, inverse)?;
            write_actions(&mut w, fmt, r.log.iter().map(|x| (x.round, x.action)), "action")?;
            write_batch_log(&mut w, fmt, "batches", &r.log)?;
            json!({
                "total_gain": r.total_gain, "best_static": r.best_static, "regret": r.regret,
                "bound": adabatch_regret_bound(eta, horizon, n as f64, a.alpha).ok(),
                "flushes": r.batches.len(),
            })
        }
        Algorithm::Meta => {
            let r = run_meta(&stream, &noise, &learners)?;
            write_actions(&mut w, fmt, r.log.iter().map(|x| (x.round, x.chosen)), "chosen_learner")?;
            let mut header = vec!["round".to_string(), "chosen_learner".into(), "sigma_sq".into(), "lambda_max".into()];
            header.extend((0..n).map(|i| format!("x_{i}")));
            match fmt {
                Format::Csv => {
                    let header: Vec<&str> = header.iter().map(String::as_str).collect();
                    let rows = r.log.iter().map(|x| {
                        let mut row = vec![x.round.to_string(), x.chosen.to_string(), num(x.sigma_sq), num(x.lambda_max)];
                        row.extend(x.action_vector.iter().map(|v| num(*v)));
                        row
                    });
                    w.text("meta_trace.csv", &csv_table(&header, rows))?;
                }
                Format::Json => w.json("meta_trace.json", &r.log)?,
            }
            json!({
                "total_gain": r.total_gain, "best_static": r.best_static,
                "regret": r.regret, "static_regret": r.static_regret,
                "learner_totals": learners.iter().map(LearnerSpec::id).zip(&r.learner_totals)
                    .map(|(id, g)| json!({ "learner": id, "total_gain": g })).collect::<Vec<_>>(),
                "min_cov_eigenvalue": r.min_cov_eigenvalue, "bound": r.bound,
            })
        }
    };
    let mut body = json!({ "algorithm": a.algo });
    body.as_object_mut().unwrap().extend(summary.as_object().cloned().unwrap_or_default());
    w.json_artifact("summary.json", body)?;
    w.finish()?;
    Ok(())
}

/// The per-round action log. It holds nothing but rounds and choices, so
/// logs of different algorithms can be compared byte for byte.
fn write_actions(
    w: &mut Writer,
    format: Format,
    rows: impl Iterator<Item = (u64, usize)>,
    column: &str,
) -> Result<(), CliError> {
    match format {
        Format::Csv => w.text(
            "actions.csv",
            &csv_table(&["round", column], rows.map(|(t, x)| vec![t.to_string(), x.to_string()])),
        ),
        Format::Json => {
            let v: Vec<Value> = rows.map(|(t, x)| json!({ "round": t, column: x })).collect();
            w.json("actions.json", &v)
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Panel CSV with columns week_index,unit_id,covid_density,total_beds.
    #[arg(long, conflicts_with = "synthetic")]
    pub dataset: Option<PathBuf>,

    /// Drop units whose total case count is below this.
    #[arg(long, default_value_t = 0.0)]
    pub min_cases: f64,

    /// Use a synthetic drifting stream instead of a dataset.
    #[arg(long)]
    pub synthetic: bool,

    #[arg(long, default_value_t = 8)]
    pub n: usize,

    #[arg(long, default_value_t = 400)]
    pub t: usize,

    #[arg(long, default_value_t = 50)]
    pub regime_length: usize,

    /// Seed of the synthetic stream; defaults to `--seed`.
    #[arg(long)]
    pub stream_seed: Option<u64>,

    /// Privacy levels μ, comma separated; `inf` means no noise.
    #[arg(long, value_delimiter = ',', default_value = "inf,1,0.5,0.25")]
    pub levels: Vec<PrivacyLevel>,

    #[arg(long, default_value_t = 100)]
    pub runs: usize,

    /// Learner, repeatable; defaults to the standard zoo.
    #[arg(long = "learner")]
    pub learners: Vec<LearnerSpec>,

    /// Family-wise confidence of the reported intervals.
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,

    /// Leave out the split-budget baseline.
    #[arg(long)]
    pub no_naive: bool,

    /// Scale noise by each week's own sensitivity.
    #[arg(long)]
    pub per_week_eta: bool,

    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

pub fn eval(a: &EvalArgs) -> Result<(), CliError> {
    let data = match (&a.dataset, a.synthetic) {
        (Some(path), _) => EvalData::from_panel(&ingest_csv(path, a.min_cases)?)?,
        (None, true) => EvalData::synthetic(&SyntheticSpec::new(
            a.n,
            a.t,
            a.regime_length,
            a.stream_seed.unwrap_or(a.common.seed),
        ))?,
        (None, false) => return Err(CliError::Usage("eval needs --dataset PATH or --synthetic".into())),
    };
    let learners = if a.learners.is_empty() { default_zoo() } else { a.learners.clone() };
    let mut cfg = EvalConfig::new(a.levels.clone(), learners, a.runs, a.common.seed);
    cfg.confidence = a.confidence;
    cfg.include_naive = !a.no_naive;
    cfg.per_week_eta = a.per_week_eta;
    let results = eval_run(&data, &cfg)?;

    let extra = json!({
        "horizon": results.horizon, "experts": results.n,
        "comparisons": results.comparisons, "z": results.z,
        "columns": cfg.algorithms(),
    });
    let mut w = Writer::new(&a.common, "eval", config_value(a, extra))?;
    match a.common.format {
        Format::Csv => w.text("results.csv", &results.to_csv())?,
        Format::Json => w.json_artifact("results.json", json!({ "results": results }))?,
    }
    w.finish()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StreamKind {
    Synthetic,
    Zero,
}

#[derive(Debug, Args, Serialize)]
pub struct GenStreamArgs {
    #[arg(long, value_enum, default_value_t = StreamKind::Synthetic)]
    pub kind: StreamKind,

    #[arg(long, default_value_t = 8)]
    pub n: usize,

    #[arg(long, default_value_t = 400)]
    pub t: usize,

    #[arg(long, default_value_t = 50)]
    pub regime_length: usize,

    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

pub fn gen_stream(a: &GenStreamArgs) -> Result<(), CliError> {
    let (stream, leaders) = match a.kind {
        StreamKind::Zero => (GainStream::zeros(a.n, a.t)?, None),
        StreamKind::Synthetic => {
            let spec = SyntheticSpec::new(a.n, a.t, a.regime_length, a.common.seed);
            (spec.generate()?, Some(spec.regime_leaders()?))
        }
    };
    let mut w = Writer::new(&a.common, "gen-stream", config_value(a, json!({ "regime_leaders": leaders })))?;
    match a.common.format {
        Format::Csv => w.text("stream.csv", &stream.to_csv())?,
        Format::Json => {
            let rows: Vec<&[f64]> = stream.rows().iter().map(|r| r.values()).collect();
            w.json_artifact("stream.json", json!({ "rows": rows }))?
        }
    }
    w.finish()?;
    Ok(())
}
