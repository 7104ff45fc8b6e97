use proptest::prelude::*;
use rwexperts::eval::{
    ingest_csv, naive_budget_split, rolling_regression_learner, run_eval, synthetic_drift_stream, EvalConfig,
    EvalData, LearnerSpec, PrivacyLevel, Regularization, RollingRegression, SyntheticSpec,
};
use rwexperts::mechanism::{GainVector, NoiseStream, NoisyGainVector};
use rwexperts::rwmeta::{Learner, NoisyHistory};
use std::f64::consts::SQRT_2;
use std::io::Write;

fn history(rows: &[Vec<f64>]) -> NoisyHistory {
    let mut h = NoisyHistory::new();
    for r in rows {
        h.push(&NoisyGainVector {
            values: r.clone(),
            noise_scale: 0.0,
        })
        .unwrap();
    }
    h
}

#[test]
fn ingest_from_file() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "week_index,unit_id,covid_density,total_beds").unwrap();
    for w in 0..4 {
        writeln!(f, "{w},big,0.5,40").unwrap();
        writeln!(f, "{w},small,0.01,10").unwrap();
        writeln!(f, "{w},other,0.2,{}", 10 + w).unwrap();
    }
    let p = ingest_csv(f.path(), 2.0).unwrap();
    assert_eq!(p.unit_ids, vec!["big", "other"]);
    assert_eq!(p.dropped_units, vec!["small"]);
    assert_eq!(p.min_beds, vec![10.0, 11.0, 12.0, 13.0]);
    assert!((p.sensitivities()[0] - SQRT_2 / 10.0).abs() < 1e-15);
    assert!(ingest_csv(std::path::Path::new("/nonexistent/panel.csv"), 0.0).is_err());
}

#[test]
fn constant_history_picks_highest_expert() {
    let rows = vec![vec![0.1, 0.2, 0.9, 0.3]; 20];
    for spec in rwexperts::eval::default_zoo().into_iter().filter(|s| matches!(s, LearnerSpec::RollingRegression { .. })) {
        let l = rolling_regression_learner(&spec).unwrap();
        assert_eq!(l.predict(4, &history(&rows)), vec![0.0, 0.0, 1.0, 0.0], "{}", spec.id());
    }
}

#[test]
fn trending_expert_wins_once_slope_dominates() {
    // Both average 0.5 over the window; expert 1 rises from 0.3 to 0.7.
    let w = 16;
    let rows: Vec<Vec<f64>> = (0..w).map(|s| vec![0.5, 0.3 + 0.4 * s as f64 / (w - 1) as f64]).collect();
    let l = RollingRegression::new(w, 0.1 * w as f64, "r").unwrap();
    let f = l.forecast(&history(&rows)).unwrap();
    // Closed form: slope = Σx y / (Σx² + λ), forecast = mean + slope (len − c).
    let len = w as f64;
    let c = 0.5 * (len - 1.0);
    let sxx = len * (len * len - 1.0) / 12.0;
    let sxy: f64 = rows.iter().enumerate().map(|(s, r)| (s as f64 - c) * r[1]).sum();
    let want = 0.5 + sxy / (sxx + 0.1 * len) * (len - c);
    assert!((f[1] - want).abs() < 1e-12);
    assert_eq!(l.predict(2, &history(&rows)), vec![0.0, 1.0]);
}

#[test]
fn heavy_ridge_reduces_to_window_mean() {
    // Expert 0 has the higher mean, expert 1 the steeper recent trend.
    let rows: Vec<Vec<f64>> = (0..8).map(|s| vec![0.6, 0.2 + 0.05 * s as f64]).collect();
    let weak = RollingRegression::new(8, 0.0, "weak").unwrap();
    let strong = RollingRegression::new(8, 1e12, "strong").unwrap();
    assert_eq!(weak.predict(2, &history(&rows)), vec![0.0, 1.0]);
    assert_eq!(strong.predict(2, &history(&rows)), vec![1.0, 0.0]);
    let f = strong.forecast(&history(&rows)).unwrap();
    assert!((f[1] - rows.iter().map(|r| r[1]).sum::<f64>() / 8.0).abs() < 1e-9);
}

#[test]
fn regression_spec_validation() {
    assert!(rolling_regression_learner(&LearnerSpec::FtplBaseline).is_err());
    assert!(RollingRegression::new(1, 1.0, "r").is_err());
    let spec = LearnerSpec::RollingRegression {
        window: 32,
        regularization: Regularization::Strong,
    };
    assert_eq!(spec.id(), "regression_w32_strong");
}

#[test]
fn split_noise_error_grows_with_sqrt_m() {
    // A learner's cumulative-gain estimate under the split has standard
    // error η√m·√T; check the ratio across m at fixed T.
    let (delta, mu, horizon, runs) = (1.0, 1.0, 50u64, 4000u64);
    let g = GainVector::new(vec![0.5, 0.5]).unwrap();
    let mut sds = Vec::new();
    for m in [1usize, 4, 16] {
        let level = naive_budget_split(m, mu).unwrap();
        let eta = delta / level;
        assert!((eta - delta * (m as f64).sqrt() / mu).abs() < 1e-12);
        let errs: Vec<f64> = (0..runs)
            .map(|r| {
                let s = NoiseStream::new(5, r, eta).fork("naive-0", eta);
                (1..=horizon).map(|t| s.perturb(t, &g).values[0] - 0.5).sum::<f64>()
            })
            .collect();
        let var = errs.iter().map(|e| e * e).sum::<f64>() / runs as f64;
        sds.push(var.sqrt());
    }
    for (sd, m) in sds.iter().zip([1.0f64, 4.0, 16.0]) {
        let want = m.sqrt() * (horizon as f64).sqrt();
        assert!((sd / want - 1.0).abs() < 0.05, "m={m}: sd {sd} vs {want}");
    }
}

#[test]
fn four_regime_bookkeeping() {
    let (n, horizon) = (6, 2000);
    let spec = SyntheticSpec::new(n, horizon, horizon / 4, 21);
    let s = spec.generate().unwrap();
    let leaders = spec.regime_leaders().unwrap();
    let mut per_regime_best = 0.0;
    for (r, leader) in leaders.iter().enumerate().take(4) {
        let rows = &s.rows()[r * 500..(r + 1) * 500];
        let mut totals = vec![0.0; n];
        for g in rows {
            for (t, v) in totals.iter_mut().zip(g.values()) {
                *t += v;
            }
        }
        let best = totals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(totals.iter().position(|t| *t == best).unwrap(), *leader);
        per_regime_best += best;
    }
    let gap = per_regime_best - s.best_static().1;
    assert!(gap >= 0.3 * 0.75 * horizon as f64 * 0.75, "gap {gap}");
}

#[test]
fn static_stream_best_learner_is_best_action() {
    let s = synthetic_drift_stream(4, 200, 200, 5).unwrap();
    let spec = SyntheticSpec::new(4, 200, 200, 5);
    assert_eq!(s.best_static().0, spec.regime_leaders().unwrap()[0]);
}

#[test]
fn meta_beats_best_static_and_tracks_best_learner() {
    let data = EvalData::synthetic(&SyntheticSpec::new(8, 400, 50, 3)).unwrap();
    let mut cfg = EvalConfig::new(vec![PrivacyLevel::new(1.0).unwrap()], rwexperts::eval::default_zoo(), 200, 6);
    cfg.include_naive = false;
    let res = run_eval(&data, &cfg).unwrap();
    let level = &res.levels[0];
    let meta = level.get("rw_meta").unwrap();
    let best_static = level.get("best_static_action").unwrap().mean;
    assert!(meta.mean > best_static, "{} vs {best_static}", meta.mean);
    let best = level.get(&level.best_learner).unwrap();
    let bound = 2.0 * SQRT_2 * (2.0 * 400.0 * 13f64.ln()).sqrt();
    assert!(meta.mean >= best.mean - bound - 3.0 * meta.std_err);
}

#[test]
fn invalid_levels_are_rejected() {
    assert!(PrivacyLevel::new(0.0).is_err());
    assert!("-0.5".parse::<PrivacyLevel>().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ingest_is_order_independent(seed in any::<u64>(), units in 1usize..5, weeks in 1usize..6) {
        use rand::seq::SliceRandom;
        use rand::Rng;
        let mut rng = rwexperts::mechanism::RoundSeed::new(seed, 0, rwexperts::mechanism::StreamId(1)).rng();
        let mut lines = Vec::new();
        for w in 0..weeks {
            for u in 0..units {
                lines.push(format!("{w},u{u},{},{}", rng.random::<f64>(), rng.random_range(5..50)));
            }
        }
        let a = rwexperts::eval::parse_panel(&lines.join("\n"), 0.0).unwrap();
        lines.shuffle(&mut rng);
        let b = rwexperts::eval::parse_panel(&lines.join("\n"), 0.0).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.density.iter().flatten().all(|d| (0.0..=1.0).contains(d)));
        prop_assert!(a.min_beds.iter().all(|b| *b > 0.0));
    }
}
