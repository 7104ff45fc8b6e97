use rwexperts::privacy::{gaussian_beta, proxy_batch_distribution, MixtureTradeoff};
use rwexperts::sim::{
    empirical_tradeoff, mc_batch_pmf, mc_leader_change, regret_experiment, regret_experiment_on, Algorithm,
    EmpiricalPmf, McConfig, StreamSource,
};
use rwexperts::stream::GainStream;
use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;

#[test]
fn symmetric_start_changes_leader_half_the_time() {
    let est = mc_leader_change(0.0, 1.0, 1, 2, 100_000, 3).unwrap();
    assert!(est.ci.1 >= 0.5, "{est:?}");
    assert!(est.probability > 0.49);
}

#[test]
fn huge_gap_never_changes_leader() {
    let k = 20.0 * SQRT_2;
    let est = mc_leader_change(k, 1.0, 1, 2, 100_000, 4).unwrap();
    assert_eq!(est.changes, 0);
}

#[test]
fn leader_change_rate_under_bound() {
    let est = mc_leader_change(10.0, 1.0, 8, 2, 1_000_000, 5).unwrap();
    assert!(est.probability <= est.bound, "{est:?}");
}

#[test]
fn point_masses_give_gaussian_curves() {
    let pmf = EmpiricalPmf {
        runs: 5,
        rounds: vec![BTreeMap::from([(1, 5)]), BTreeMap::from([(9, 5)])],
    };
    let c1 = empirical_tradeoff(&pmf, 1, 0.8).unwrap();
    let c9 = empirical_tradeoff(&pmf, 2, 3.0).unwrap();
    for a in [1e-6, 0.01, 0.3, 0.8] {
        assert!((c1.beta_at(a).unwrap() - gaussian_beta(0.8, a)).abs() < 1e-3);
        assert!((c9.beta_at(a).unwrap() - gaussian_beta(1.0, a)).abs() < 1e-3);
    }
    assert!(empirical_tradeoff(&pmf, 3, 1.0).is_err());
}

#[test]
fn late_rounds_mostly_batched_and_bracketed() {
    let (n, eta, alpha, mu) = (25, 5.0, 0.01, 1.0);
    let cfg = McConfig::new(100, 2000, n, eta, alpha, 31);
    let pmf = mc_batch_pmf(&cfg).unwrap();
    let t = 2000;
    let batched = pmf.exceed_count(t, 1).unwrap();
    assert!(batched * 2 > 100, "{batched} of 100 runs batched at t={t}");

    let empirical = MixtureTradeoff::new(&pmf.distribution(t).unwrap(), mu).unwrap();
    let analytic = MixtureTradeoff::new(&proxy_batch_distribution(t as u64, eta, n, alpha, 4096).unwrap(), mu).unwrap();
    for a in [1e-8, 1e-4, 0.01, 0.1, 0.5] {
        let e = empirical.beta_at(a);
        assert!(e >= gaussian_beta(mu, a) - 1e-12);
        assert!(e >= analytic.beta_at(a) - 1e-3, "alpha {a}");
    }
}

#[test]
fn tiny_alpha_pairs_exactly() {
    let cfg = McConfig::new(10, 300, 3, 1.5, 1e-300, 8).with_source(StreamSource::Synthetic {
        regime_length: 60,
        seed: 2,
    });
    let f = regret_experiment(Algorithm::Ftpl, &cfg).unwrap();
    let a = regret_experiment(Algorithm::AdaBatch, &cfg).unwrap();
    assert_eq!(f.regret, a.regret);
}

#[test]
fn alternating_stream_within_bound() {
    let rows: Vec<Vec<f64>> = (0..2000).map(|t| if t % 2 == 0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] }).collect();
    let stream = GainStream::from_rows(rows).unwrap();
    let cfg = McConfig::new(200, 2000, 2, SQRT_2, 0.01, 12);
    let s = regret_experiment_on(Algorithm::Ftpl, &cfg, &stream).unwrap();
    assert!(s.summary.mean <= s.bound.unwrap() + 3.0 * s.summary.std_err);
}

#[test]
fn meta_with_default_zoo_reports_bound() {
    let mut cfg = McConfig::new(4, 200, 4, 0.5, 0.01, 1).with_source(StreamSource::Synthetic {
        regime_length: 50,
        seed: 1,
    });
    cfg.learners.truncate(4);
    let s = regret_experiment(Algorithm::Meta, &cfg).unwrap();
    assert!(s.bound.unwrap() > 0.0);
    assert_eq!(s.regret.len(), 4);
}
