use stlcf::data::{RatingBounds, RatingTriple, RatingsMatrix};
use stlcf::eval::{check_holdout, run_experiment, run_spec, sweep, DataSpec, ExperimentConfig, Method, SweepParam, SweepSpec};
use stlcf::synth::SynthConfig;

fn base(methods: &[Method]) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        data: DataSpec::Synth(SynthConfig {
            n_users: 120,
            n_target_items: 80,
            source_items: vec![80],
            target_density: 0.1,
            source_densities: vec![0.15],
            inconsistency_rho: 0.3,
            k_true: 3,
            seed: 5,
            ..SynthConfig::default()
        }),
        methods: methods.to_vec(),
        densities: vec![0.03],
        ..ExperimentConfig::default()
    };
    cfg.boost.rounds = 3;
    cfg.boost.tau = 0.6;
    cfg.boost.em.k = 3;
    cfg.boost.em.max_iters = 30;
    cfg
}

#[test]
fn single_cell_has_zero_spread() {
    let r = run_experiment(&base(&[Method::Gplsa])).unwrap();
    assert_eq!(r.cells.len(), 1);
    let s = &r.summary[0];
    assert_eq!((s.n_runs, s.failures), (1, 0));
    assert_eq!(s.rmse_mean, r.cells[0].rmse);
    assert_eq!(s.rmse_std, Some(0.0));
}

#[test]
fn summary_is_mean_and_sample_std_over_seeds() {
    let mut cfg = base(&[Method::Tgplsa]);
    cfg.seeds = vec![0, 1];
    let r = run_experiment(&cfg).unwrap();
    let v: Vec<f64> = r.cells.iter().map(|c| c.rmse.unwrap()).collect();
    assert_eq!(v.len(), 2);
    let mean = (v[0] + v[1]) / 2.0;
    let std = ((v[0] - mean).powi(2) + (v[1] - mean).powi(2)).sqrt();
    let s = &r.summary[0];
    assert!((s.rmse_mean.unwrap() - mean).abs() < 1e-12);
    assert!((s.rmse_std.unwrap() - std).abs() < 1e-12);
}

#[test]
fn density_by_method_table_has_twelve_cells() {
    let mut cfg = base(&Method::ALL);
    cfg.densities = vec![0.01, 0.02, 0.03];
    let r = run_experiment(&cfg).unwrap();
    assert_eq!(r.summary.len(), 12);
    for d in &cfg.densities {
        for m in Method::ALL {
            let c = r.cell(*d, m).unwrap();
            assert!(c.rmse_mean.is_some(), "{d} {}", m.name());
        }
    }
    // Sparser training data keeps fewer entries.
    let n = |d: f64| r.cells.iter().find(|c| c.density == d).unwrap().n_train;
    assert!(n(0.01) < n(0.02) && n(0.02) < n(0.03));
}

#[test]
fn zero_gamma_row_matches_stlcf_e() {
    let cfg = base(&[Method::StlcfE, Method::StlcfEv]);
    let s = sweep(SweepParam::Gamma, &[0.0], &cfg).unwrap();
    let row = |m: Method| s.rows.iter().find(|r| r.method == m).unwrap().rmse_mean.unwrap();
    assert_eq!(row(Method::StlcfEv).to_bits(), row(Method::StlcfE).to_bits());
}

#[test]
fn one_point_sweep_reproduces_the_experiment() {
    let mut cfg = base(&[Method::StlcfEv]);
    let s = sweep(SweepParam::Tau, &[0.8], &cfg).unwrap();
    cfg.boost.tau = 0.8;
    let r = run_experiment(&cfg).unwrap();
    assert_eq!(s.rows[0].rmse_mean, r.summary[0].rmse_mean);
}

#[test]
fn rounds_sweep_prefix_equals_shorter_run() {
    let mut cfg = base(&[Method::StlcfEv]);
    cfg.boost.rounds = 5;
    let s = sweep(SweepParam::Rounds, &[2.0, 5.0], &cfg).unwrap();
    assert!(!s.alpha_traces.is_empty());
    for t in [2usize, 5] {
        let mut short = cfg.clone();
        short.boost.rounds = t;
        let r = run_experiment(&short).unwrap();
        let row = s.rows.iter().find(|r| r.value == t as f64).unwrap();
        assert_eq!(row.rmse_mean, r.summary[0].rmse_mean, "T={t}");
    }
}

#[test]
fn run_spec_attaches_the_sweep() {
    let mut cfg = base(&[Method::Gplsa]);
    cfg.sweep = Some(SweepSpec { param: SweepParam::K, grid: vec![2.0, 3.0] });
    let r = run_spec(&cfg).unwrap();
    let sw = r.sweep.unwrap();
    assert_eq!(sw.rows.len(), 2);
    assert_eq!(sw.rows[1].rmse_mean, r.summary[0].rmse_mean);
}

#[test]
fn holdout_leaks_are_rejected() {
    let b = RatingBounds::new(1.0, 5.0).unwrap();
    let t = |user, item, rating| RatingTriple { user, item, rating };
    let train = RatingsMatrix::from_triples(2, 2, vec![t(0, 0, 3.0), t(1, 1, 4.0)], b).unwrap();
    let clean = RatingsMatrix::from_triples(2, 2, vec![t(0, 1, 2.0)], b).unwrap();
    let leak = RatingsMatrix::from_triples(2, 2, vec![t(1, 1, 4.0)], b).unwrap();
    assert!(check_holdout(&train, &clean).is_ok());
    assert!(check_holdout(&train, &leak).is_err());
}

#[test]
fn long_tail_buckets_partition_the_test_set() {
    let r = run_experiment(&base(&[Method::Gplsa, Method::StlcfEv])).unwrap();
    for c in &r.cells {
        assert!(!c.long_tail.is_empty());
        assert_eq!(c.long_tail.iter().map(|b| b.n_ratings).sum::<usize>(), c.n_test);
        for b in &c.long_tail {
            assert!(b.n_users > 0 && b.rmse.contains_key(c.method.name()));
        }
    }
}

#[test]
fn unusable_tolerance_fails_the_cell_not_the_run() {
    let mut cfg = base(&[Method::Gplsa, Method::StlcfEv]);
    cfg.boost.tau = 1e-6;
    let r = run_experiment(&cfg).unwrap();
    assert_eq!(r.failed_cells(), 1);
    let bad = r.cells.iter().find(|c| c.method == Method::StlcfEv).unwrap();
    assert!(bad.rmse.is_none() && bad.error.is_some());
}

#[test]
fn config_hash_tracks_content() {
    let a = base(&[Method::Gplsa]);
    let mut b = a.clone();
    assert_eq!(a.hash(), b.hash());
    b.boost.tau = 0.7;
    assert_ne!(a.hash(), b.hash());
    let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
    assert_eq!(back, a);
}
