use std::collections::BTreeSet;

use proptest::prelude::*;

use stlcf::boost::{compute_alpha, update_target_weights, WeightState};
use stlcf::data::{parse_ratings_str, split_holdout, write_ratings, AlignedCollection, RatingsMatrix};
use stlcf::gplsa::{constant_weights, fit_tgplsa, EmConfig};
use stlcf::synth::{generate, SynthConfig};

fn small(seed: u64, users: usize, items: usize, sources: usize, density: f64) -> AlignedCollection<f64> {
    let cfg = SynthConfig {
        n_users: users,
        n_target_items: items,
        source_items: vec![items; sources],
        source_densities: vec![density.min(1.0) * 1.5; sources],
        target_density: density,
        inconsistency_rho: 0.3,
        k_true: 3,
        seed,
        ..SynthConfig::default()
    };
    generate(&cfg).unwrap().0
}

fn cells(m: &RatingsMatrix<f64>) -> BTreeSet<(String, String, u64)> {
    m.triples().map(|t| (m.user_ids().id(t.user).to_string(), m.item_ids().id(t.item).to_string(), t.rating.to_bits())).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn holdout_partitions_the_entries(seed in any::<u64>(), fraction in 0.0f64..0.95, users in 5usize..40, items in 5usize..40) {
        let m = small(seed, users, items, 0, 0.3).target;
        let s = split_holdout(&m, fraction, seed ^ 1).unwrap();
        prop_assert_eq!(s.test.nnz(), (fraction * m.nnz() as f64).round() as usize);
        let (train, test, all) = (cells(&s.train), cells(&s.test), cells(&m));
        prop_assert!(train.is_disjoint(&test));
        prop_assert_eq!(train.union(&test).cloned().collect::<BTreeSet<_>>(), all);
    }

    #[test]
    fn written_ratings_parse_back(seed in any::<u64>(), users in 1usize..30, items in 1usize..30) {
        let m = small(seed, users, items, 0, 0.4).target;
        let mut buf = Vec::new();
        write_ratings(&mut buf, &m).unwrap();
        let back = parse_ratings_str(std::str::from_utf8(&buf).unwrap(), m.bounds()).unwrap();
        prop_assert_eq!(cells(&back), cells(&m));
    }

    #[test]
    fn weight_updates_normalize_and_emphasize(
        w in prop::collection::vec(0.01f64..1.0, 2..30),
        signs in prop::collection::vec(prop::option::weighted(0.9, prop::bool::ANY), 30),
        alpha in 0.001f64..2.0,
    ) {
        let n = w.len();
        let s: f64 = w.iter().sum();
        let start: Vec<f64> = w.iter().map(|x| x / s).collect();
        let g: Vec<Option<f64>> = signs[..n].iter().map(|b| b.map(|bad| if bad { 1.0 } else { -1.0 })).collect();
        let mut state = WeightState { target: start.clone(), sources: Vec::new() };
        update_target_weights(&mut state, &g, alpha);
        prop_assert!((state.target.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let ratio = |i: usize| state.target[i] / start[i];
        let bad: Vec<f64> = (0..n).filter(|&i| g[i] == Some(1.0)).map(ratio).collect();
        let good: Vec<f64> = (0..n).filter(|&i| g[i] == Some(-1.0)).map(ratio).collect();
        let bad_min = bad.iter().cloned().fold(f64::INFINITY, f64::min);
        let good_max = good.iter().cloned().fold(0.0, f64::max);
        prop_assert!(bad.is_empty() || good.is_empty() || bad_min > good_max);
    }

    #[test]
    fn alpha_is_scale_invariant(
        w in prop::collection::vec(0.01f64..1.0, 2..40),
        split in 1usize..39,
        gamma in 0.0f64..=1.0,
        c in 1e-3f64..1e3,
    ) {
        let n = w.len();
        let split = split.min(n - 1);
        let mis: Vec<usize> = (0..split).collect();
        let within: Vec<usize> = (split..n).collect();
        let scaled: Vec<f64> = w.iter().map(|x| x * c).collect();
        let a = compute_alpha(&w, &mis, &within, gamma, n, 2.0).unwrap();
        let b = compute_alpha(&scaled, &mis, &within, gamma, n, 2.0).unwrap();
        prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn em_never_increases_the_unit_weight_nll(seed in any::<u64>(), k in 1usize..5, sources in 0usize..3, lambda in 0.1f64..0.9) {
        let data = small(seed, 40, 30, sources, 0.2);
        let cfg = EmConfig { k, lambda, max_iters: 25, seed, ..EmConfig::default() };
        let fit = fit_tgplsa(&data, &constant_weights(&data, 1.0), &cfg).unwrap();
        for w in fit.trace.nll.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn predictions_stay_in_bounds(seed in any::<u64>(), k in 1usize..5, noise in 0.1f64..3.0) {
        let cfg = SynthConfig { n_users: 30, n_target_items: 20, source_items: vec![20], target_density: 0.3, noise_sigma: noise, seed, ..SynthConfig::default() };
        let data: AlignedCollection<f64> = generate(&cfg).unwrap().0;
        let em = EmConfig { k, max_iters: 15, seed, ..EmConfig::default() };
        let model = fit_tgplsa(&data, &constant_weights(&data, 1.0), &em).unwrap().model;
        for i in 0..data.target.n_items() {
            let p = model.predict_unseen_user(i).unwrap();
            prop_assert!((1.0..=5.0).contains(&p));
            for u in 0..data.target.n_users() {
                let p = model.predict(u, i).unwrap();
                prop_assert!((1.0..=5.0).contains(&p), "{}", p);
            }
        }
    }
}
