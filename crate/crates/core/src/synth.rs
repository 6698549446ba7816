//! Synthetic cross-domain rating data with controllable source inconsistency.
//!
//! Users carry one topic mixture shared by every domain. Each item has a
//! mean rating per topic; an observed cell draws a topic from the user's
//! mixture and a Gaussian rating around that topic's mean. For a chosen
//! fraction of each source's items the topic is instead drawn uniformly at
//! random per cell, so their ratings carry no information about the user's
//! actual preferences and mislead a model that trusts them.

use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{write_ratings_file, AlignedCollection, IdMap, Orientation, RatingBounds, RatingTriple, RatingsMatrix};
use crate::error::{invalid, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_users: usize,
    pub n_target_items: usize,
    /// Item count of each source domain.
    pub source_items: Vec<usize>,
    /// Generative topic count.
    pub k_true: usize,
    pub target_density: f64,
    pub source_densities: Vec<f64>,
    /// Fraction of each source's items whose ratings ignore user preferences.
    pub inconsistency_rho: f64,
    pub noise_sigma: f64,
    pub rating_min: f64,
    pub rating_max: f64,
    /// Symmetric Dirichlet concentration of the user topic mixtures.
    pub topic_concentration: f64,
    /// Log-normal spread of per-user activity in the target domain; `0`
    /// gives every user the same cell probability.
    pub target_activity_spread: f64,
    /// Fraction of users who rate `heavy_user_activity` times as many target
    /// items as the rest. Activities are rescaled to keep the expected
    /// target density at `target_density`.
    pub heavy_user_fraction: f64,
    pub heavy_user_activity: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_users: 500,
            n_target_items: 300,
            source_items: vec![300],
            k_true: 5,
            target_density: 0.02,
            source_densities: vec![0.1],
            inconsistency_rho: 0.0,
            noise_sigma: 0.25,
            rating_min: 1.0,
            rating_max: 5.0,
            topic_concentration: 0.3,
            target_activity_spread: 0.0,
            heavy_user_fraction: 0.0,
            heavy_user_activity: 1.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.n_target_items == 0 || self.k_true == 0 || self.source_items.contains(&0) {
            return invalid("all counts must be at least 1");
        }
        if self.source_items.len() != self.source_densities.len() {
            return invalid("source_items and source_densities must have the same length");
        }
        let dens_ok = |d: f64| d > 0.0 && d <= 1.0;
        if !dens_ok(self.target_density) || !self.source_densities.iter().all(|&d| dens_ok(d)) {
            return invalid("densities must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.inconsistency_rho) {
            return invalid("inconsistency_rho must lie in [0, 1]");
        }
        if !(self.noise_sigma > 0.0) {
            return invalid("noise_sigma must be positive");
        }
        if !(self.topic_concentration > 0.0) || !(self.target_activity_spread >= 0.0) {
            return invalid("topic_concentration must be positive and target_activity_spread nonnegative");
        }
        if !(0.0..=1.0).contains(&self.heavy_user_fraction) || !(self.heavy_user_activity > 0.0) {
            return invalid("heavy_user_fraction must lie in [0, 1] and heavy_user_activity be positive");
        }
        RatingBounds::new(self.rating_min, self.rating_max)?;
        Ok(())
    }

    pub fn bounds(&self) -> RatingBounds<f64> {
        RatingBounds { min: self.rating_min, max: self.rating_max }
    }
}

/// Generative parameters behind a synthetic collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub k_true: usize,
    /// User-major `n_users × k_true`.
    pub user_topics: Vec<f64>,
    /// Item-major `n_items × k_true`.
    pub target_means: Vec<f64>,
    pub source_means: Vec<Vec<f64>>,
    /// Sorted indices of each source's inconsistent items.
    pub inconsistent_items: Vec<Vec<usize>>,
}

fn dirichlet(rng: &mut ChaCha8Rng, gamma: &Gamma<f64>, k: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
    let s: f64 = v.iter().sum();
    if s > 0.0 && s.is_finite() {
        v.iter_mut().for_each(|x| *x /= s);
    } else {
        v.iter_mut().for_each(|x| *x = 0.0);
        v[rng.random_range(0..k)] = 1.0;
    }
    v
}

fn categorical(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let x: f64 = rng.random();
    let mut acc = 0.0;
    for (z, &p) in probs.iter().enumerate() {
        acc += p;
        if x < acc {
            return z;
        }
    }
    probs.len() - 1
}

fn uniform_means(rng: &mut ChaCha8Rng, n: usize, k: usize, b: RatingBounds<f64>) -> Vec<f64> {
    (0..n * k).map(|_| rng.random_range(b.min..=b.max)).collect()
}

struct DomainSpec<'a> {
    n_items: usize,
    density: f64,
    means: &'a [f64],
    inconsistent: &'a [bool],
    activity: &'a [f64],
    user_prefix: &'a str,
    item_prefix: String,
}

fn sample_domain<F: Scalar>(rng: &mut ChaCha8Rng, cfg: &SynthConfig, user_topics: &[f64], d: DomainSpec<'_>) -> Result<RatingsMatrix<F>> {
    let k = cfg.k_true;
    let b = cfg.bounds();
    let uniform = vec![1.0 / k as f64; k];
    let mut triples = Vec::new();
    for u in 0..cfg.n_users {
        let p = (d.density * d.activity[u]).min(1.0);
        let topics = &user_topics[u * k..(u + 1) * k];
        for i in 0..d.n_items {
            if rng.random::<f64>() >= p {
                continue;
            }
            let mix = if d.inconsistent[i] { &uniform[..] } else { topics };
            let z = categorical(rng, mix);
            let noise: f64 = rng.sample(StandardNormal);
            let r = b.clamp(d.means[i * k + z] + cfg.noise_sigma * noise);
            triples.push(RatingTriple { user: u, item: i, rating: F::lit(r) });
        }
    }
    let bounds = RatingBounds::new(F::lit(b.min), F::lit(b.max))?;
    RatingsMatrix::with_ids(IdMap::numbered(d.user_prefix, cfg.n_users), IdMap::numbered(&d.item_prefix, d.n_items), triples, bounds)
}

/// Draws a shared-users collection (target plus one matrix per source) and
/// its ground truth. Deterministic in `cfg`.
pub fn generate<F: Scalar>(cfg: &SynthConfig) -> Result<(AlignedCollection<F>, GroundTruth)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let k = cfg.k_true;
    let b = cfg.bounds();
    let gamma = Gamma::new(cfg.topic_concentration, 1.0).map_err(|e| crate::Error::InvalidArgument(e.to_string()))?;
    let user_topics: Vec<f64> = (0..cfg.n_users).flat_map(|_| dirichlet(&mut rng, &gamma, k)).collect();
    let target_means = uniform_means(&mut rng, cfg.n_target_items, k, b);
    let mut source_means = Vec::new();
    let mut inconsistent_items = Vec::new();
    for &n in &cfg.source_items {
        source_means.push(uniform_means(&mut rng, n, k, b));
        let count = (cfg.inconsistency_rho * n as f64).round() as usize;
        let mut chosen = sample(&mut rng, n, count).into_vec();
        chosen.sort_unstable();
        inconsistent_items.push(chosen);
    }
    let s = cfg.target_activity_spread;
    let mut target_activity: Vec<f64> = (0..cfg.n_users)
        .map(|_| {
            let g: f64 = rng.sample(StandardNormal);
            (s * g - 0.5 * s * s).exp()
        })
        .collect();
    let n_heavy = (cfg.heavy_user_fraction * cfg.n_users as f64).round() as usize;
    for u in sample(&mut rng, cfg.n_users, n_heavy) {
        target_activity[u] = cfg.heavy_user_activity;
    }
    let f = n_heavy as f64 / cfg.n_users as f64;
    let scale = (1.0 - f) + f * cfg.heavy_user_activity;
    target_activity.iter_mut().for_each(|a| *a /= scale);
    let flat = vec![1.0; cfg.n_users];

    let no_inconsistency = vec![false; cfg.n_target_items];
    let target = sample_domain(
        &mut rng,
        cfg,
        &user_topics,
        DomainSpec {
            n_items: cfg.n_target_items,
            density: cfg.target_density,
            means: &target_means,
            inconsistent: &no_inconsistency,
            activity: &target_activity,
            user_prefix: "u",
            item_prefix: "t".into(),
        },
    )?;
    let mut sources = Vec::new();
    for (k_src, (&n, &density)) in cfg.source_items.iter().zip(&cfg.source_densities).enumerate() {
        let mut mask = vec![false; n];
        for &i in &inconsistent_items[k_src] {
            mask[i] = true;
        }
        sources.push(sample_domain(
            &mut rng,
            cfg,
            &user_topics,
            DomainSpec {
                n_items: n,
                density,
                means: &source_means[k_src],
                inconsistent: &mask,
                activity: &flat,
                user_prefix: "u",
                item_prefix: format!("s{}_", k_src + 1),
            },
        )?);
    }
    let data = AlignedCollection::from_aligned(target, sources, Orientation::SharedUsers)?;
    Ok((data, GroundTruth { k_true: k, user_topics, target_means, source_means, inconsistent_items }))
}

/// Writes `target.csv`, `source1.csv`, ... and `ground_truth.json`; returns
/// the paths written.
pub fn write_synthetic<F: Scalar>(dir: &Path, data: &AlignedCollection<F>, truth: &GroundTruth) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let target = dir.join("target.csv");
    write_ratings_file(&target, &data.target)?;
    written.push(target);
    for (k, s) in data.sources.iter().enumerate() {
        let p = dir.join(format!("source{}.csv", k + 1));
        write_ratings_file(&p, s)?;
        written.push(p);
    }
    let gt = dir.join("ground_truth.json");
    std::fs::write(&gt, serde_json::to_string(truth)? + "\n")?;
    written.push(gt);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rho_has_no_inconsistent_items() {
        let cfg = SynthConfig {
            n_users: 50,
            n_target_items: 20,
            source_items: vec![30, 10],
            source_densities: vec![0.2, 0.3],
            ..Default::default()
        };
        let (_, truth) = generate::<f64>(&cfg).unwrap();
        assert!(truth.inconsistent_items.iter().all(Vec::is_empty));
    }

    #[test]
    fn inconsistent_count_is_rounded_fraction() {
        let cfg = SynthConfig { n_users: 20, source_items: vec![33], inconsistency_rho: 0.4, ..Default::default() };
        let (_, truth) = generate::<f64>(&cfg).unwrap();
        assert_eq!(truth.inconsistent_items[0].len(), 13);
    }

    #[test]
    fn nnz_within_binomial_bound() {
        let cfg = SynthConfig {
            n_users: 1000,
            n_target_items: 1000,
            target_density: 0.01,
            source_items: vec![1],
            source_densities: vec![0.5],
            ..Default::default()
        };
        let (data, _) = generate::<f64>(&cfg).unwrap();
        let n = 1.0e6;
        let mean = n * 0.01;
        let sd = (n * 0.01 * 0.99_f64).sqrt();
        assert!((data.target.nnz() as f64 - mean).abs() <= 3.0 * sd, "nnz {}", data.target.nnz());
    }

    #[test]
    fn heavy_users_keep_expected_density() {
        let cfg = SynthConfig {
            n_users: 2000,
            n_target_items: 1000,
            target_density: 0.004,
            heavy_user_fraction: 0.01,
            heavy_user_activity: 30.0,
            ..Default::default()
        };
        let (data, _) = generate::<f64>(&cfg).unwrap();
        let mean = 0.004 * 2.0e6;
        assert!((data.target.nnz() as f64 - mean).abs() < 0.05 * mean, "nnz {}", data.target.nnz());
        let heavy = (0..2000).filter(|&u| data.target.user_nnz(u) > 50).count();
        assert!((15..=25).contains(&heavy), "{heavy} heavy users");
    }

    #[test]
    fn deterministic_and_bounded() {
        let cfg = SynthConfig { inconsistency_rho: 0.3, target_activity_spread: 1.0, ..Default::default() };
        let (a, ta) = generate::<f64>(&cfg).unwrap();
        let (b, tb) = generate::<f64>(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        for m in a.domains() {
            assert!(m.values().iter().all(|&r| (1.0..=5.0).contains(&r)));
        }
    }

    #[test]
    fn consistent_item_mean_matches_population_mixture() {
        let cfg = SynthConfig {
            n_users: 1000,
            n_target_items: 3,
            target_density: 0.5,
            source_items: vec![1],
            source_densities: vec![0.1],
            noise_sigma: 0.1,
            seed: 11,
            ..Default::default()
        };
        let (data, truth) = generate::<f64>(&cfg).unwrap();
        let k = truth.k_true;
        for i in 0..3 {
            let col: Vec<(usize, f64)> = data.target.item_col(i).map(|(u, r, _)| (u, r)).collect();
            let sample_mean = col.iter().map(|c| c.1).sum::<f64>() / col.len() as f64;
            let expected = col
                .iter()
                .map(|&(u, _)| (0..k).map(|z| truth.user_topics[u * k + z] * truth.target_means[i * k + z]).sum::<f64>())
                .sum::<f64>()
                / col.len() as f64;
            // Sampling error of a mean over ~500 draws with spread < 2 rating units.
            assert!((sample_mean - expected).abs() < 0.25, "item {i}: {sample_mean} vs {expected}");
        }
    }
}
