//! Random train/test partitions of one rating matrix.

use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::io::write_ratings_file;
use super::matrix::RatingsMatrix;
use crate::error::{invalid, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct HoldoutSplit<F: Scalar> {
    pub train: RatingsMatrix<F>,
    pub test: RatingsMatrix<F>,
    pub fraction: f64,
    pub seed: u64,
}

/// JSON sidecar written alongside split ratings files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSidecar {
    pub fraction: f64,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
}

/// Chooses `round(fraction · nnz)` entries uniformly at random as the test
/// set. Both halves keep the input's dimensions and ids.
pub fn split_holdout<F: Scalar>(m: &RatingsMatrix<F>, fraction: f64, seed: u64) -> Result<HoldoutSplit<F>> {
    if !(0.0..1.0).contains(&fraction) {
        return invalid(format!("holdout fraction must lie in [0, 1), got {fraction}"));
    }
    let n_test = (fraction * m.nnz() as f64).round() as usize;
    let test_mask = random_mask(m.nnz(), n_test, seed);
    Ok(HoldoutSplit { train: m.filter_positions(|p| !test_mask[p]), test: m.filter_positions(|p| test_mask[p]), fraction, seed })
}

/// Uniformly random subset of exactly `n_keep` entries.
pub fn subsample<F: Scalar>(m: &RatingsMatrix<F>, n_keep: usize, seed: u64) -> Result<RatingsMatrix<F>> {
    if n_keep > m.nnz() {
        return invalid(format!("cannot keep {n_keep} of {} entries", m.nnz()));
    }
    let keep = random_mask(m.nnz(), n_keep, seed);
    Ok(m.filter_positions(|p| keep[p]))
}

fn random_mask(n: usize, chosen: usize, seed: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mask = vec![false; n];
    for p in sample(&mut rng, n, chosen) {
        mask[p] = true;
    }
    mask
}

impl<F: Scalar> HoldoutSplit<F> {
    pub fn sidecar(&self) -> SplitSidecar {
        SplitSidecar { fraction: self.fraction, seed: self.seed, n_train: self.train.nnz(), n_test: self.test.nnz() }
    }

    /// Writes `train.csv`, `test.csv` and `split.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_ratings_file(&dir.join("train.csv"), &self.train)?;
        write_ratings_file(&dir.join("test.csv"), &self.test)?;
        let json = serde_json::to_string_pretty(&self.sidecar())?;
        std::fs::write(dir.join("split.json"), json + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{RatingBounds, RatingTriple};

    fn matrix(n: usize) -> RatingsMatrix<f64> {
        let triples = (0..n).map(|k| RatingTriple { user: k % 4, item: k / 4, rating: 1.0 + (k % 5) as f64 }).collect();
        RatingsMatrix::from_triples(4, n.div_ceil(4), triples, RatingBounds::default()).unwrap()
    }

    #[test]
    fn thirty_percent_of_ten() {
        let s = split_holdout(&matrix(10), 0.3, 7).unwrap();
        assert_eq!((s.test.nnz(), s.train.nnz()), (3, 7));
        for t in s.test.triples() {
            assert!(s.train.get(t.user, t.item).is_none());
        }
    }

    #[test]
    fn zero_fraction_is_identity() {
        let m = matrix(10);
        let s = split_holdout(&m, 0.0, 1).unwrap();
        assert_eq!(s.test.nnz(), 0);
        assert_eq!(s.train, m);
    }

    #[test]
    fn deterministic_by_seed() {
        let m = matrix(40);
        let a = split_holdout(&m, 0.25, 3).unwrap();
        let b = split_holdout(&m, 0.25, 3).unwrap();
        assert_eq!(a.test, b.test);
        assert_eq!(a.train, b.train);
    }

    #[test]
    fn invalid_fraction() {
        assert!(split_holdout(&matrix(4), 1.0, 0).is_err());
        assert!(split_holdout(&matrix(4), -0.1, 0).is_err());
        assert!(subsample(&matrix(4), 5, 0).is_err());
    }
}
