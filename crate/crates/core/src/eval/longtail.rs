//! Held-out error broken down by how many training ratings each user has.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::RatingsMatrix;
use crate::error::{invalid, Result};
use crate::gplsa::Predictor;
use crate::scalar::Scalar;

/// Width of the count buckets `1-5`, `6-10`, ..., `46-50`.
pub const BUCKET_WIDTH: usize = 5;
pub const BUCKET_LIMIT: usize = 50;

/// Bucket of a user by training rating count. Users without training
/// ratings land in `0`, users above the limit in `>50`.
pub fn bucket_index(count: usize) -> usize {
    match count {
        0 => 0,
        c if c > BUCKET_LIMIT => BUCKET_LIMIT / BUCKET_WIDTH + 1,
        c => (c - 1) / BUCKET_WIDTH + 1,
    }
}

pub fn bucket_label(index: usize) -> String {
    let last = BUCKET_LIMIT / BUCKET_WIDTH;
    match index {
        0 => "0".into(),
        b if b > last => format!(">{BUCKET_LIMIT}"),
        b => format!("{}-{}", (b - 1) * BUCKET_WIDTH + 1, b * BUCKET_WIDTH),
    }
}

pub fn bucket_of(count: usize) -> String {
    bucket_label(bucket_index(count))
}

/// Sort key of a bucket label: its index, or `usize::MAX` if unrecognized.
pub fn bucket_order(label: &str) -> usize {
    (0..=BUCKET_LIMIT / BUCKET_WIDTH + 1).find(|&b| bucket_label(b) == label).unwrap_or(usize::MAX)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketRow {
    pub bucket: String,
    pub n_users: usize,
    pub n_ratings: usize,
    /// RMSE per method name.
    pub rmse: BTreeMap<String, f64>,
}

/// Per-bucket RMSE from precomputed predictions, one vector per method in
/// `test` storage order. Empty buckets are omitted.
pub fn long_tail_from_predictions<F: Scalar>(
    train: &RatingsMatrix<F>,
    test: &RatingsMatrix<F>,
    methods: &[(String, Vec<F>)],
) -> Result<Vec<BucketRow>> {
    if train.n_users() != test.n_users() {
        return invalid("train and test must share the user axis");
    }
    for (name, p) in methods {
        if p.len() != test.nnz() {
            return invalid(format!("method {name}: {} predictions for {} test ratings", p.len(), test.nnz()));
        }
    }
    let n_buckets = bucket_index(usize::MAX) + 1;
    let mut users = vec![0usize; n_buckets];
    let mut ratings = vec![0usize; n_buckets];
    let mut sq = vec![vec![0.0f64; n_buckets]; methods.len()];
    for u in 0..test.n_users() {
        let range = test.row_range(u);
        if range.is_empty() {
            continue;
        }
        let b = bucket_index(train.user_nnz(u));
        users[b] += 1;
        ratings[b] += range.len();
        for (m, (_, p)) in methods.iter().enumerate() {
            for pos in range.clone() {
                let e = (test.values()[pos] - p[pos]).to_f64_lossy();
                sq[m][b] += e * e;
            }
        }
    }
    Ok((0..n_buckets)
        .filter(|&b| ratings[b] > 0)
        .map(|b| BucketRow {
            bucket: bucket_label(b),
            n_users: users[b],
            n_ratings: ratings[b],
            rmse: methods.iter().enumerate().map(|(m, (name, _))| (name.clone(), (sq[m][b] / ratings[b] as f64).sqrt())).collect(),
        })
        .collect())
}

/// Scores every test pair with every method and buckets the errors.
pub fn long_tail_report<F: Scalar>(
    train: &RatingsMatrix<F>,
    test: &RatingsMatrix<F>,
    methods: &[(&str, &dyn Predictor<F>)],
) -> Result<Vec<BucketRow>> {
    let mut scored = Vec::with_capacity(methods.len());
    for (name, p) in methods {
        let preds = test.triples().map(|t| p.predict(t.user, t.item)).collect::<Result<Vec<F>>>()?;
        scored.push((name.to_string(), preds));
    }
    long_tail_from_predictions(train, test, &scored)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges() {
        assert_eq!(bucket_of(4), "1-5");
        assert_eq!(bucket_of(5), "1-5");
        assert_eq!(bucket_of(6), "6-10");
        assert_eq!(bucket_of(50), "46-50");
        assert_eq!(bucket_of(51), ">50");
        assert_eq!(bucket_of(0), "0");
    }
}
