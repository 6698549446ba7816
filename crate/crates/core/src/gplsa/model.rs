//! Fitted GPLSA parameters and the expected-rating predictor.

use serde::{Deserialize, Serialize};

use crate::data::RatingBounds;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-item, per-topic Gaussian parameters of one domain, item-major
/// (`mu[i * k + z]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DomainGaussians<F: Scalar> {
    pub n_items: usize,
    pub mu: Vec<F>,
    pub sigma: Vec<F>,
}

impl<F: Scalar> DomainGaussians<F> {
    pub fn mu(&self, i: usize, k: usize) -> &[F] {
        &self.mu[i * k..(i + 1) * k]
    }

    pub fn sigma(&self, i: usize, k: usize) -> &[F] {
        &self.sigma[i * k..(i + 1) * k]
    }
}

/// A single tied user-topic table `P(z|u)` shared by every domain, plus each
/// domain's item Gaussians. Domain `0` is the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LatentModel<F: Scalar> {
    pub k: usize,
    pub n_users: usize,
    /// Row-stochastic, user-major (`user_topics[u * k + z]`).
    pub user_topics: Vec<F>,
    pub domains: Vec<DomainGaussians<F>>,
    pub bounds: RatingBounds<F>,
}

impl<F: Scalar> LatentModel<F> {
    #[inline]
    pub fn topics(&self, u: usize) -> &[F] {
        &self.user_topics[u * self.k..(u + 1) * self.k]
    }

    pub fn domain_count(&self) -> usize {
        self.domains.len()
    }

    pub fn n_target_items(&self) -> usize {
        self.domains[0].n_items
    }

    /// Expected rating of user `u` on target item `i`, clamped to the rating
    /// bounds.
    pub fn predict(&self, u: usize, i: usize) -> Result<F> {
        if u >= self.n_users {
            return Err(Error::IndexOutOfRange(format!("user {u} >= {}", self.n_users)));
        }
        if i >= self.n_target_items() {
            return Err(Error::IndexOutOfRange(format!("item {i} >= {}", self.n_target_items())));
        }
        Ok(self.predict_in(0, u, i))
    }

    /// Unchecked prediction in any domain.
    #[inline]
    pub fn predict_in(&self, l: usize, u: usize, i: usize) -> F {
        let mu = self.domains[l].mu(i, self.k);
        let raw: F = self.topics(u).iter().zip(mu).map(|(&p, &m)| p * m).sum();
        self.bounds.clamp(raw)
    }

    /// Prediction for a user the model has never seen: uniform `P(z|u)`.
    pub fn predict_unseen_user(&self, i: usize) -> Result<F> {
        if i >= self.n_target_items() {
            return Err(Error::IndexOutOfRange(format!("item {i} >= {}", self.n_target_items())));
        }
        let mu = self.domains[0].mu(i, self.k);
        let raw = mu.iter().copied().sum::<F>() / F::from_usize(self.k).unwrap();
        Ok(self.bounds.clamp(raw))
    }

    /// Checks the stochastic-row and floor invariants; returns the first
    /// violation found.
    pub fn check_invariants(&self, sigma_floor: F, tol: F) -> std::result::Result<(), String> {
        for u in 0..self.n_users {
            let row = self.topics(u);
            if row.iter().any(|&p| !(p >= F::zero())) {
                return Err(format!("negative or NaN P(z|u) for user {u}"));
            }
            let s: F = row.iter().copied().sum();
            if (s - F::one()).abs() > tol {
                return Err(format!("P(z|u) for user {u} sums to {s}"));
            }
        }
        for (l, d) in self.domains.iter().enumerate() {
            if let Some(p) = d.sigma.iter().position(|&s| !(s >= sigma_floor)) {
                return Err(format!("domain {l}: sigma {} below floor at {p}", d.sigma[p]));
            }
            if d.mu.iter().any(|m| !m.is_finite()) {
                return Err(format!("domain {l}: non-finite mean"));
            }
        }
        Ok(())
    }
}

/// Anything that scores `(user, target item)` pairs by dense index.
pub trait Predictor<F: Scalar>: Sync {
    fn predict(&self, u: usize, i: usize) -> Result<F>;
}

impl<F: Scalar> Predictor<F> for LatentModel<F> {
    fn predict(&self, u: usize, i: usize) -> Result<F> {
        LatentModel::predict(self, u, i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(topics: Vec<f64>, mu: Vec<f64>) -> LatentModel<f64> {
        let k = topics.len();
        LatentModel {
            k,
            n_users: 1,
            user_topics: topics,
            domains: vec![DomainGaussians { n_items: 1, sigma: vec![1.0; mu.len()], mu }],
            bounds: RatingBounds::default(),
        }
    }

    #[test]
    fn single_topic_identity() {
        assert_eq!(model(vec![1.0], vec![3.2]).predict(0, 0).unwrap(), 3.2);
    }

    #[test]
    fn symmetric_average() {
        assert_eq!(model(vec![0.5, 0.5], vec![2.0, 4.0]).predict(0, 0).unwrap(), 3.0);
    }

    #[test]
    fn clamped_to_upper_bound() {
        let m = model(vec![0.9, 0.1], vec![5.8, 5.0]);
        let raw: f64 = 0.9 * 5.8 + 0.1 * 5.0;
        assert!((raw - 5.72).abs() < 1e-12);
        assert_eq!(m.predict(0, 0).unwrap(), 5.0);
    }

    #[test]
    fn out_of_range_index() {
        let m = model(vec![1.0], vec![3.0]);
        assert!(matches!(m.predict(1, 0), Err(Error::IndexOutOfRange(_))));
        assert!(matches!(m.predict(0, 1), Err(Error::IndexOutOfRange(_))));
        assert_eq!(m.predict_unseen_user(0).unwrap(), 3.0);
    }
}
