use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gplsa::{LatentModel, Predictor};
use crate::scalar::Scalar;

/// α-weighted committee of weak learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Ensemble<F: Scalar> {
    pub learners: Vec<LatentModel<F>>,
    pub alphas: Vec<F>,
    /// Boosting round (0-based) each member came from.
    pub member_rounds: Vec<usize>,
    /// Per-target-item training MAE of the non-transfer model (0 for items
    /// without training ratings).
    pub baseline_item_errors: Vec<F>,
}

impl<F: Scalar> Ensemble<F> {
    pub fn len(&self) -> usize {
        self.learners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.learners.is_empty()
    }

    /// `Σ α_t h_t(u, i) / Σ α_t`, clamped to the rating bounds.
    pub fn predict(&self, u: usize, i: usize) -> Result<F> {
        self.predict_prefix(self.len(), u, i)
    }

    /// Prediction of the committee formed by the first `members` learners.
    pub fn predict_prefix(&self, members: usize, u: usize, i: usize) -> Result<F> {
        if self.is_empty() || members == 0 {
            return invalid("ensemble is empty");
        }
        let members = members.min(self.len());
        let mut num = F::zero();
        let mut den = F::zero();
        for (h, &a) in self.learners[..members].iter().zip(&self.alphas) {
            num += a * h.predict(u, i)?;
            den += a;
        }
        Ok(self.learners[0].bounds.clamp(num / den))
    }

    /// Committee prediction for a user outside the shared axis.
    pub fn predict_unseen_user(&self, i: usize) -> Result<F> {
        if self.is_empty() {
            return invalid("ensemble is empty");
        }
        let mut num = F::zero();
        let mut den = F::zero();
        for (h, &a) in self.learners.iter().zip(&self.alphas) {
            num += a * h.predict_unseen_user(i)?;
            den += a;
        }
        Ok(self.learners[0].bounds.clamp(num / den))
    }
}

impl<F: Scalar> Predictor<F> for Ensemble<F> {
    fn predict(&self, u: usize, i: usize) -> Result<F> {
        Ensemble::predict(self, u, i)
    }
}

/// Free-function form of [`Ensemble::predict`].
pub fn ensemble_predict<F: Scalar>(ens: &Ensemble<F>, u: usize, i: usize) -> Result<F> {
    ens.predict(u, i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::RatingBounds;
    use crate::gplsa::DomainGaussians;

    fn constant(v: f64) -> LatentModel<f64> {
        LatentModel {
            k: 1,
            n_users: 1,
            user_topics: vec![1.0],
            domains: vec![DomainGaussians { n_items: 1, mu: vec![v], sigma: vec![1.0] }],
            bounds: RatingBounds::default(),
        }
    }

    fn ens(alphas: Vec<f64>, values: &[f64]) -> Ensemble<f64> {
        Ensemble {
            learners: values.iter().map(|&v| constant(v)).collect(),
            member_rounds: (0..values.len()).collect(),
            alphas,
            baseline_item_errors: vec![0.0],
        }
    }

    #[test]
    fn weighted_means() {
        assert_eq!(ens(vec![0.5, 0.5], &[3.0, 4.0]).predict(0, 0).unwrap(), 3.5);
        assert_eq!(ens(vec![0.7], &[2.25]).predict(0, 0).unwrap(), 2.25);
        assert_eq!(ens(vec![1.0, 3.0], &[2.0, 4.0]).predict(0, 0).unwrap(), 3.5);
        assert_eq!(ens(vec![1.0, 3.0], &[2.0, 4.0]).predict_prefix(1, 0, 0).unwrap(), 2.0);
    }

    #[test]
    fn empty_is_an_error() {
        assert!(ens(vec![], &[]).predict(0, 0).is_err());
    }
}
