use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Hyperparameters of one (T)GPLSA fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default, deny_unknown_fields)]
pub struct EmConfig<F: Scalar> {
    /// Number of latent topics.
    pub k: usize,
    /// Total share of the likelihood given to source domains; the target
    /// receives `1 - lambda`.
    pub lambda: F,
    /// Per-source shares summing to `lambda`. `None` splits it evenly.
    pub source_lambdas: Option<Vec<F>>,
    pub max_iters: usize,
    /// Stop once the relative objective improvement of an iteration falls
    /// below this.
    pub rel_tol: F,
    /// Lower bound on every item-topic standard deviation, in rating units.
    pub sigma_floor: F,
    pub seed: u64,
}

impl<F: Scalar> Default for EmConfig<F> {
    fn default() -> Self {
        Self { k: 50, lambda: F::lit(0.5), source_lambdas: None, max_iters: 100, rel_tol: F::lit(1e-4), sigma_floor: F::lit(0.05), seed: 0 }
    }
}

impl<F: Scalar> EmConfig<F> {
    pub fn validate(&self, n_sources: usize) -> Result<()> {
        if self.k == 0 {
            return invalid("k must be at least 1");
        }
        if !(self.lambda > F::zero() && self.lambda < F::one()) {
            return invalid(format!("lambda must lie in (0, 1), got {}", self.lambda));
        }
        if !(self.rel_tol > F::zero()) {
            return invalid("rel_tol must be positive");
        }
        if !(self.sigma_floor > F::zero()) {
            return invalid("sigma_floor must be positive");
        }
        if self.max_iters == 0 {
            return invalid("max_iters must be at least 1");
        }
        if let Some(shares) = &self.source_lambdas {
            if shares.len() != n_sources {
                return invalid(format!("{} source lambdas given for {n_sources} sources", shares.len()));
            }
            if shares.iter().any(|&s| !(s >= F::zero()) || !s.is_finite()) {
                return invalid("source lambdas must be nonnegative");
            }
            let total: F = shares.iter().copied().sum();
            if (total - self.lambda).abs() > F::lit(1e-6) * self.lambda.max(F::one()) {
                return invalid(format!("source lambdas sum to {total}, expected lambda = {}", self.lambda));
            }
        }
        Ok(())
    }

    /// Likelihood share of each domain, target first. A collection without
    /// sources gives the target the whole weight.
    pub fn domain_lambdas(&self, n_sources: usize) -> Vec<F> {
        if n_sources == 0 {
            return vec![F::one()];
        }
        let mut out = Vec::with_capacity(n_sources + 1);
        out.push(F::one() - self.lambda);
        match &self.source_lambdas {
            Some(shares) => out.extend_from_slice(shares),
            None => {
                let each = self.lambda / F::from_usize(n_sources).unwrap();
                out.extend(std::iter::repeat_n(each, n_sources));
            }
        }
        out
    }
}
