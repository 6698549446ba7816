use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gplsa::EmConfig;
use crate::scalar::Scalar;

/// Hyperparameters of the selective boosting loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default, deny_unknown_fields)]
pub struct BoostConfig<F: Scalar> {
    /// Boosting rounds `T`.
    pub rounds: usize,
    /// Per-rating error tolerance τ of the item indicator, in rating units.
    pub tau: F,
    /// Weight γ ∈ [0, 1] of the empirical-error variance term. `0` is the
    /// error-only variant.
    pub gamma: F,
    /// Weak-learner settings. Round `t` (1-based) fits with seed
    /// `em.seed + t`.
    pub em: EmConfig<F>,
    /// Refit the per-source fitness weights β every this many rounds.
    pub beta_refresh_every: usize,
    pub alpha_max: F,
}

impl<F: Scalar> Default for BoostConfig<F> {
    fn default() -> Self {
        Self { rounds: 40, tau: F::lit(0.03), gamma: F::lit(0.5), em: EmConfig::default(), beta_refresh_every: 1, alpha_max: F::lit(2.0) }
    }
}

impl<F: Scalar> BoostConfig<F> {
    pub fn validate(&self, n_sources: usize) -> Result<()> {
        if self.rounds == 0 {
            return invalid("at least one boosting round is required");
        }
        if !(self.tau > F::zero()) {
            return invalid("tau must be positive");
        }
        if !(self.gamma >= F::zero() && self.gamma <= F::one()) {
            return invalid("gamma must lie in [0, 1]");
        }
        if !(self.alpha_max > F::zero()) {
            return invalid("alpha_max must be positive");
        }
        if self.beta_refresh_every == 0 {
            return invalid("beta_refresh_every must be at least 1");
        }
        self.em.validate(n_sources)
    }
}
