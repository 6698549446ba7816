//! Item-level tolerance loss and the variance-penalized exponential loss.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Outcome of the τ-tolerance test on one item column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Indicator {
    /// `-1`: mean absolute error within τ.
    Within,
    /// `+1`: mean absolute error above τ.
    Mispredicted,
}

impl Indicator {
    pub fn sign<F: Scalar>(self) -> F {
        match self {
            Indicator::Within => -F::one(),
            Indicator::Mispredicted => F::one(),
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Indicator::Within => -1,
            Indicator::Mispredicted => 1,
        }
    }
}

/// `-1` if `Σ|x̂ - x| ≤ τ · nnz`, else `+1`.
pub fn item_indicator<F: Scalar>(truth: &[F], predicted: &[F], tau: F) -> Result<Indicator> {
    if truth.is_empty() {
        return invalid("item indicator needs at least one rating");
    }
    if truth.len() != predicted.len() {
        return invalid(format!("{} ratings but {} predictions", truth.len(), predicted.len()));
    }
    let abs: F = truth.iter().zip(predicted).map(|(&x, &p)| (p - x).abs()).sum();
    Ok(indicator_from_abs_sum(abs, truth.len(), tau))
}

#[inline]
pub(crate) fn indicator_from_abs_sum<F: Scalar>(abs_sum: F, nnz: usize, tau: F) -> Indicator {
    if abs_sum <= tau * F::from_usize(nnz).unwrap() {
        Indicator::Within
    } else {
        Indicator::Mispredicted
    }
}

/// `e^{±1}` for an indicator.
pub fn exp_item_loss<F: Scalar>(indicator: Indicator) -> F {
    indicator.sign::<F>().exp()
}

/// `Σ l_i + γ · sqrt(Σ_{i>j} (l_i − l_j)²)`.
///
/// The pairwise sum is evaluated through `n·Σl² − (Σl)²`.
pub fn vpb_loss<F: Scalar>(losses: &[F], gamma: F) -> Result<F> {
    if losses.is_empty() {
        return invalid("loss vector is empty");
    }
    if !(gamma >= F::zero() && gamma <= F::one()) {
        return invalid("gamma must lie in [0, 1]");
    }
    let n = F::from_usize(losses.len()).unwrap();
    let s: F = losses.iter().copied().sum();
    let mean = s / n;
    // Centered form of n·Σl² − (Σl)² avoids cancellation.
    let pairwise: F = n * losses.iter().map(|&l| (l - mean) * (l - mean)).sum::<F>();
    Ok(s + gamma * pairwise.max(F::zero()).sqrt())
}
