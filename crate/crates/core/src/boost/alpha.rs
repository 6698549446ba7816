//! Closed-form committee weight α and per-source fitness weight β.

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

fn masses<F: Scalar>(weights: &[F], set: &[usize]) -> (F, F) {
    set.iter().fold((F::zero(), F::zero()), |(s1, s2), &i| (s1 + weights[i], s2 + weights[i] * weights[i]))
}

/// Unclamped minimizer of the variance-penalized exponential loss over α:
///
/// `¼ · ln( [(1−γ)(Σ_J w)² + γ n Σ_J w²] / [(1−γ)(Σ_I w)² + γ n Σ_I w²] )`
///
/// with `I` the mispredicted and `J` the within-tolerance items. Infinite
/// when one side carries no mass.
pub fn raw_alpha<F: Scalar>(weights: &[F], mispredicted: &[usize], within: &[usize], gamma: F, n: usize) -> Result<F> {
    if mispredicted.is_empty() && within.is_empty() {
        return invalid("alpha needs at least one evaluated item");
    }
    let n = F::from_usize(n).unwrap();
    let side = |set: &[usize]| {
        let (s1, s2) = masses(weights, set);
        (F::one() - gamma) * s1 * s1 + gamma * n * s2
    };
    let num = side(within);
    let den = side(mispredicted);
    Ok(F::lit(0.25) * (num / den).ln())
}

/// [`raw_alpha`] clamped to `[0, alpha_max]`: no within-tolerance items give
/// `0`, no mispredicted items give `alpha_max`.
pub fn compute_alpha<F: Scalar>(weights: &[F], mispredicted: &[usize], within: &[usize], gamma: F, n: usize, alpha_max: F) -> Result<F> {
    if within.is_empty() {
        if mispredicted.is_empty() {
            return invalid("alpha needs at least one evaluated item");
        }
        return Ok(F::zero());
    }
    if mispredicted.is_empty() {
        return Ok(alpha_max);
    }
    let a = raw_alpha(weights, mispredicted, within, gamma, n)?;
    if a.is_nan() {
        return Ok(F::zero());
    }
    Ok(a.max(F::zero()).min(alpha_max))
}

/// The γ = 0 special case: `½ · ln(Σ_J w / Σ_I w)`, unclamped.
pub fn adaboost_alpha<F: Scalar>(weights: &[F], mispredicted: &[usize], within: &[usize]) -> Result<F> {
    if mispredicted.is_empty() && within.is_empty() {
        return invalid("alpha needs at least one evaluated item");
    }
    let (sj, _) = masses(weights, within);
    let (si, _) = masses(weights, mispredicted);
    Ok(F::lit(0.5) * (sj / si).ln())
}

/// `Σ w_i (ε_i − ε⃗_i) / ‖w‖₁`: negative when the transfer model's item errors
/// `ε` beat the non-transfer errors `ε⃗`.
pub fn compute_beta<F: Scalar>(target_weights: &[F], transfer_errors: &[F], baseline_errors: &[F]) -> Result<F> {
    if target_weights.len() != transfer_errors.len() || target_weights.len() != baseline_errors.len() {
        return invalid("beta inputs must be aligned");
    }
    let norm: F = target_weights.iter().map(|w| w.abs()).sum();
    if !(norm > F::zero()) {
        return invalid("target weights have zero L1 norm");
    }
    let gain: F = target_weights.iter().zip(transfer_errors.iter().zip(baseline_errors)).map(|(&w, (&e, &b))| w * (e - b)).sum();
    Ok(gain / norm)
}
