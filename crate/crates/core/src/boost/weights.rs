//! Item weight vectors and their multiplicative boosting updates.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Target and per-source item weights, each normalized to sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct WeightState<F: Scalar> {
    pub target: Vec<F>,
    pub sources: Vec<Vec<F>>,
}

impl<F: Scalar> WeightState<F> {
    /// `1/n` on every item of every domain.
    pub fn uniform(n_target: usize, n_sources: &[usize]) -> Self {
        let uni = |n: usize| vec![F::one() / F::from_usize(n.max(1)).unwrap(); n];
        Self { target: uni(n_target), sources: n_sources.iter().map(|&n| uni(n)).collect() }
    }

    /// Per-domain vectors in EM order (target first).
    pub fn domain_weights(&self) -> Vec<Vec<F>> {
        std::iter::once(self.target.clone()).chain(self.sources.iter().cloned()).collect()
    }

    /// Domain weights for the target and a single source.
    pub fn single_source_weights(&self, k: usize) -> Vec<Vec<F>> {
        vec![self.target.clone(), self.sources[k].clone()]
    }

    /// Positive entries that sum to one within `tol`, for every vector.
    pub fn is_normalized(&self, tol: F) -> bool {
        std::iter::once(&self.target)
            .chain(&self.sources)
            .all(|w| w.is_empty() || (w.iter().all(|&x| x > F::zero()) && (w.iter().copied().sum::<F>() - F::one()).abs() <= tol))
    }
}

fn normalize<F: Scalar>(w: &mut [F]) {
    let s: F = w.iter().copied().sum();
    if s > F::zero() && s.is_finite() {
        for x in w.iter_mut() {
            *x = (*x / s).max(F::min_positive_value());
        }
    }
}

/// `w_i ← w_i · e^{αG_i}` on items carrying an indicator (`G_i = ±1`), then
/// renormalize. Items with `None` keep their weight before renormalization.
pub fn update_target_weights<F: Scalar>(state: &mut WeightState<F>, indicators: &[Option<F>], alpha: F) {
    assert_eq!(indicators.len(), state.target.len(), "one indicator slot per target item");
    for (w, g) in state.target.iter_mut().zip(indicators) {
        if let Some(g) = g {
            *w *= (alpha * *g).exp();
        }
    }
    normalize(&mut state.target);
}

/// `w_i ← w_i · e^{−αG_i − β}` for source `k`, then renormalize that source.
pub fn update_source_weights<F: Scalar>(state: &mut WeightState<F>, k: usize, indicators: &[Option<F>], alpha: F, beta: F) {
    let w = &mut state.sources[k];
    assert_eq!(indicators.len(), w.len(), "one indicator slot per source item");
    for (x, g) in w.iter_mut().zip(indicators) {
        let g = g.unwrap_or(F::zero());
        *x *= (-alpha * g - beta).exp();
    }
    normalize(w);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signs(v: &[f64]) -> Vec<Option<f64>> {
        v.iter().map(|&g| Some(g)).collect()
    }

    #[test]
    fn zero_alpha_is_identity() {
        let mut s = WeightState::<f64> { target: vec![0.2, 0.3, 0.5], sources: vec![vec![0.6, 0.4]] };
        let before = s.clone();
        update_target_weights(&mut s, &signs(&[1.0, -1.0, 1.0]), 0.0);
        update_source_weights(&mut s, 0, &signs(&[1.0, -1.0]), 0.0, 0.0);
        assert_eq!(s, before);
    }

    #[test]
    fn target_update_two_items() {
        let mut s = WeightState::<f64>::uniform(2, &[]);
        update_target_weights(&mut s, &signs(&[1.0, -1.0]), 1.0);
        let e2 = 1.0_f64.exp().powi(2);
        assert!((s.target[0] - e2 / (1.0 + e2)).abs() < 1e-12);
        assert!((s.target[0] - 0.880_797).abs() < 1e-6);
        assert!((s.target[1] - 0.119_203).abs() < 1e-6);
    }

    #[test]
    fn equal_indicators_cancel() {
        let mut s = WeightState::<f64> { target: vec![0.1, 0.2, 0.7], sources: vec![] };
        update_target_weights(&mut s, &signs(&[1.0, 1.0, 1.0]), 0.8);
        assert!(s.target.iter().zip([0.1, 0.2, 0.7]).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn source_update_two_items() {
        let mut s = WeightState::<f64>::uniform(1, &[2]);
        update_source_weights(&mut s, 0, &signs(&[1.0, -1.0]), 0.5, 0.0);
        assert!((s.sources[0][0] - 0.268_941).abs() < 1e-6);
        assert!((s.sources[0][1] - 0.731_059).abs() < 1e-6);
    }

    #[test]
    fn uniform_beta_cancels_within_a_domain() {
        let mut a = WeightState::<f64>::uniform(1, &[3]);
        let mut b = a.clone();
        let g = signs(&[1.0, -1.0, 1.0]);
        update_source_weights(&mut a, 0, &g, 0.3, 0.0);
        update_source_weights(&mut b, 0, &g, 0.3, -0.9);
        for (x, y) in a.sources[0].iter().zip(&b.sources[0]) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn unrated_items_keep_weight_before_normalization() {
        let mut s = WeightState::<f64>::uniform(3, &[]);
        update_target_weights(&mut s, &[Some(1.0), None, Some(-1.0)], 0.5);
        let raw = [0.5_f64.exp(), 1.0, (-0.5_f64).exp()];
        let total: f64 = raw.iter().sum();
        for (w, r) in s.target.iter().zip(raw) {
            assert!((w - r / total).abs() < 1e-15);
        }
        assert!(s.is_normalized(1e-9));
    }
}
