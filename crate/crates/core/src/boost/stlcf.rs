//! The selective transfer boosting loop.

use serde::{Deserialize, Serialize};

use super::alpha::{compute_alpha, compute_beta};
use super::config::BoostConfig;
use super::ensemble::Ensemble;
use super::loss::{indicator_from_abs_sum, Indicator};
use super::weights::{update_source_weights, update_target_weights, WeightState};
use crate::data::{AlignedCollection, RatingsMatrix};
use crate::error::{invalid, Error, Result};
use crate::gplsa::{fit_gplsa, fit_tgplsa, EmConfig, LatentModel};
use crate::scalar::Scalar;

/// Diagnostics of one boosting round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RoundRecord<F: Scalar> {
    pub alpha: F,
    pub betas: Vec<F>,
    /// Per target item: `+1` mispredicted, `-1` within tolerance, `0` no
    /// training ratings.
    pub target_indicators: Vec<i8>,
    pub source_indicators: Vec<Vec<i8>>,
    /// Mispredicted target items (`I`).
    pub mispredicted: Vec<usize>,
    /// Within-tolerance target items (`J`).
    pub within: Vec<usize>,
    /// Weak learner RMSE on the target training ratings.
    pub train_rmse: F,
    pub em_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct StlcfRun<F: Scalar> {
    pub ensemble: Ensemble<F>,
    pub rounds: Vec<RoundRecord<F>>,
    /// Non-transfer model the β gains are measured against.
    pub baseline: LatentModel<F>,
    pub final_weights: WeightState<F>,
}

/// Sum of absolute errors and count per item of domain `l`, predicted by
/// `model`.
fn item_abs_errors<F: Scalar>(model: &LatentModel<F>, l: usize, m: &RatingsMatrix<F>) -> Vec<(F, usize)> {
    (0..m.n_items())
        .map(|i| {
            let abs = m.item_col(i).map(|(u, r, _)| (model.predict_in(l, u, i) - r).abs()).sum::<F>();
            (abs, m.item_nnz(i))
        })
        .collect()
}

/// Per-item mean absolute training error, `0` where an item has no ratings.
pub fn item_mae<F: Scalar>(model: &LatentModel<F>, l: usize, m: &RatingsMatrix<F>) -> Vec<F> {
    item_abs_errors(model, l, m).into_iter().map(|(abs, n)| if n == 0 { F::zero() } else { abs / F::from_usize(n).unwrap() }).collect()
}

fn indicators<F: Scalar>(errors: &[(F, usize)], tau: F) -> Vec<Option<Indicator>> {
    errors.iter().map(|&(abs, n)| (n > 0).then(|| indicator_from_abs_sum(abs, n, tau))).collect()
}

fn as_signs<F: Scalar>(ind: &[Option<Indicator>]) -> Vec<Option<F>> {
    ind.iter().map(|g| g.map(|g| g.sign())).collect()
}

fn as_i8(ind: &[Option<Indicator>]) -> Vec<i8> {
    ind.iter().map(|g| g.map_or(0, Indicator::as_i8)).collect()
}

fn train_rmse<F: Scalar>(model: &LatentModel<F>, m: &RatingsMatrix<F>) -> F {
    let sq: F = m.triples().map(|t| (model.predict_in(0, t.user, t.item) - t.rating).powi(2)).sum();
    (sq / F::from_usize(m.nnz().max(1)).unwrap()).sqrt()
}

/// Source shares `λ_k ∝ base_k · e^{−β_k}`, rescaled to sum to `λ`.
fn scaled_source_lambdas<F: Scalar>(em: &EmConfig<F>, betas: &[F]) -> Vec<F> {
    let n = betas.len();
    let base = em.domain_lambdas(n);
    let raw: Vec<F> = base[1..].iter().zip(betas).map(|(&b, &beta)| b * (-beta).exp()).collect();
    let total: F = raw.iter().copied().sum();
    if !(total > F::zero()) || !total.is_finite() {
        return base[1..].to_vec();
    }
    raw.into_iter().map(|x| x / total * em.lambda).collect()
}

/// Fits the boosted committee.
///
/// Each round fits a weighted TGPLSA weak learner, flags target and source
/// items whose mean absolute training error exceeds τ, refreshes the
/// per-source fitness β on schedule, chooses α, and reweights: source
/// items by `e^{−αG−β}`, target items by `e^{αG}`. Rounds with α = 0 are left
/// out of the committee.
pub fn run_stlcf<F: Scalar>(data: &AlignedCollection<F>, cfg: &BoostConfig<F>) -> Result<StlcfRun<F>> {
    let data = data.shared_users_view();
    let data = data.as_ref();
    if data.target.nnz() == 0 {
        return invalid("target domain has no observations");
    }
    cfg.validate(data.n_sources())?;
    let n_sources = data.n_sources();

    let baseline = fit_gplsa(&data.target, &cfg.em)?.model;
    let baseline_errors = item_mae(&baseline, 0, &data.target);
    let rated: Vec<usize> = (0..data.target.n_items()).filter(|&i| data.target.item_nnz(i) > 0).collect();
    log::debug!("baseline fitted; {} of {} target items rated", rated.len(), data.target.n_items());

    let source_sizes: Vec<usize> = data.sources.iter().map(|s| s.n_items()).collect();
    let mut weights = WeightState::uniform(data.target.n_items(), &source_sizes);
    let mut betas = vec![F::zero(); n_sources];
    let mut rounds = Vec::with_capacity(cfg.rounds);
    let mut learners = Vec::new();
    let mut alphas = Vec::new();
    let mut member_rounds = Vec::new();

    for t in 0..cfg.rounds {
        let mut em = cfg.em.clone();
        em.seed = cfg.em.seed.wrapping_add(t as u64 + 1);
        if n_sources > 0 {
            em.source_lambdas = Some(scaled_source_lambdas(&cfg.em, &betas));
        }
        let fit = fit_tgplsa(data, &weights.domain_weights(), &em)?;
        let h = fit.model;

        let target_errs = item_abs_errors(&h, 0, &data.target);
        let target_ind = indicators(&target_errs, cfg.tau);
        let source_ind: Vec<Vec<Option<Indicator>>> =
            data.sources.iter().enumerate().map(|(k, s)| indicators(&item_abs_errors(&h, k + 1, s), cfg.tau)).collect();

        if t % cfg.beta_refresh_every == 0 && n_sources > 0 {
            let w_rated: Vec<F> = rated.iter().map(|&i| weights.target[i]).collect();
            let base_rated: Vec<F> = rated.iter().map(|&i| baseline_errors[i]).collect();
            for (k, beta) in betas.iter_mut().enumerate() {
                let single_errors = if n_sources == 1 {
                    item_mae(&h, 0, &data.target)
                } else {
                    let mut single_em = em.clone();
                    single_em.source_lambdas = None;
                    let single = fit_tgplsa(&data.with_single_source(k), &weights.single_source_weights(k), &single_em)?;
                    item_mae(&single.model, 0, &data.target)
                };
                let eps: Vec<F> = rated.iter().map(|&i| single_errors[i]).collect();
                *beta = compute_beta(&w_rated, &eps, &base_rated)?;
            }
        }

        let mispredicted: Vec<usize> = (0..target_ind.len()).filter(|&i| target_ind[i] == Some(Indicator::Mispredicted)).collect();
        let within: Vec<usize> = (0..target_ind.len()).filter(|&i| target_ind[i] == Some(Indicator::Within)).collect();
        let alpha = compute_alpha(&weights.target, &mispredicted, &within, cfg.gamma, rated.len(), cfg.alpha_max)?;

        for k in 0..n_sources {
            update_source_weights(&mut weights, k, &as_signs(&source_ind[k]), alpha, betas[k]);
        }
        update_target_weights(&mut weights, &as_signs(&target_ind), alpha);
        debug_assert!(weights.is_normalized(F::tol(1e-9)), "weights must stay positive and normalized");

        log::info!(
            "round {}: alpha={} |I|={} |J|={} betas={:?} train_rmse={}",
            t + 1,
            alpha,
            mispredicted.len(),
            within.len(),
            betas,
            train_rmse(&h, &data.target)
        );
        rounds.push(RoundRecord {
            alpha,
            betas: betas.clone(),
            target_indicators: as_i8(&target_ind),
            source_indicators: source_ind.iter().map(|s| as_i8(s)).collect(),
            train_rmse: train_rmse(&h, &data.target),
            em_iterations: fit.trace.iterations,
            mispredicted,
            within,
        });
        if alpha > F::zero() {
            learners.push(h);
            alphas.push(alpha);
            member_rounds.push(t);
        }
    }

    if learners.is_empty() {
        let last = rounds.last().expect("at least one round");
        return Err(Error::NoUsefulLearner {
            rounds: rounds.len(),
            last_mispredicted: last.mispredicted.len(),
            last_within: last.within.len(),
        });
    }
    Ok(StlcfRun {
        ensemble: Ensemble { learners, alphas, member_rounds, baseline_item_errors: baseline_errors },
        rounds,
        baseline,
        final_weights: weights,
    })
}
