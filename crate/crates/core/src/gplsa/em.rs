//! Expectation-maximization for the tied multi-domain Gaussian PLSA model.
//!
//! Every domain's E-step reads the one `P(z|u)` table held by
//! [`LatentModel`], and the `P(z|u)` M-step pools the weighted posteriors of
//! all domains; this tie is what carries knowledge from source domains into
//! the target.
//!
//! Per-entry work is parallel. Every reduction runs over a fixed index order
//! (entries of one user, entries of one item, then users in order), so results
//! do not depend on the worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::EmConfig;
use super::model::{DomainGaussians, LatentModel};
use crate::data::{AlignedCollection, RatingsMatrix};
use crate::error::{invalid, Error, Result};
use crate::scalar::{CompensatedSum, Scalar};

/// Per-domain item weight vectors, target first.
pub type ItemWeights<F> = Vec<Vec<F>>;

/// Every item of every domain weighted by `value`.
pub fn constant_weights<F: Scalar>(data: &AlignedCollection<F>, value: F) -> ItemWeights<F> {
    let view = data.shared_users_view();
    view.domains().map(|m| vec![value; m.n_items()]).collect()
}

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Normal density `N(r; mu, sigma²)`.
#[inline]
pub fn gaussian_density<F: Scalar>(r: F, mu: F, sigma: F) -> F {
    log_gaussian_density(r, mu, sigma).exp()
}

#[inline]
pub fn log_gaussian_density<F: Scalar>(r: F, mu: F, sigma: F) -> F {
    let d = (r - mu) / sigma;
    -F::lit(HALF_LN_2PI) - sigma.ln() - F::lit(0.5) * d * d
}

/// `Pr(z | x)` for every observed entry, one length-`k` block per entry in
/// each domain's CSR order.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorTable<F: Scalar> {
    pub k: usize,
    pub domains: Vec<Vec<F>>,
    /// Entries whose component densities all vanished and fell back to the
    /// uniform posterior.
    pub fallbacks: usize,
}

impl<F: Scalar> PosteriorTable<F> {
    #[inline]
    pub fn get(&self, l: usize, pos: usize) -> &[F] {
        &self.domains[l][pos * self.k..(pos + 1) * self.k]
    }

    /// Entries in domain `l`.
    pub fn len(&self, l: usize) -> usize {
        self.domains[l].len() / self.k
    }
}

fn check_dims<F: Scalar>(model: &LatentModel<F>, data: &AlignedCollection<F>) -> Result<()> {
    if model.domain_count() != data.n_domains() {
        return Err(Error::Dimension(format!("model has {} domains, data {}", model.domain_count(), data.n_domains())));
    }
    if model.n_users != data.target.n_users() {
        return Err(Error::Dimension(format!("model has {} users, data {}", model.n_users, data.target.n_users())));
    }
    for (l, m) in data.domains().enumerate() {
        if m.n_items() != model.domains[l].n_items {
            return Err(Error::Dimension(format!("domain {l}: model {} items, data {}", model.domains[l].n_items, m.n_items())));
        }
    }
    Ok(())
}

fn check_weights<F: Scalar>(data: &AlignedCollection<F>, weights: &[Vec<F>]) -> Result<()> {
    if weights.len() != data.n_domains() {
        return Err(Error::Dimension(format!("{} weight vectors for {} domains", weights.len(), data.n_domains())));
    }
    for (l, (m, w)) in data.domains().zip(weights).enumerate() {
        if w.len() != m.n_items() {
            return Err(Error::Dimension(format!("domain {l}: {} weights for {} items", w.len(), m.n_items())));
        }
        if w.iter().any(|&x| !(x >= F::zero()) || !x.is_finite()) {
            return invalid(format!("domain {l}: item weights must be finite and nonnegative"));
        }
        if m.nnz() > 0 && (0..m.n_items()).all(|i| m.item_nnz(i) == 0 || w[i] == F::zero()) {
            return invalid(format!("domain {l}: every observed item has zero weight"));
        }
    }
    Ok(())
}

/// Per-model tables of `ln P(z|u)`, `ln σ` and `1/σ`, so the inner loops
/// need no logarithms.
struct LogTables<F: Scalar> {
    log_topics: Vec<F>,
    log_sigma: Vec<Vec<F>>,
    inv_sigma: Vec<Vec<F>>,
}

impl<F: Scalar> LogTables<F> {
    fn new(model: &LatentModel<F>) -> Self {
        Self {
            log_topics: model.user_topics.iter().map(|p| p.ln()).collect(),
            log_sigma: model.domains.iter().map(|g| g.sigma.iter().map(|s| s.ln()).collect()).collect(),
            inv_sigma: model.domains.iter().map(|g| g.sigma.iter().map(|s| s.recip()).collect()).collect(),
        }
    }
}

/// `ln P(z|u) + ln N(r; μ_z, σ_z)` for one entry, topic by topic.
#[derive(Clone, Copy)]
struct Terms<'a, F: Scalar> {
    log_topics: &'a [F],
    mu: &'a [F],
    log_sigma: &'a [F],
    inv_sigma: &'a [F],
}

impl<'a, F: Scalar> Terms<'a, F> {
    fn of(tables: &'a LogTables<F>, model: &'a LatentModel<F>, l: usize, u: usize, i: usize) -> Self {
        let k = model.k;
        Self {
            log_topics: &tables.log_topics[u * k..(u + 1) * k],
            mu: model.domains[l].mu(i, k),
            log_sigma: &tables.log_sigma[l][i * k..(i + 1) * k],
            inv_sigma: &tables.inv_sigma[l][i * k..(i + 1) * k],
        }
    }

    #[inline]
    fn term(&self, z: usize, r: F) -> F {
        let d = (r - self.mu[z]) * self.inv_sigma[z];
        self.log_topics[z] - self.log_sigma[z] - F::lit(0.5) * d * d - F::lit(HALF_LN_2PI)
    }
}

/// Writes normalized posteriors into `out` in place and returns the log
/// mixture density; a non-finite return means the uniform fallback was taken.
#[inline]
fn posterior_into<F: Scalar>(out: &mut [F], r: F, terms: Terms<'_, F>) -> F {
    let mut max = F::neg_infinity();
    for (z, o) in out.iter_mut().enumerate() {
        let v = terms.term(z, r);
        *o = v;
        if v > max {
            max = v;
        }
    }
    if !max.is_finite() {
        let u = F::one() / F::from_usize(out.len()).unwrap();
        out.iter_mut().for_each(|x| *x = u);
        return max;
    }
    let mut s = F::zero();
    for x in out.iter_mut() {
        *x = (*x - max).exp();
        s += *x;
    }
    for x in out.iter_mut() {
        *x /= s;
    }
    max + s.ln()
}

/// Posteriors plus the per-entry log mixture densities of `model`.
fn e_step_with_densities<F: Scalar>(model: &LatentModel<F>, data: &AlignedCollection<F>) -> (PosteriorTable<F>, Vec<Vec<F>>) {
    let k = model.k;
    let tables = LogTables::new(model);
    let mut fallbacks = 0;
    let mut domains = Vec::with_capacity(data.n_domains());
    let mut densities = Vec::with_capacity(data.n_domains());
    for (l, m) in data.domains().enumerate() {
        let mut post = vec![F::zero(); m.nnz() * k];
        let mut lm = vec![F::zero(); m.nnz()];
        fallbacks += post
            .par_chunks_mut(k)
            .zip(lm.par_iter_mut())
            .enumerate()
            .map(|(pos, (out, d))| {
                let t = m.entry(pos);
                *d = posterior_into(out, t.rating, Terms::of(&tables, model, l, t.user, t.item));
                usize::from(!d.is_finite())
            })
            .sum::<usize>();
        domains.push(post);
        densities.push(lm);
    }
    (PosteriorTable { k, domains, fallbacks }, densities)
}

/// E-step: `Pr(z|x) ∝ N(r; μ_iz, σ_iz)·P(z|u)` for each entry of each domain,
/// all reading the shared `P(z|u)`.
pub fn e_step<F: Scalar>(model: &LatentModel<F>, data: &AlignedCollection<F>) -> Result<PosteriorTable<F>> {
    let data = data.shared_users_view();
    check_dims(model, &data)?;
    Ok(e_step_with_densities(model, &data).0)
}

/// M-step for the tied table:
/// `P(z|u) ∝ Σ_l λ_l Σ_{(u,i,r) ∈ X^l} w_i^l · Pr(z|x)`. Users without
/// (positively weighted) observations get the uniform row.
pub fn m_step_user_topics<F: Scalar>(
    posteriors: &PosteriorTable<F>,
    data: &AlignedCollection<F>,
    weights: &[Vec<F>],
    cfg: &EmConfig<F>,
) -> Result<Vec<F>> {
    let data = data.shared_users_view();
    check_weights(&data, weights)?;
    let k = posteriors.k;
    let lambdas = cfg.domain_lambdas(data.n_sources());
    let domains: Vec<&RatingsMatrix<F>> = data.domains().collect();
    for (l, m) in domains.iter().enumerate() {
        if posteriors.len(l) != m.nnz() {
            return Err(Error::Dimension(format!("domain {l}: {} posteriors for {} entries", posteriors.len(l), m.nnz())));
        }
    }
    let n_users = data.target.n_users();
    let uniform = F::one() / F::from_usize(k).unwrap();
    let mut table = vec![F::zero(); n_users * k];
    table.par_chunks_mut(k).enumerate().for_each(|(u, row)| {
        for (l, m) in domains.iter().enumerate() {
            for pos in m.row_range(u) {
                let c = lambdas[l] * weights[l][m.item_at(pos)];
                if c == F::zero() {
                    continue;
                }
                for (acc, &p) in row.iter_mut().zip(posteriors.get(l, pos)) {
                    *acc += c * p;
                }
            }
        }
        let s: F = row.iter().copied().sum();
        if s > F::zero() && s.is_finite() {
            row.iter_mut().for_each(|x| *x /= s);
        } else {
            row.iter_mut().for_each(|x| *x = uniform);
        }
    });
    Ok(table)
}

/// M-step for the item Gaussians of every domain: posterior-weighted mean
/// and variance per `(i, z)`, σ floored. `(i, z)` cells without posterior
/// mass keep `previous`.
pub fn m_step_item_gaussians<F: Scalar>(
    posteriors: &PosteriorTable<F>,
    data: &AlignedCollection<F>,
    previous: &[DomainGaussians<F>],
    cfg: &EmConfig<F>,
) -> Result<Vec<DomainGaussians<F>>> {
    let data = data.shared_users_view();
    let k = posteriors.k;
    if previous.len() != data.n_domains() {
        return Err(Error::Dimension("previous gaussians do not match domains".into()));
    }
    let floor = cfg.sigma_floor;
    let mut out = Vec::with_capacity(previous.len());
    for (l, m) in data.domains().enumerate() {
        let prev = &previous[l];
        if prev.n_items != m.n_items() || posteriors.len(l) != m.nnz() {
            return Err(Error::Dimension(format!("domain {l}: gaussian or posterior size mismatch")));
        }
        let mut mu = prev.mu.clone();
        let mut sigma = prev.sigma.clone();
        mu.par_chunks_mut(k).zip(sigma.par_chunks_mut(k)).enumerate().for_each(|(i, (mu_i, sigma_i))| {
            if m.item_nnz(i) == 0 {
                return;
            }
            let mut mass = vec![F::zero(); k];
            let mut first = vec![F::zero(); k];
            for (_, r, pos) in m.item_col(i) {
                for (z, &p) in posteriors.get(l, pos).iter().enumerate() {
                    mass[z] += p;
                    first[z] += p * r;
                }
            }
            let mut second = vec![F::zero(); k];
            for z in 0..k {
                if mass[z] > F::zero() {
                    mu_i[z] = first[z] / mass[z];
                }
            }
            for (_, r, pos) in m.item_col(i) {
                for (z, &p) in posteriors.get(l, pos).iter().enumerate() {
                    let d = r - mu_i[z];
                    second[z] += p * d * d;
                }
            }
            for z in 0..k {
                if mass[z] > F::zero() {
                    sigma_i[z] = (second[z] / mass[z]).sqrt().max(floor);
                }
            }
        });
        out.push(DomainGaussians { n_items: prev.n_items, mu, sigma });
    }
    Ok(out)
}

#[inline]
fn log_mixture<F: Scalar>(r: F, terms: Terms<'_, F>) -> F {
    let k = terms.mu.len();
    let mut max = F::neg_infinity();
    for z in 0..k {
        let v = terms.term(z, r);
        if v > max {
            max = v;
        }
    }
    if !max.is_finite() {
        return max;
    }
    let mut s = F::zero();
    for z in 0..k {
        s += (terms.term(z, r) - max).exp();
    }
    max + s.ln()
}

/// `(joint_nll, weighted_nll)` from per-entry log mixture densities,
/// summed per user and then over users in index order.
fn reduce_objectives<F: Scalar>(data: &AlignedCollection<F>, densities: &[Vec<F>], weights: &[Vec<F>], lambdas: &[F]) -> (F, F) {
    let domains: Vec<&RatingsMatrix<F>> = data.domains().collect();
    let partial: Vec<(F, F)> = (0..data.target.n_users())
        .into_par_iter()
        .map(|u| {
            let mut joint = CompensatedSum::new();
            let mut weighted = CompensatedSum::new();
            for (l, m) in domains.iter().enumerate() {
                for pos in m.row_range(u) {
                    let w = weights[l][m.item_at(pos)];
                    let lm = densities[l][pos];
                    joint.add(-lambdas[l] * (w.ln() + lm));
                    if w > F::zero() {
                        weighted.add(-lambdas[l] * w * lm);
                    }
                }
            }
            (joint.value(), weighted.value())
        })
        .collect();
    let mut joint = CompensatedSum::new();
    let mut weighted = CompensatedSum::new();
    for (j, w) in partial {
        joint.add(j);
        weighted.add(w);
    }
    (joint.value(), weighted.value())
}

fn log_densities<F: Scalar>(model: &LatentModel<F>, data: &AlignedCollection<F>) -> Vec<Vec<F>> {
    let tables = LogTables::new(model);
    data.domains()
        .enumerate()
        .map(|(l, m)| {
            (0..m.nnz())
                .into_par_iter()
                .map(|pos| {
                    let t = m.entry(pos);
                    log_mixture(t.rating, Terms::of(&tables, model, l, t.user, t.item))
                })
                .collect()
        })
        .collect()
}

fn objectives<F: Scalar>(model: &LatentModel<F>, data: &AlignedCollection<F>, weights: &[Vec<F>], lambdas: &[F]) -> (F, F) {
    reduce_objectives(data, &log_densities(model, data), weights, lambdas)
}

/// `−Σ_l λ_l Σ_{x ∈ X^l} log(w_i^l · Σ_z P(z|u) N(r; μ_iz^l, σ_iz^l))`.
pub fn joint_nll<F: Scalar>(model: &LatentModel<F>, data: &AlignedCollection<F>, weights: &[Vec<F>], cfg: &EmConfig<F>) -> Result<F> {
    let data = data.shared_users_view();
    check_dims(model, &data)?;
    check_weights(&data, weights)?;
    for (l, m) in data.domains().enumerate() {
        if let Some(i) = (0..m.n_items()).find(|&i| m.item_nnz(i) > 0 && !(weights[l][i] > F::zero())) {
            return invalid(format!("domain {l}: item {i} is observed but has weight {}", weights[l][i]));
        }
    }
    Ok(objectives(model, &data, weights, &cfg.domain_lambdas(data.n_sources())).0)
}

/// `−Σ_l λ_l Σ_{x ∈ X^l} w_i^l · log Σ_z P(z|u) N(r; μ_iz^l, σ_iz^l)`: the
/// weighted likelihood the EM updates ascend for arbitrary item weights. It
/// orders iterates exactly like [`joint_nll`] whenever all weights are equal.
pub fn weighted_nll<F: Scalar>(model: &LatentModel<F>, data: &AlignedCollection<F>, weights: &[Vec<F>], cfg: &EmConfig<F>) -> Result<F> {
    let data = data.shared_users_view();
    check_dims(model, &data)?;
    check_weights(&data, weights)?;
    Ok(objectives(model, &data, weights, &cfg.domain_lambdas(data.n_sources())).1)
}

/// Starting point: seeded random stochastic rows for `P(z|u)`, per-item
/// observed means plus ±0.01 jitter for μ, and σ = 1.
pub fn initial_model<F: Scalar>(data: &AlignedCollection<F>, cfg: &EmConfig<F>) -> LatentModel<F> {
    let data = data.shared_users_view();
    let k = cfg.k;
    let n_users = data.target.n_users();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut user_topics = Vec::with_capacity(n_users * k);
    for _ in 0..n_users {
        let row: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
        let s: f64 = row.iter().sum();
        user_topics.extend(row.into_iter().map(|x| F::lit(x / s)));
    }
    let domains = data
        .domains()
        .map(|m| {
            let fallback = m.global_mean();
            let mut mu = Vec::with_capacity(m.n_items() * k);
            for i in 0..m.n_items() {
                let n = m.item_nnz(i);
                let mean = if n == 0 { fallback } else { m.item_col(i).map(|(_, r, _)| r).sum::<F>() / F::from_usize(n).unwrap() };
                for _ in 0..k {
                    mu.push(mean + F::lit((rng.random::<f64>() - 0.5) * 0.02));
                }
            }
            DomainGaussians { n_items: m.n_items(), sigma: vec![F::one(); mu.len()], mu }
        })
        .collect();
    LatentModel { k, n_users, user_topics, domains, bounds: data.target.bounds() }
}

/// One full E-step / M-step sweep. Returns the new model and the number of
/// fallback posteriors.
pub fn em_iteration<F: Scalar>(
    model: &LatentModel<F>,
    data: &AlignedCollection<F>,
    weights: &[Vec<F>],
    cfg: &EmConfig<F>,
) -> Result<(LatentModel<F>, usize)> {
    let data = data.shared_users_view();
    check_dims(model, &data)?;
    let post = e_step_with_densities(model, &data).0;
    let next = m_steps(model, &post, &data, weights, cfg)?;
    Ok((next, post.fallbacks))
}

fn m_steps<F: Scalar>(
    model: &LatentModel<F>,
    post: &PosteriorTable<F>,
    data: &AlignedCollection<F>,
    weights: &[Vec<F>],
    cfg: &EmConfig<F>,
) -> Result<LatentModel<F>> {
    let user_topics = m_step_user_topics(post, data, weights, cfg)?;
    let domains = m_step_item_gaussians(post, data, &model.domains, cfg)?;
    debug_assert!(
        post.domains.iter().all(|d| d
            .chunks(post.k)
            .all(|c| (c.iter().copied().sum::<F>() - F::one()).abs() <= F::tol(1e-12) * F::from_usize(post.k).unwrap().max(F::one()))),
        "posterior rows must sum to 1"
    );
    let next = LatentModel { k: model.k, n_users: model.n_users, user_topics, domains, bounds: model.bounds };
    debug_assert!(
        next.check_invariants(cfg.sigma_floor, F::tol(1e-9)).is_ok(),
        "{:?}",
        next.check_invariants(cfg.sigma_floor, F::tol(1e-9))
    );
    Ok(next)
}

/// Per-iteration diagnostics of a fit. Index 0 is the initial model.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(bound = "")]
pub struct FitTrace<F: Scalar> {
    /// [`joint_nll`] after each iteration; empty when some observed item has
    /// zero weight (the objective is then unbounded).
    pub nll: Vec<F>,
    /// [`weighted_nll`], the quantity the stopping rule watches.
    pub objective: Vec<F>,
    pub iterations: usize,
    pub converged: bool,
    pub posterior_fallbacks: usize,
}

#[derive(Debug, Clone)]
pub struct Fit<F: Scalar> {
    pub model: LatentModel<F>,
    pub trace: FitTrace<F>,
}

/// Runs EM from `start` until the relative improvement of the weighted
/// objective drops below `rel_tol` or `max_iters` sweeps are done.
pub fn fit_from<F: Scalar>(start: LatentModel<F>, data: &AlignedCollection<F>, weights: &[Vec<F>], cfg: &EmConfig<F>) -> Result<Fit<F>> {
    let data = data.shared_users_view();
    cfg.validate(data.n_sources())?;
    check_dims(&start, &data)?;
    check_weights(&data, weights)?;
    let lambdas = cfg.domain_lambdas(data.n_sources());
    let strictly_positive =
        data.domains().enumerate().all(|(l, m)| (0..m.n_items()).all(|i| m.item_nnz(i) == 0 || weights[l][i] > F::zero()));

    // The E-step of each sweep also yields the objective of the model it
    // starts from, so every model is scored exactly once.
    let mut model = start;
    let mut trace = FitTrace { nll: Vec::new(), objective: Vec::new(), iterations: 0, converged: false, posterior_fallbacks: 0 };
    loop {
        let (post, densities) = e_step_with_densities(&model, &data);
        let (j, w) = reduce_objectives(&data, &densities, weights, &lambdas);
        if strictly_positive {
            trace.nll.push(j);
        }
        trace.objective.push(w);
        if let [.., prev, last] = trace.objective[..] {
            if (prev - last) / prev.abs().max(F::min_positive_value()) < cfg.rel_tol {
                trace.converged = true;
                break;
            }
        }
        if trace.iterations == cfg.max_iters {
            break;
        }
        model = m_steps(&model, &post, &data, weights, cfg)?;
        trace.iterations += 1;
        trace.posterior_fallbacks += post.fallbacks;
    }
    if trace.posterior_fallbacks > 0 {
        log::warn!("{} posterior vectors fell back to uniform", trace.posterior_fallbacks);
    }
    Ok(Fit { model, trace })
}

/// Weighted multi-domain fit (TGPLSA).
pub fn fit_tgplsa<F: Scalar>(data: &AlignedCollection<F>, weights: &[Vec<F>], cfg: &EmConfig<F>) -> Result<Fit<F>> {
    let view = data.shared_users_view();
    if view.target.nnz() == 0 {
        return invalid("target domain has no observations");
    }
    cfg.validate(view.n_sources())?;
    check_weights(&view, weights)?;
    let start = initial_model(&view, cfg);
    fit_from(start, &view, weights, cfg)
}

/// Target-only fit with unit item weights (GPLSA).
pub fn fit_gplsa<F: Scalar>(target: &RatingsMatrix<F>, cfg: &EmConfig<F>) -> Result<Fit<F>> {
    let data = AlignedCollection::single(target.clone());
    let weights = constant_weights(&data, F::one());
    fit_tgplsa(&data, &weights, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{RatingBounds, RatingTriple};

    fn tiny(
        k: usize,
        topics: Vec<f64>,
        mu: Vec<f64>,
        sigma: Vec<f64>,
        ratings: &[(usize, usize, f64)],
    ) -> (LatentModel<f64>, AlignedCollection<f64>) {
        let n_users = topics.len() / k;
        let n_items = mu.len() / k;
        let m = RatingsMatrix::from_triples(
            n_users,
            n_items,
            ratings.iter().map(|&(user, item, rating)| RatingTriple { user, item, rating }).collect(),
            RatingBounds::default(),
        )
        .unwrap();
        let model = LatentModel {
            k,
            n_users,
            user_topics: topics,
            domains: vec![DomainGaussians { n_items, mu, sigma }],
            bounds: RatingBounds::default(),
        };
        (model, AlignedCollection::single(m))
    }

    #[test]
    fn density_values() {
        let peak = gaussian_density::<f64>(3.0, 3.0, 1.0);
        assert!((peak - 0.398_942_280_401_432_7).abs() < 1e-15);
        let a = gaussian_density::<f64>(3.7, 3.0, 0.5);
        let b = gaussian_density(2.3, 3.0, 0.5);
        assert!((a - b).abs() < 1e-15);
        // exp(-1/2)/sqrt(2π), evaluated independently to 16 digits.
        assert!((gaussian_density::<f64>(4.0, 3.0, 1.0) - 0.241_970_724_519_143_37).abs() < 1e-15);
    }

    #[test]
    fn single_topic_posteriors_are_one() {
        let (model, data) = tiny(1, vec![1.0, 1.0], vec![2.0, 4.0], vec![1.0, 1.0], &[(0, 0, 1.0), (1, 1, 5.0), (0, 1, 3.0)]);
        let post = e_step(&model, &data).unwrap();
        assert!(post.domains[0].iter().all(|&p| p == 1.0));
    }

    #[test]
    fn symmetric_components_split_evenly() {
        let (model, data) = tiny(2, vec![0.5, 0.5], vec![3.0, 3.0], vec![1.0, 1.0], &[(0, 0, 4.6)]);
        let post = e_step(&model, &data).unwrap();
        assert_eq!(post.get(0, 0), &[0.5, 0.5]);
    }

    #[test]
    fn posterior_gaussian_ratio() {
        let (model, data) = tiny(2, vec![0.5, 0.5], vec![4.0, 2.0], vec![1.0, 1.0], &[(0, 0, 4.0)]);
        let post = e_step(&model, &data).unwrap();
        // Brute-force normalization of the two unnormalized terms.
        let a = 0.5 * (-0.0_f64).exp();
        let b = 0.5 * (-2.0_f64).exp();
        let expect = [a / (a + b), b / (a + b)];
        assert!((post.get(0, 0)[0] - expect[0]).abs() < 1e-12);
        assert!((post.get(0, 0)[1] - expect[1]).abs() < 1e-12);
        assert!((expect[0] - 0.880_797).abs() < 1e-6);
    }

    #[test]
    fn underflowing_components_fall_back_to_uniform() {
        let (model, data) = tiny(2, vec![1.0, 0.0], vec![1.0, 1.0], vec![1e-300, 1e-300], &[(0, 0, 5.0)]);
        let post = e_step(&model, &data).unwrap();
        assert_eq!(post.fallbacks, 1);
        assert_eq!(post.get(0, 0), &[0.5, 0.5]);
    }

    #[test]
    fn user_topics_weighted_average() {
        let (_, data) = tiny(2, vec![0.5; 4], vec![3.0; 4], vec![1.0; 4], &[(0, 0, 4.0), (0, 1, 2.0), (1, 1, 3.0)]);
        let post = PosteriorTable { k: 2, domains: vec![vec![1.0, 0.0, 0.0, 1.0, 0.3, 0.7]], fallbacks: 0 };
        let cfg = EmConfig { k: 2, ..Default::default() };
        let table = m_step_user_topics(&post, &data, &[vec![3.0, 1.0]], &cfg).unwrap();
        // Brute force: (3·[1,0] + 1·[0,1]) / 4.
        assert_eq!(&table[0..2], &[0.75, 0.25]);
        // Single observation reproduces its posterior.
        assert!((table[2] - 0.3).abs() < 1e-15 && (table[3] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn uniform_posteriors_give_uniform_topics_and_unobserved_users_uniform() {
        let m = RatingsMatrix::from_triples(3, 1, vec![RatingTriple { user: 0, item: 0, rating: 2.0 }], RatingBounds::default()).unwrap();
        let data = AlignedCollection::single(m);
        let post = PosteriorTable { k: 4, domains: vec![vec![0.25; 4]], fallbacks: 0 };
        let table = m_step_user_topics(&post, &data, &[vec![1.0]], &EmConfig { k: 4, ..Default::default() }).unwrap();
        assert!(table.iter().all(|&p| p == 0.25));
    }

    #[test]
    fn item_gaussian_two_point_and_degenerate() {
        let (model, data) = tiny(1, vec![1.0, 1.0, 1.0], vec![0.0; 3], vec![1.0; 3], &[(0, 0, 2.0), (1, 0, 4.0), (2, 1, 3.5)]);
        let post = e_step(&model, &data).unwrap();
        let cfg = EmConfig { k: 1, ..Default::default() };
        let g = m_step_item_gaussians(&post, &data, &model.domains, &cfg).unwrap();
        assert_eq!(g[0].mu[0], 3.0);
        assert_eq!(g[0].sigma[0], 1.0);
        assert_eq!(g[0].mu[1], 3.5);
        assert_eq!(g[0].sigma[1], 0.05);
        // Item 2 has no observations: unchanged.
        assert_eq!((g[0].mu[2], g[0].sigma[2]), (0.0, 1.0));
    }

    #[test]
    fn zero_mass_topic_keeps_previous() {
        let (model, data) = tiny(2, vec![1.0, 0.0], vec![2.0, 4.5], vec![1.0, 0.7], &[(0, 0, 3.0)]);
        let post = e_step(&model, &data).unwrap();
        assert_eq!(post.get(0, 0), &[1.0, 0.0]);
        let g = m_step_item_gaussians(&post, &data, &model.domains, &EmConfig { k: 2, ..Default::default() }).unwrap();
        assert_eq!((g[0].mu[1], g[0].sigma[1]), (4.5, 0.7));
        assert_eq!(g[0].mu[0], 3.0);
    }

    #[test]
    fn nll_plug_in_values() {
        let (model, data) = tiny(1, vec![1.0], vec![3.0], vec![1.0], &[(0, 0, 3.0)]);
        let cfg = EmConfig { k: 1, ..Default::default() };
        let nll = joint_nll(&model, &data, &[vec![1.0]], &cfg).unwrap();
        assert!((nll - 0.918_938_533_204_672_7).abs() < 1e-12);
        assert!(joint_nll(&model, &data, &[vec![0.0]], &cfg).is_err());
    }

    #[test]
    fn doubling_weights_shifts_nll() {
        let (model, data) =
            tiny(2, vec![0.3, 0.7, 0.6, 0.4], vec![2.0, 4.0, 3.0, 1.0], vec![1.0, 0.5, 0.8, 1.2], &[(0, 0, 4.0), (0, 1, 2.0), (1, 1, 3.0)]);
        let cfg = EmConfig { k: 2, ..Default::default() };
        let w = vec![vec![0.4, 1.3]];
        let w2 = vec![w[0].iter().map(|x| 2.0 * x).collect()];
        let a = joint_nll(&model, &data, &w, &cfg).unwrap();
        let b = joint_nll(&model, &data, &w2, &cfg).unwrap();
        assert!(((a - b) - 3.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn empty_data_nll_is_zero() {
        let m = RatingsMatrix::<f64>::from_triples(2, 2, vec![], RatingBounds::default()).unwrap();
        let data = AlignedCollection::single(m);
        let model = initial_model(&data, &EmConfig { k: 3, ..Default::default() });
        assert_eq!(joint_nll(&model, &data, &[vec![1.0, 1.0]], &EmConfig { k: 3, ..Default::default() }).unwrap(), 0.0);
        assert!(fit_gplsa(&data.target, &EmConfig { k: 3, ..Default::default() }).is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let (model, data) = tiny(1, vec![1.0], vec![3.0], vec![1.0], &[(0, 0, 3.0)]);
        let two =
            AlignedCollection::from_aligned(data.target.clone(), vec![data.target.clone()], crate::data::Orientation::SharedUsers).unwrap();
        assert!(matches!(e_step(&model, &two), Err(Error::Dimension(_))));
    }
}
