//! Gaussian PLSA and its weighted multi-domain extension, fitted by EM.

mod config;
mod em;
mod model;

pub use config::EmConfig;
pub use em::{
    constant_weights, e_step, em_iteration, fit_from, fit_gplsa, fit_tgplsa, gaussian_density, initial_model, joint_nll,
    log_gaussian_density, m_step_item_gaussians, m_step_user_topics, weighted_nll, Fit, FitTrace, ItemWeights, PosteriorTable,
};
pub use model::{DomainGaussians, LatentModel, Predictor};
