//! Boosting over weighted TGPLSA weak learners with a variance-penalized
//! exponential loss.

mod alpha;
mod config;
mod ensemble;
mod loss;
mod stlcf;
mod weights;

pub use alpha::{adaboost_alpha, compute_alpha, compute_beta, raw_alpha};
pub use config::BoostConfig;
pub use ensemble::{ensemble_predict, Ensemble};
pub use loss::{exp_item_loss, item_indicator, vpb_loss, Indicator};
pub use stlcf::{item_mae, run_stlcf, RoundRecord, StlcfRun};
pub use weights::{update_source_weights, update_target_weights, WeightState};
