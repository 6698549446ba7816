//! Selective transfer learning for cross-domain collaborative filtering.
//!
//! A sparse target rating matrix is modelled jointly with source domains that
//! share its users (or items) by a Gaussian PLSA mixture whose user-topic
//! distribution is tied across domains ([`gplsa`]). A boosting layer
//! ([`boost`]) repeatedly refits that model under item weights, damping
//! source items that the shared model cannot explain and emphasising
//! mispredicted target items, and combines the rounds into a weighted
//! committee.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which is what the CLI uses.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boost;
pub mod data;
pub mod error;
pub mod eval;
pub mod gplsa;
pub mod persist;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Ratings = data::RatingsMatrix<f64>;
pub type Collection = data::AlignedCollection<f64>;
pub type Bounds = data::RatingBounds<f64>;
pub type Model = gplsa::LatentModel<f64>;
pub type Em = gplsa::EmConfig<f64>;
pub type Boost = boost::BoostConfig<f64>;
pub type StlcfEnsemble = boost::Ensemble<f64>;
pub type Synth = synth::SynthConfig;
pub type Experiment = eval::ExperimentConfig;
