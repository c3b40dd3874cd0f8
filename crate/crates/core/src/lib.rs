//! Re-identification engine for nodule tracklet embeddings.
//!
//! The crate matches tracklet feature vectors by similarity, groups them
//! into per-nodule clusters with a threshold-growth algorithm (plus DBSCAN,
//! mean-shift and affinity-propagation baselines), evaluates the metric
//! learning objectives as numeric functions, and computes the pairwise
//! evaluation protocol: precision/recall/F over tracklet pairs, ROC/AUC
//! with confidence intervals, and the DeLong comparison of two models.
//!
//! All numeric kernels are generic over [`scalar::Real`] (`f32` or `f64`);
//! concrete aliases for the common `f64` and `f32` instantiations live at
//! the crate root.

pub mod clustering;
pub mod error;
pub mod gallery;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod scalar;
pub mod similarity;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Real;
pub use similarity::Metric;

pub type FeatureVector64 = gallery::FeatureVector<f64>;
pub type FeatureVector32 = gallery::FeatureVector<f32>;
pub type Gallery64 = gallery::Gallery<f64>;
pub type Gallery32 = gallery::Gallery<f32>;
pub type ScoredPair64 = metrics::ScoredPair<f64>;
pub type ScoredPair32 = metrics::ScoredPair<f32>;
pub type ClusterConfig64 = clustering::ClusterConfig<f64>;
pub type ClusterConfig32 = clustering::ClusterConfig<f32>;
pub type PkBatch64 = losses::PkBatch<f64>;
pub type PkBatch32 = losses::PkBatch<f32>;
