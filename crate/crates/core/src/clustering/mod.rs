//! Clustering: the threshold-growth algorithm in literal and fixpoint
//! variants, plus DBSCAN, mean-shift and affinity-propagation baselines.

mod affinity;
mod dbscan;
mod mean_shift;
mod threshold;

pub use affinity::{cluster_affinity_propagation, AffinityOutcome, ApParams, Preference};
pub use dbscan::{cluster_dbscan, DbscanOutcome};
pub use mean_shift::cluster_mean_shift;
pub use threshold::cluster_threshold;

use crate::error::{Error, Result};
use crate::gallery::{FeatureVector, Gallery, Partition};
use crate::scalar::Real;
use crate::similarity::Metric;

/// How the threshold clusterer walks the feature set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Single pass over the remaining features per cluster, exactly as the
    /// pseudocode reads. Order dependent by design.
    Literal,
    /// Repeat the pass until no feature is absorbed; equals connected
    /// components of the threshold graph. Deterministic. Default.
    Fixpoint,
}

/// Seed selection and pass order for the threshold clusterer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    /// Shuffle the remaining features (seeded) before each cluster round.
    SeededRandom,
    /// Take features in input order; the seed feature is the first remaining.
    InputOrder,
}

/// Configuration for [`cluster_threshold`].
#[derive(Debug, Clone)]
pub struct ClusterConfig<F: Real> {
    /// Distance threshold; a feature joins a cluster when its distance to
    /// any current member is strictly below `tau`.
    pub tau: F,
    pub metric: Metric,
    pub mode: Mode,
    /// Drives the random feature selection; same seed, same output.
    pub seed: u64,
    pub order: Order,
}

impl<F: Real> ClusterConfig<F> {
    pub fn new(tau: F, metric: Metric) -> Self {
        Self {
            tau,
            metric,
            mode: Mode::Fixpoint,
            seed: 0,
            order: Order::InputOrder,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > F::zero()) {
            return Err(Error::InvalidConfig(format!(
                "tau must be finite and positive, got {}",
                self.tau
            )));
        }
        Ok(())
    }
}

/// One clustering algorithm with its hyperparameters, for dispatch from the
/// CLI and the benchmark harness.
#[derive(Debug, Clone)]
pub enum ClusterAlgo<F: Real> {
    Threshold(ClusterConfig<F>),
    Dbscan {
        eps: F,
        min_pts: usize,
        metric: Metric,
    },
    MeanShift {
        bandwidth: F,
    },
    Affinity(ApParams<F>),
}

impl<F: Real> ClusterAlgo<F> {
    pub fn name(&self) -> &'static str {
        match self {
            ClusterAlgo::Threshold(_) => "threshold",
            ClusterAlgo::Dbscan { .. } => "dbscan",
            ClusterAlgo::MeanShift { .. } => "meanshift",
            ClusterAlgo::Affinity(_) => "affinity",
        }
    }

    /// Runs the algorithm, flattening noise and convergence side channels
    /// into the partition view (DBSCAN noise points become singletons).
    pub fn run(&self, features: &[FeatureVector<F>]) -> Result<Partition> {
        match self {
            ClusterAlgo::Threshold(cfg) => cluster_threshold(features, cfg),
            ClusterAlgo::Dbscan {
                eps,
                min_pts,
                metric,
            } => Ok(cluster_dbscan(features, *eps, *min_pts, *metric)?.partition),
            ClusterAlgo::MeanShift { bandwidth } => {
                cluster_mean_shift(features, *bandwidth, Metric::Euclidean)
            }
            ClusterAlgo::Affinity(params) => {
                Ok(cluster_affinity_propagation(features, params)?.partition)
            }
        }
    }
}

/// Per-patient clustering result; the partition indexes `member_indices`.
#[derive(Debug, Clone)]
pub struct PatientClustering {
    pub patient_id: String,
    /// Global gallery indices of this patient's records, in gallery order.
    pub member_indices: Vec<usize>,
    pub partition: Partition,
}

/// Clusters each patient's tracklets independently.
pub fn cluster_per_patient<F: Real>(
    gallery: &Gallery<F>,
    algo: &ClusterAlgo<F>,
) -> Result<Vec<PatientClustering>> {
    let mut out = Vec::new();
    for (patient_id, member_indices) in gallery.patients() {
        let features: Vec<FeatureVector<F>> = member_indices
            .iter()
            .map(|&i| gallery.records()[i].embedding.clone())
            .collect();
        let partition = algo.run(&features)?;
        out.push(PatientClustering {
            patient_id,
            member_indices,
            partition,
        });
    }
    Ok(out)
}

/// Cluster count per patient from independent threshold-clustering runs.
pub fn count_nodules<F: Real>(
    gallery: &Gallery<F>,
    config: &ClusterConfig<F>,
) -> Result<Vec<(String, usize)>> {
    let per_patient = cluster_per_patient(gallery, &ClusterAlgo::Threshold(config.clone()))?;
    Ok(per_patient
        .into_iter()
        .map(|p| (p.patient_id, p.partition.num_clusters()))
        .collect())
}
