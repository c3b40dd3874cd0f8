//! Evaluation protocol: pairwise clustering precision/recall/F, ROC/AUC
//! with confidence intervals, the DeLong comparison, and the clustering
//! benchmark table.

mod delong;
mod roc;

pub use delong::{auc_confidence_interval, delong_test, DelongResult};
pub use roc::{
    mann_whitney_auc, operating_point, roc_curve, wilson_interval, Estimate, OperatingPoint,
    RocCurve, RocPoint, ScoredPair,
};

use std::time::Instant;

use crate::clustering::{cluster_per_patient, ClusterAlgo, PatientClustering};
use crate::error::{Error, Result};
use crate::gallery::{Gallery, Partition};
use crate::scalar::Real;

/// Pair-level confusion counts behind pairwise precision/recall.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PairConfusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl PairConfusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Accumulated pairwise clustering quality.
#[derive(Debug, Clone, Copy)]
pub struct ClusterMetrics<F: Real> {
    pub precision: F,
    pub recall: F,
    pub f_score: F,
    pub confusion: PairConfusion,
}

/// Pairwise precision/recall/F over within-patient tracklet pairs.
///
/// Each entry pairs one patient's predicted partition with the ground-truth
/// nodule label of every local record. A pair counts TP when same nodule and
/// same cluster, FP when different nodule but same cluster, FN when same
/// nodule but split. Counts are accumulated over all patients before the
/// ratios are taken. Conventions: precision = 1 when TP+FP = 0, recall = 1
/// when TP+FN = 0, F = 0 when precision+recall = 0.
pub fn pairwise_cluster_metrics<F: Real>(
    patients: &[(Partition, Vec<String>)],
) -> Result<ClusterMetrics<F>> {
    let mut confusion = PairConfusion::default();
    for (partition, labels) in patients {
        let n = labels.len();
        let covered: usize = partition.clusters().iter().map(Vec::len).sum();
        if covered != n {
            return Err(Error::RecordMismatch(format!(
                "partition covers {covered} records but {n} labels given"
            )));
        }
        let assign = partition.assignments(n);
        for i in 0..n {
            for j in i + 1..n {
                let same_nodule = labels[i] == labels[j];
                let same_cluster = assign[i] == assign[j];
                match (same_nodule, same_cluster) {
                    (true, true) => confusion.tp += 1,
                    (false, true) => confusion.fp += 1,
                    (true, false) => confusion.fn_ += 1,
                    (false, false) => confusion.tn += 1,
                }
            }
        }
    }
    let ratio = |num: u64, den: u64| {
        if den == 0 {
            F::one()
        } else {
            F::from_u64(num).unwrap() / F::from_u64(den).unwrap()
        }
    };
    let precision = ratio(confusion.tp, confusion.tp + confusion.fp);
    let recall = ratio(confusion.tp, confusion.tp + confusion.fn_);
    let f_score = if precision + recall == F::zero() {
        F::zero()
    } else {
        F::from_f64_lossy(2.0) * precision * recall / (precision + recall)
    };
    Ok(ClusterMetrics {
        precision,
        recall,
        f_score,
        confusion,
    })
}

/// Extracts (partition, labels) inputs for [`pairwise_cluster_metrics`] from
/// per-patient clusterings and gallery ground truth.
pub fn per_patient_eval_inputs<F: Real>(
    gallery: &Gallery<F>,
    clusterings: &[PatientClustering],
) -> Result<Vec<(Partition, Vec<String>)>> {
    clusterings
        .iter()
        .map(|pc| {
            let labels = pc
                .member_indices
                .iter()
                .map(|&i| {
                    gallery.records()[i]
                        .nodule_id
                        .clone()
                        .ok_or_else(|| {
                            Error::MissingNoduleId(gallery.records()[i].tracklet_id.clone())
                        })
                })
                .collect::<Result<Vec<String>>>()?;
            Ok((pc.partition.clone(), labels))
        })
        .collect()
}

/// One row of the clustering benchmark table.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub algorithm: String,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    /// Median over repetitions of the summed per-patient clustering time;
    /// I/O and metric computation excluded.
    pub median_seconds: f64,
}

/// Runs each algorithm per patient, timing only the clustering calls, and
/// evaluates accuracy with the pairwise protocol.
pub fn timing_benchmark<F: Real>(
    gallery: &Gallery<F>,
    algorithms: &[ClusterAlgo<F>],
    repetitions: usize,
) -> Result<Vec<BenchRow>> {
    if repetitions < 3 {
        return Err(Error::InvalidConfig("repetitions must be >= 3".into()));
    }
    if !gallery.has_ground_truth() {
        return Err(Error::MissingNoduleId(
            "benchmark requires ground truth on every record".into(),
        ));
    }
    // Assemble per-patient feature slices up front so timing covers the
    // clustering call only.
    let patient_features: Vec<Vec<crate::gallery::FeatureVector<F>>> = gallery
        .patients()
        .into_iter()
        .map(|(_, idx)| {
            idx.iter()
                .map(|&i| gallery.records()[i].embedding.clone())
                .collect()
        })
        .collect();

    let mut rows = Vec::new();
    for algo in algorithms {
        let mut times = Vec::with_capacity(repetitions);
        for _ in 0..repetitions {
            let start = Instant::now();
            for features in &patient_features {
                algo.run(features)?;
            }
            times.push(start.elapsed().as_secs_f64());
        }
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = if times.len() % 2 == 0 {
            (times[times.len() / 2 - 1] + times[times.len() / 2]) / 2.0
        } else {
            times[times.len() / 2]
        };
        let clusterings = cluster_per_patient(gallery, algo)?;
        let inputs = per_patient_eval_inputs(gallery, &clusterings)?;
        let metrics: ClusterMetrics<f64> = pairwise_cluster_metrics(&inputs)?;
        rows.push(BenchRow {
            algorithm: algo.name().to_string(),
            precision: metrics.precision,
            recall: metrics.recall,
            f_score: metrics.f_score,
            median_seconds: median,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::ClusterConfig;
    use crate::gallery::{FeatureVector, TrackletRecord};
    use crate::similarity::Metric;

    fn labels(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn perfect_partition_scores_one() {
        let partition = Partition::new(vec![vec![0, 1], vec![2]], 3).unwrap();
        let m: ClusterMetrics<f64> =
            pairwise_cluster_metrics(&[(partition, labels(&["a", "a", "b"]))]).unwrap();
        assert_eq!((m.precision, m.recall, m.f_score), (1.0, 1.0, 1.0));
    }

    #[test]
    fn one_cluster_per_patient_has_recall_one() {
        // the DBSCAN-row pattern: everything together, recall 1, precision =
        // same-nodule fraction of within-patient pairs
        let partition = Partition::new(vec![vec![0, 1, 2, 3]], 4).unwrap();
        let m: ClusterMetrics<f64> =
            pairwise_cluster_metrics(&[(partition, labels(&["a", "a", "b", "b"]))]).unwrap();
        assert_eq!(m.recall, 1.0);
        assert!((m.precision - 2.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn all_singletons_has_precision_one_recall_zero() {
        let partition = Partition::new(vec![vec![0], vec![1], vec![2]], 3).unwrap();
        let m: ClusterMetrics<f64> =
            pairwise_cluster_metrics(&[(partition, labels(&["a", "a", "b"]))]).unwrap();
        assert_eq!(m.precision, 1.0); // empty-positive convention
        assert_eq!(m.recall, 0.0);
        assert_eq!(m.f_score, 0.0);
    }

    #[test]
    fn hand_instance_matches_brute_force_pair_loop() {
        // 5 tracklets, 2 nodules; one nodule split across two clusters.
        let partition = Partition::new(vec![vec![0, 1], vec![2], vec![3, 4]], 5).unwrap();
        let lab = labels(&["a", "a", "a", "b", "b"]);
        let assign = partition.assignments(5);
        let mut expected = PairConfusion::default();
        for i in 0..5 {
            for j in i + 1..5 {
                match (lab[i] == lab[j], assign[i] == assign[j]) {
                    (true, true) => expected.tp += 1,
                    (false, true) => expected.fp += 1,
                    (true, false) => expected.fn_ += 1,
                    (false, false) => expected.tn += 1,
                }
            }
        }
        let m: ClusterMetrics<f64> = pairwise_cluster_metrics(&[(partition, lab)]).unwrap();
        assert_eq!(m.confusion, expected);
        assert_eq!(m.confusion.total(), 10);
        // tp: (0,1) and (3,4); fn: (0,2), (1,2)
        assert_eq!((expected.tp, expected.fn_, expected.fp), (2, 2, 0));
    }

    #[test]
    fn accumulates_across_patients_before_ratios() {
        let p1 = Partition::new(vec![vec![0, 1]], 2).unwrap();
        let p2 = Partition::new(vec![vec![0], vec![1]], 2).unwrap();
        let m: ClusterMetrics<f64> = pairwise_cluster_metrics(&[
            (p1, labels(&["a", "b"])), // fp 1
            (p2, labels(&["c", "c"])), // fn 1
        ])
        .unwrap();
        assert_eq!(m.confusion, PairConfusion { tp: 0, fp: 1, tn: 0, fn_: 1 });
        // accumulated: precision = 0/(0+1) = 0, recall = 0/(0+1) = 0
        assert_eq!((m.precision, m.recall, m.f_score), (0.0, 0.0, 0.0));
    }

    #[test]
    fn merge_and_split_monotonicity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..30 {
            let n = rng.gen_range(4..12);
            let lab: Vec<String> = (0..n).map(|_| format!("n{}", rng.gen_range(0..3))).collect();
            // random partition
            let k = rng.gen_range(2..=n);
            let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); k];
            for i in 0..n {
                clusters[rng.gen_range(0..k)].push(i);
            }
            clusters.retain(|c| !c.is_empty());
            if clusters.len() < 2 {
                continue;
            }
            let base = Partition::new(clusters.clone(), n).unwrap();
            let before: ClusterMetrics<f64> =
                pairwise_cluster_metrics(&[(base.clone(), lab.clone())]).unwrap();

            // merging two clusters never decreases recall
            let mut merged = clusters.clone();
            let extra = merged.remove(1);
            merged[0].extend(extra);
            let merged = Partition::new(merged, n).unwrap();
            let after: ClusterMetrics<f64> =
                pairwise_cluster_metrics(&[(merged, lab.clone())]).unwrap();
            assert!(after.recall >= before.recall - 1e-12);

            // splitting one cluster never increases recall
            if let Some(pos) = clusters.iter().position(|c| c.len() >= 2) {
                let mut split = clusters.clone();
                let tail = split[pos].split_off(1);
                split.push(tail);
                let split = Partition::new(split, n).unwrap();
                let after: ClusterMetrics<f64> =
                    pairwise_cluster_metrics(&[(split, lab.clone())]).unwrap();
                assert!(after.recall <= before.recall + 1e-12);
            }
        }
    }

    #[test]
    fn benchmark_single_patient_row() {
        let records: Vec<TrackletRecord<f64>> = (0..6)
            .map(|i| TrackletRecord {
                tracklet_id: format!("t{i}"),
                patient_id: "p0".into(),
                nodule_id: Some(format!("n{}", i / 3)),
                length_frames: 1,
                embedding: FeatureVector::new(vec![(i / 3) as f64 * 10.0, i as f64 * 0.1])
                    .unwrap(),
            })
            .collect();
        let g = Gallery::build(records).unwrap();
        let algo = ClusterAlgo::Threshold(ClusterConfig::new(2.0, Metric::Euclidean));
        let rows = timing_benchmark(&g, &[algo], 3).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].algorithm, "threshold");
        assert_eq!(rows[0].f_score, 1.0);
        assert!(rows[0].median_seconds >= 0.0);
    }

    #[test]
    fn benchmark_rejects_low_reps_and_missing_truth() {
        let g = Gallery::build(vec![TrackletRecord {
            tracklet_id: "t0".into(),
            patient_id: "p0".into(),
            nodule_id: None,
            length_frames: 1,
            embedding: FeatureVector::new(vec![0.0]).unwrap(),
        }])
        .unwrap();
        let algo = ClusterAlgo::Threshold(ClusterConfig::new(1.0, Metric::Euclidean));
        assert!(timing_benchmark(&g, &[algo.clone()], 2).is_err());
        assert!(timing_benchmark(&g, &[algo], 3).is_err());
    }
}
