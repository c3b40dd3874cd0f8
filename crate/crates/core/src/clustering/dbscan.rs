//! Density-based baseline. Region queries use the strict neighborhood
//! `d < eps` so that `min_pts = 1` coincides exactly with fixpoint threshold
//! clustering at `tau = eps`.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::gallery::{FeatureVector, Partition};
use crate::scalar::Real;
use crate::similarity::{Metric, MetricEval};

/// Clustering plus the noise points. For metric comparability with the
/// pairwise protocol, each noise point is also emitted as its own singleton
/// cluster in the partition view.
#[derive(Debug, Clone)]
pub struct DbscanOutcome {
    pub partition: Partition,
    pub noise: Vec<usize>,
}

pub fn cluster_dbscan<F: Real>(
    features: &[FeatureVector<F>],
    eps: F,
    min_pts: usize,
    metric: Metric,
) -> Result<DbscanOutcome> {
    if !(eps.is_finite() && eps > F::zero()) {
        return Err(Error::InvalidConfig(format!(
            "eps must be finite and positive, got {eps}"
        )));
    }
    if min_pts < 1 {
        return Err(Error::InvalidConfig("min_pts must be >= 1".into()));
    }
    if features.is_empty() {
        return Ok(DbscanOutcome {
            partition: Partition::empty(),
            noise: Vec::new(),
        });
    }
    let eval = MetricEval::new(metric, features)?;
    let n = features.len();
    let region_query = |p: usize| -> Vec<usize> {
        (0..n).filter(|&q| eval.dist(p, q) < eps).collect()
    };

    let mut visited = vec![false; n];
    let mut assignment: Vec<Option<usize>> = vec![None; n];
    let mut clusters: Vec<Vec<usize>> = Vec::new();

    for p in 0..n {
        if visited[p] {
            continue;
        }
        visited[p] = true;
        let neighbors = region_query(p);
        if neighbors.len() < min_pts {
            continue; // tentatively noise; may become a border point later
        }
        let cid = clusters.len();
        clusters.push(vec![p]);
        assignment[p] = Some(cid);
        let mut queue: VecDeque<usize> = neighbors.into();
        while let Some(q) = queue.pop_front() {
            if !visited[q] {
                visited[q] = true;
                let nq = region_query(q);
                if nq.len() >= min_pts {
                    queue.extend(nq);
                }
            }
            if assignment[q].is_none() {
                assignment[q] = Some(cid);
                clusters[cid].push(q);
            }
        }
    }

    let noise: Vec<usize> = (0..n).filter(|&i| assignment[i].is_none()).collect();
    for &i in &noise {
        clusters.push(vec![i]);
    }
    Ok(DbscanOutcome {
        partition: Partition::new(clusters, n)?,
        noise,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::test_support::{points2d, union_find_components};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_points_one_cluster() {
        let feats = points2d(&[(1.0, 1.0); 5]);
        let out = cluster_dbscan(&feats, 0.5, 1, Metric::Euclidean).unwrap();
        assert_eq!(out.partition.num_clusters(), 1);
        assert!(out.noise.is_empty());
    }

    #[test]
    fn all_noise_becomes_singletons() {
        let feats = points2d(&[(0.0, 0.0), (10.0, 0.0), (20.0, 0.0)]);
        let out = cluster_dbscan(&feats, 0.5, 2, Metric::Euclidean).unwrap();
        assert_eq!(out.noise, vec![0, 1, 2]);
        assert_eq!(out.partition.num_clusters(), 3);
    }

    #[test]
    fn two_blobs_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let centers = [(0.0, 0.0), (10.0, 10.0)];
        let mut pts = Vec::new();
        for &(cx, cy) in &centers {
            for _ in 0..20 {
                pts.push((cx + rng.gen_range(-0.5..0.5), cy + rng.gen_range(-0.5..0.5)));
            }
        }
        let feats = points2d(&pts);
        let out = cluster_dbscan(&feats, 1.5, 3, Metric::Euclidean).unwrap();
        assert_eq!(out.partition.num_clusters(), 2);
        assert!(out.noise.is_empty());
        // every point clusters with its nearest blob center
        let assign = out.partition.assignments(pts.len());
        for (i, &(x, y)) in pts.iter().enumerate() {
            let nearest = if (x * x + y * y) < ((x - 10.0).powi(2) + (y - 10.0).powi(2)) {
                0
            } else {
                1
            };
            assert_eq!(assign[i], assign[nearest * 20]);
        }
    }

    #[test]
    fn min_pts_one_equals_threshold_components() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..10 {
            let feats: Vec<_> = (0..50)
                .map(|_| {
                    crate::gallery::FeatureVector::new(vec![
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ])
                    .unwrap()
                })
                .collect();
            let eps = rng.gen_range(0.05..0.6);
            let out = cluster_dbscan(&feats, eps, 1, Metric::Euclidean).unwrap();
            assert_eq!(
                out.partition,
                union_find_components(&feats, Metric::Euclidean, eps)
            );
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let feats = points2d(&[(0.0, 0.0)]);
        assert!(cluster_dbscan(&feats, 0.0, 1, Metric::Euclidean).is_err());
        assert!(cluster_dbscan(&feats, 1.0, 0, Metric::Euclidean).is_err());
    }
}
