//! Threshold-growth clustering: start a cluster from a selected feature and
//! absorb any remaining feature whose distance to a current member is below
//! tau, then repeat on the residue.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ClusterConfig, Mode, Order};
use crate::error::Result;
use crate::gallery::{FeatureVector, Partition};
use crate::scalar::Real;
use crate::similarity::MetricEval;

/// Clusters `features` with the configured threshold rule.
///
/// Literal mode makes one pass over the remaining features per cluster; a
/// feature joins if it is within `tau` of any member at the moment it is
/// examined, so the outcome depends on the pass order. Fixpoint mode repeats
/// the pass until nothing more is absorbed, which yields the connected
/// components of the graph with edges `d < tau` regardless of order.
pub fn cluster_threshold<F: Real>(
    features: &[FeatureVector<F>],
    config: &ClusterConfig<F>,
) -> Result<Partition> {
    config.validate()?;
    if features.is_empty() {
        return Ok(Partition::empty());
    }
    let eval = MetricEval::new(config.metric, features)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut remaining: Vec<usize> = (0..features.len()).collect();
    let mut clusters: Vec<Vec<usize>> = Vec::new();

    while !remaining.is_empty() {
        if config.order == Order::SeededRandom {
            remaining.shuffle(&mut rng);
        }
        let seed = remaining.remove(0);
        let mut cluster = vec![seed];
        loop {
            let mut absorbed = false;
            remaining.retain(|&f| {
                let near = cluster.iter().any(|&m| eval.dist(m, f) < config.tau);
                if near {
                    cluster.push(f);
                    absorbed = true;
                }
                !near
            });
            if config.mode == Mode::Literal || !absorbed {
                break;
            }
        }
        clusters.push(cluster);
    }
    Partition::new(clusters, features.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::test_support::{points2d, union_find_components};
    use crate::similarity::Metric;
    use rand::Rng;

    fn cfg(tau: f64, metric: Metric) -> ClusterConfig<f64> {
        ClusterConfig::new(tau, metric)
    }

    #[test]
    fn huge_tau_single_cluster() {
        let feats = points2d(&[(0.0, 0.0), (3.0, 1.0), (-2.0, 5.0)]);
        let p = cluster_threshold(&feats, &cfg(100.0, Metric::Euclidean)).unwrap();
        assert_eq!(p.num_clusters(), 1);
    }

    #[test]
    fn tiny_tau_all_singletons() {
        let feats = points2d(&[(0.0, 0.0), (3.0, 1.0), (-2.0, 5.0)]);
        let p = cluster_threshold(&feats, &cfg(1e-6, Metric::Euclidean)).unwrap();
        assert_eq!(p.num_clusters(), 3);
    }

    #[test]
    fn empty_input_empty_partition() {
        let p = cluster_threshold(&[], &cfg(1.0, Metric::Euclidean)).unwrap();
        assert_eq!(p.num_clusters(), 0);
    }

    #[test]
    fn fixpoint_chains_through_intermediate_points() {
        let feats = points2d(&[(0.0, 0.0), (1.0, 0.0), (2.2, 0.0)]);
        let p = cluster_threshold(&feats, &cfg(1.3, Metric::Euclidean)).unwrap();
        assert_eq!(p.clusters(), &[vec![0, 1, 2]]);
        let p = cluster_threshold(&feats, &cfg(1.1, Metric::Euclidean)).unwrap();
        assert_eq!(p.clusters(), &[vec![0, 1], vec![2]]);
    }

    #[test]
    fn literal_mode_misses_late_chain_links() {
        // Chain A-B-C with d(A,B)=d(B,C)=0.5, d(A,C)=1.0; input order A, C, B
        // so C is examined before B has joined. Literal: {A,B},{C}.
        let feats = points2d(&[(0.0, 0.0), (1.0, 0.0), (0.5, 0.0)]);
        let mut c = cfg(0.6, Metric::Euclidean);
        c.mode = Mode::Literal;
        let p = cluster_threshold(&feats, &c).unwrap();
        assert_eq!(p.clusters(), &[vec![0, 2], vec![1]]);
        // Fixpoint closes the chain.
        c.mode = Mode::Fixpoint;
        let p = cluster_threshold(&feats, &c).unwrap();
        assert_eq!(p.clusters(), &[vec![0, 1, 2]]);
    }

    #[test]
    fn literal_single_pass_simulator_oracle() {
        // Step simulator: replay the pseudocode over explicit pairwise
        // distances, independent of the implementation path.
        let pts = [(0.0, 0.0), (1.0, 0.0), (0.5, 0.0), (3.0, 0.0), (3.4, 0.0)];
        let feats = points2d(&pts);
        let tau = 0.6;
        let d = |i: usize, j: usize| {
            ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt()
        };
        let mut remaining: Vec<usize> = (0..pts.len()).collect();
        let mut expected: Vec<Vec<usize>> = Vec::new();
        while !remaining.is_empty() {
            let seed = remaining.remove(0);
            let mut cluster = vec![seed];
            let mut rest = Vec::new();
            for f in remaining {
                if cluster.iter().any(|&m| d(m, f) < tau) {
                    cluster.push(f);
                } else {
                    rest.push(f);
                }
            }
            remaining = rest;
            cluster.sort_unstable();
            expected.push(cluster);
        }
        expected.sort_by_key(|c| c[0]);
        let mut c = cfg(tau, Metric::Euclidean);
        c.mode = Mode::Literal;
        let p = cluster_threshold(&feats, &c).unwrap();
        assert_eq!(p.clusters(), &expected[..]);
    }

    #[test]
    fn literal_members_are_within_tau_of_another_member() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let feats: Vec<_> = (0..40)
                .map(|_| {
                    crate::gallery::FeatureVector::new(vec![
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(-2.0..2.0),
                    ])
                    .unwrap()
                })
                .collect();
            let mut c = cfg(0.8, Metric::Euclidean);
            c.mode = Mode::Literal;
            c.order = Order::SeededRandom;
            c.seed = rng.gen();
            let p = cluster_threshold(&feats, &c).unwrap();
            for cluster in p.clusters() {
                if cluster.len() < 2 {
                    continue;
                }
                for &i in cluster {
                    let near = cluster.iter().any(|&j| {
                        j != i
                            && crate::similarity::distance(Metric::Euclidean, &feats[i], &feats[j])
                                .unwrap()
                                < 0.8
                    });
                    assert!(near, "cluster member {i} has no neighbor within tau");
                }
            }
        }
    }

    #[test]
    fn fixpoint_matches_union_find_both_metrics() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for metric in [Metric::Euclidean, Metric::CosineDistance] {
            for _ in 0..10 {
                let feats: Vec<_> = (0..60)
                    .map(|_| {
                        crate::gallery::FeatureVector::new(
                            (0..8).map(|_| rng.gen_range(-1.0..1.0f64)).collect(),
                        )
                        .unwrap()
                    })
                    .collect();
                let tau = rng.gen_range(0.05..1.0);
                let mut c = cfg(tau, metric);
                c.order = Order::SeededRandom;
                c.seed = rng.gen();
                let p = cluster_threshold(&feats, &c).unwrap();
                assert_eq!(p, union_find_components(&feats, metric, tau));
            }
        }
    }

    #[test]
    fn refinement_monotone_in_tau() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let feats: Vec<_> = (0..50)
            .map(|_| {
                crate::gallery::FeatureVector::new(vec![
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ])
                .unwrap()
            })
            .collect();
        let mut prev: Option<Partition> = None;
        for step in 1..=15 {
            let tau = 0.05 * step as f64;
            let p = cluster_threshold(&feats, &cfg(tau, Metric::Euclidean)).unwrap();
            if let Some(ref finer) = prev {
                assert!(finer.refines(&p, feats.len()));
                assert!(p.num_clusters() <= finer.num_clusters());
            }
            prev = Some(p);
        }
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let feats: Vec<_> = (0..30)
            .map(|_| {
                crate::gallery::FeatureVector::new(vec![
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ])
                .unwrap()
            })
            .collect();
        let mut c = cfg(0.4, Metric::Euclidean);
        c.mode = Mode::Literal;
        c.order = Order::SeededRandom;
        c.seed = 1234;
        let first = cluster_threshold(&feats, &c).unwrap();
        for _ in 0..5 {
            assert_eq!(cluster_threshold(&feats, &c).unwrap(), first);
        }
    }

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
}
