//! Flat-kernel mean-shift baseline. Mode seeking is defined in the vector
//! space, so only the euclidean metric is accepted.

use crate::error::{Error, Result};
use crate::gallery::{FeatureVector, Partition};
use crate::scalar::Real;
use crate::similarity::Metric;

const MAX_SHIFT_ITER: usize = 500;

fn sq_dist<F: Real>(a: &[F], b: &[F]) -> F {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<F>()
}

pub fn cluster_mean_shift<F: Real>(
    features: &[FeatureVector<F>],
    bandwidth: F,
    metric: Metric,
) -> Result<Partition> {
    if metric != Metric::Euclidean {
        return Err(Error::NonEuclideanMetric);
    }
    if !(bandwidth.is_finite() && bandwidth > F::zero()) {
        return Err(Error::InvalidConfig(format!(
            "bandwidth must be finite and positive, got {bandwidth}"
        )));
    }
    if features.is_empty() {
        return Ok(Partition::empty());
    }
    let n = features.len();
    let dim = features[0].dim();
    for f in features {
        if f.dim() != dim {
            return Err(Error::DimMismatch {
                left: dim,
                right: f.dim(),
            });
        }
    }
    let bw_sq = bandwidth * bandwidth;
    let convergence_eps = F::from_f64_lossy(1e-5) * bandwidth;
    let conv_sq = convergence_eps * convergence_eps;

    // Shift every point to its local mean until it stalls.
    let mut modes: Vec<Vec<F>> = Vec::with_capacity(n);
    for start in features {
        let mut pos: Vec<F> = start.as_slice().to_vec();
        for _ in 0..MAX_SHIFT_ITER {
            let mut mean = vec![F::zero(); dim];
            let mut count = F::zero();
            for f in features {
                if sq_dist(&pos, f.as_slice()) <= bw_sq {
                    for (m, &v) in mean.iter_mut().zip(f.as_slice()) {
                        *m = *m + v;
                    }
                    count = count + F::one();
                }
            }
            for m in &mut mean {
                *m = *m / count;
            }
            let moved = sq_dist(&pos, &mean);
            pos = mean;
            if moved < conv_sq {
                break;
            }
        }
        modes.push(pos);
    }

    // Merge modes closer than the bandwidth, first-come order.
    let mut kept: Vec<Vec<F>> = Vec::new();
    let mut assignment = vec![0usize; n];
    for (i, mode) in modes.iter().enumerate() {
        match kept.iter().position(|k| sq_dist(k, mode) < bw_sq) {
            Some(cid) => assignment[i] = cid,
            None => {
                assignment[i] = kept.len();
                kept.push(mode.clone());
            }
        }
    }
    let mut clusters = vec![Vec::new(); kept.len()];
    for (i, &cid) in assignment.iter().enumerate() {
        clusters[cid].push(i);
    }
    Partition::new(clusters, n)
}
