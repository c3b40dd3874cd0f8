//! Affinity-propagation baseline: responsibility/availability message
//! passing over similarities `s(i,k) = -d(i,k)^2` with damping.

use crate::error::{Error, Result};
use crate::gallery::{FeatureVector, Partition};
use crate::scalar::Real;
use crate::similarity::{Metric, MetricEval};

/// Diagonal of the similarity matrix; controls how eager points are to
/// become exemplars.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preference<F: Real> {
    /// Median of the off-diagonal similarities.
    Median,
    Value(F),
}

#[derive(Debug, Clone)]
pub struct ApParams<F: Real> {
    /// In [0.5, 1).
    pub damping: F,
    pub max_iter: usize,
    pub preference: Preference<F>,
    pub metric: Metric,
    /// Consecutive iterations the exemplar set must stay unchanged.
    pub convergence_iter: usize,
}

impl<F: Real> Default for ApParams<F> {
    fn default() -> Self {
        Self {
            damping: F::from_f64_lossy(0.9),
            max_iter: 200,
            preference: Preference::Median,
            metric: Metric::Euclidean,
            convergence_iter: 15,
        }
    }
}

/// Partition plus a convergence flag; non-convergence is a warning, not an
/// error, and the partial result is still evaluable.
#[derive(Debug, Clone)]
pub struct AffinityOutcome {
    pub partition: Partition,
    pub converged: bool,
}

pub fn cluster_affinity_propagation<F: Real>(
    features: &[FeatureVector<F>],
    params: &ApParams<F>,
) -> Result<AffinityOutcome> {
    let half = F::from_f64_lossy(0.5);
    if !(params.damping >= half && params.damping < F::one()) {
        return Err(Error::InvalidConfig(format!(
            "damping must lie in [0.5, 1), got {}",
            params.damping
        )));
    }
    if params.max_iter < 1 {
        return Err(Error::InvalidConfig("max_iter must be >= 1".into()));
    }
    if features.is_empty() {
        return Ok(AffinityOutcome {
            partition: Partition::empty(),
            converged: true,
        });
    }

    // Collapse exact duplicates: message passing cannot break the symmetry
    // of coincident points, and they must land in one cluster anyway.
    let n = features.len();
    let mut unique: Vec<usize> = Vec::new();
    let mut group_of = vec![0usize; n];
    for i in 0..n {
        match unique
            .iter()
            .position(|&u| features[u].as_slice() == features[i].as_slice())
        {
            Some(g) => group_of[i] = g,
            None => {
                group_of[i] = unique.len();
                unique.push(i);
            }
        }
    }
    let m = unique.len();
    if m == 1 {
        return Ok(AffinityOutcome {
            partition: Partition::new(vec![(0..n).collect()], n)?,
            converged: true,
        });
    }

    let rep_features: Vec<FeatureVector<F>> =
        unique.iter().map(|&i| features[i].clone()).collect();
    let eval = MetricEval::new(params.metric, &rep_features)?;
    let mut sim = vec![F::zero(); m * m];
    let mut off_diag = Vec::with_capacity(m * (m - 1));
    for i in 0..m {
        for k in 0..m {
            if i != k {
                let d = eval.dist(i, k);
                sim[i * m + k] = -(d * d);
                off_diag.push(sim[i * m + k]);
            }
        }
    }
    let preference = match params.preference {
        Preference::Value(v) => v,
        Preference::Median => {
            off_diag.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mid = off_diag.len() / 2;
            if off_diag.len() % 2 == 0 {
                (off_diag[mid - 1] + off_diag[mid]) * half
            } else {
                off_diag[mid]
            }
        }
    };
    for i in 0..m {
        sim[i * m + i] = preference;
    }

    let lambda = params.damping;
    let keep = F::one() - lambda;
    let mut resp = vec![F::zero(); m * m];
    let mut avail = vec![F::zero(); m * m];
    let mut exemplars: Vec<bool> = vec![false; m];
    let mut stable_rounds = 0usize;
    let mut converged = false;

    for _ in 0..params.max_iter {
        // responsibilities
        for i in 0..m {
            // top two of a(i,k') + s(i,k') across k'
            let mut best = F::neg_infinity();
            let mut second = F::neg_infinity();
            let mut best_k = 0usize;
            for k in 0..m {
                let v = avail[i * m + k] + sim[i * m + k];
                if v > best {
                    second = best;
                    best = v;
                    best_k = k;
                } else if v > second {
                    second = v;
                }
            }
            for k in 0..m {
                let max_other = if k == best_k { second } else { best };
                let new_r = sim[i * m + k] - max_other;
                resp[i * m + k] = lambda * resp[i * m + k] + keep * new_r;
            }
        }
        // availabilities
        for k in 0..m {
            let mut pos_sum = F::zero();
            for i in 0..m {
                if i != k {
                    pos_sum = pos_sum + resp[i * m + k].max(F::zero());
                }
            }
            for i in 0..m {
                let new_a = if i == k {
                    pos_sum
                } else {
                    let without_i = pos_sum - resp[i * m + k].max(F::zero());
                    (resp[k * m + k] + without_i).min(F::zero())
                };
                avail[i * m + k] = lambda * avail[i * m + k] + keep * new_a;
            }
        }
        let current: Vec<bool> = (0..m)
            .map(|k| resp[k * m + k] + avail[k * m + k] > F::zero())
            .collect();
        if current == exemplars && current.iter().any(|&e| e) {
            stable_rounds += 1;
            if stable_rounds >= params.convergence_iter {
                converged = true;
                break;
            }
        } else {
            stable_rounds = 0;
            exemplars = current;
        }
    }

    let exemplar_ids: Vec<usize> = (0..m).filter(|&k| exemplars[k]).collect();
    let rep_assignment: Vec<usize> = if exemplar_ids.is_empty() {
        converged = false;
        (0..m).collect() // every representative its own cluster
    } else {
        (0..m)
            .map(|i| {
                if exemplars[i] {
                    i
                } else {
                    *exemplar_ids
                        .iter()
                        .max_by(|&&a, &&b| {
                            sim[i * m + a].partial_cmp(&sim[i * m + b]).unwrap()
                        })
                        .unwrap()
                }
            })
            .collect()
    };

    let mut cluster_of_rep = std::collections::HashMap::new();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let rep = rep_assignment[group_of[i]];
        let cid = *cluster_of_rep.entry(rep).or_insert_with(|| {
            clusters.push(Vec::new());
            clusters.len() - 1
        });
        clusters[cid].push(i);
    }
    Ok(AffinityOutcome {
        partition: Partition::new(clusters, n)?,
        converged,
    })
}
