//! ROC curves, AUC, and operating-point statistics over scored pairs.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Two tracklet ids, a similarity score, and the same-nodule ground truth;
/// the atom of ROC and pairwise evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPair<F: Real> {
    pub pair_id: String,
    pub id_a: String,
    pub id_b: String,
    pub score: F,
    pub label: bool,
}

impl<F: Real> ScoredPair<F> {
    /// Pair without identity metadata, for in-memory evaluation.
    pub fn anonymous(score: F, label: bool) -> Self {
        Self {
            pair_id: String::new(),
            id_a: String::new(),
            id_b: String::new(),
            score,
            label,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocPoint<F: Real> {
    pub fpr: F,
    pub tpr: F,
    pub threshold: F,
}

/// ROC curve points sorted by threshold descending, with trapezoid AUC.
/// Equal scores are grouped into one threshold step.
#[derive(Debug, Clone)]
pub struct RocCurve<F: Real> {
    pub points: Vec<RocPoint<F>>,
    pub auc: F,
}

fn class_counts<F: Real>(pairs: &[ScoredPair<F>]) -> Result<(usize, usize)> {
    let pos = pairs.iter().filter(|p| p.label).count();
    let neg = pairs.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    Ok((pos, neg))
}

pub fn roc_curve<F: Real>(pairs: &[ScoredPair<F>]) -> Result<RocCurve<F>> {
    let (pos, neg) = class_counts(pairs)?;
    let mut scored: Vec<(F, bool)> = pairs.iter().map(|p| (p.score, p.label)).collect();
    if scored.iter().any(|(s, _)| !s.is_finite()) {
        return Err(Error::InvalidConfig("non-finite score".into()));
    }
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    let (pos_f, neg_f) = (F::from_usize(pos).unwrap(), F::from_usize(neg).unwrap());
    let mut points = vec![RocPoint {
        fpr: F::zero(),
        tpr: F::zero(),
        threshold: F::infinity(),
    }];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut auc = F::zero();
    let mut i = 0;
    while i < scored.len() {
        let threshold = scored[i].0;
        while i < scored.len() && scored[i].0 == threshold {
            if scored[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let prev = points.last().unwrap().clone();
        let point = RocPoint {
            fpr: F::from_usize(fp).unwrap() / neg_f,
            tpr: F::from_usize(tp).unwrap() / pos_f,
            threshold,
        };
        let half = F::from_f64_lossy(0.5);
        auc = auc + (point.fpr - prev.fpr) * (point.tpr + prev.tpr) * half;
        points.push(point);
    }
    Ok(RocCurve { points, auc })
}

/// AUC as the Mann-Whitney statistic: fraction of positive/negative pairs
/// ranked concordantly, ties counted one half. Computed through midranks;
/// equals the trapezoid AUC.
pub fn mann_whitney_auc<F: Real>(pairs: &[ScoredPair<F>]) -> Result<F> {
    let (pos, neg) = class_counts(pairs)?;
    let scores: Vec<f64> = pairs.iter().map(|p| p.score.to_f64_lossy()).collect();
    let ranks = midranks(&scores);
    let pos_rank_sum: f64 = pairs
        .iter()
        .zip(&ranks)
        .filter(|(p, _)| p.label)
        .map(|(_, &r)| r)
        .sum();
    let m = pos as f64;
    let n = neg as f64;
    let auc = (pos_rank_sum - m * (m + 1.0) / 2.0) / (m * n);
    Ok(F::from_f64_lossy(auc))
}

/// 1-based midranks: tied values share the average of their rank range.
pub(crate) fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let mid = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = mid;
        }
        i = j;
    }
    ranks
}

/// A point estimate with a confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<F: Real> {
    pub value: F,
    pub lower: F,
    pub upper: F,
}

/// Accuracy, sensitivity and specificity at one decision threshold.
#[derive(Debug, Clone)]
pub struct OperatingPoint<F: Real> {
    pub accuracy: Estimate<F>,
    pub sensitivity: Estimate<F>,
    pub specificity: Estimate<F>,
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval<F: Real>(successes: u64, total: u64, z: f64) -> Estimate<F> {
    let s = successes as f64;
    let t = total as f64;
    let p = s / t;
    let z2 = z * z;
    let denom = 1.0 + z2 / t;
    let center = (p + z2 / (2.0 * t)) / denom;
    let half = z * (p * (1.0 - p) / t + z2 / (4.0 * t * t)).sqrt() / denom;
    Estimate {
        value: F::from_f64_lossy(p),
        lower: F::from_f64_lossy((center - half).max(0.0)),
        upper: F::from_f64_lossy((center + half).min(1.0)),
    }
}

fn normal_quantile(level: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).unwrap();
    normal.inverse_cdf(0.5 + level / 2.0)
}

/// Decisions via `score >= threshold`; Wilson intervals at the given
/// confidence level.
pub fn operating_point<F: Real>(
    pairs: &[ScoredPair<F>],
    threshold: F,
    level: f64,
) -> Result<OperatingPoint<F>> {
    class_counts(pairs)?;
    let (mut tp, mut fp, mut tn, mut fn_) = (0u64, 0u64, 0u64, 0u64);
    for pair in pairs {
        let decision = pair.score >= threshold;
        match (pair.label, decision) {
            (true, true) => tp += 1,
            (true, false) => fn_ += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
        }
    }
    let z = normal_quantile(level);
    Ok(OperatingPoint {
        accuracy: wilson_interval(tp + tn, tp + tn + fp + fn_, z),
        sensitivity: wilson_interval(tp, tp + fn_, z),
        specificity: wilson_interval(tn, tn + fp, z),
        tp,
        fp,
        tn,
        fn_,
    })
}
