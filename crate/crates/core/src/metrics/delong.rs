//! DeLong variance estimation for AUCs and the paired-model test.
//!
//! Structural components come from midrank placement values, O(n log n); an
//! O(n^2) indicator-sum oracle pins them in the test suite.

use statrs::function::erf::erfc;

use super::roc::{midranks, ScoredPair};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// AUC plus the placement values of positives (V10) and negatives (V01).
pub(crate) struct Placements {
    pub auc: f64,
    pub v10: Vec<f64>,
    pub v01: Vec<f64>,
}

pub(crate) fn placements<F: Real>(pairs: &[ScoredPair<F>]) -> Result<Placements> {
    let pos: Vec<f64> = pairs
        .iter()
        .filter(|p| p.label)
        .map(|p| p.score.to_f64_lossy())
        .collect();
    let neg: Vec<f64> = pairs
        .iter()
        .filter(|p| !p.label)
        .map(|p| p.score.to_f64_lossy())
        .collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass);
    }
    let (m, n) = (pos.len(), neg.len());
    let mut all = pos.clone();
    all.extend_from_slice(&neg);
    let t = midranks(&all);
    let tx = midranks(&pos);
    let ty = midranks(&neg);
    let v10: Vec<f64> = (0..m).map(|i| (t[i] - tx[i]) / n as f64).collect();
    let v01: Vec<f64> = (0..n).map(|j| 1.0 - (t[m + j] - ty[j]) / m as f64).collect();
    let auc = (t[..m].iter().sum::<f64>() - (m * (m + 1)) as f64 / 2.0) / (m * n) as f64;
    Ok(Placements { auc, v10, v01 })
}

fn sample_cov(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (
        a.iter().sum::<f64>() / n,
        b.iter().sum::<f64>() / n,
    );
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - ma) * (y - mb))
        .sum::<f64>()
        / (n - 1.0)
}

/// AUC with a DeLong normal-approximation confidence interval, clipped to
/// [0, 1]. Requires at least two samples per class.
pub fn auc_confidence_interval<F: Real>(
    pairs: &[ScoredPair<F>],
    level: f64,
) -> Result<(f64, f64, f64)> {
    let p = placements(pairs)?;
    if p.v10.len() < 2 || p.v01.len() < 2 {
        return Err(Error::InvalidConfig(
            "need at least 2 samples per class for a variance estimate".into(),
        ));
    }
    let var = sample_cov(&p.v10, &p.v10) / p.v10.len() as f64
        + sample_cov(&p.v01, &p.v01) / p.v01.len() as f64;
    let normal = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
    use statrs::distribution::ContinuousCDF;
    let z = normal.inverse_cdf(0.5 + level / 2.0);
    let half = z * var.max(0.0).sqrt();
    Ok((p.auc, (p.auc - half).max(0.0), (p.auc + half).min(1.0)))
}

/// Result of the paired DeLong comparison.
#[derive(Debug, Clone, Copy)]
pub struct DelongResult {
    pub auc_a: f64,
    pub auc_b: f64,
    pub z: f64,
    pub p_value: f64,
}

/// Two-sided DeLong test for the AUC difference of two models scored on the
/// identical pair set in the same order.
pub fn delong_test<F: Real>(
    pairs_a: &[ScoredPair<F>],
    pairs_b: &[ScoredPair<F>],
) -> Result<DelongResult> {
    if pairs_a.len() != pairs_b.len() {
        return Err(Error::MisalignedPairs(format!(
            "{} pairs vs {}",
            pairs_a.len(),
            pairs_b.len()
        )));
    }
    for (i, (a, b)) in pairs_a.iter().zip(pairs_b).enumerate() {
        if a.label != b.label {
            return Err(Error::MisalignedPairs(format!(
                "label mismatch at pair {i}"
            )));
        }
        if !a.pair_id.is_empty() && !b.pair_id.is_empty() && a.pair_id != b.pair_id {
            return Err(Error::MisalignedPairs(format!(
                "pair id mismatch at {i}: `{}` vs `{}`",
                a.pair_id, b.pair_id
            )));
        }
    }
    let pa = placements(pairs_a)?;
    let pb = placements(pairs_b)?;
    let diff = pa.auc - pb.auc;
    if diff == 0.0 {
        return Ok(DelongResult {
            auc_a: pa.auc,
            auc_b: pb.auc,
            z: 0.0,
            p_value: 1.0,
        });
    }
    let m = pa.v10.len() as f64;
    let n = pa.v01.len() as f64;
    let var = (sample_cov(&pa.v10, &pa.v10) + sample_cov(&pb.v10, &pb.v10)
        - 2.0 * sample_cov(&pa.v10, &pb.v10))
        / m
        + (sample_cov(&pa.v01, &pa.v01) + sample_cov(&pb.v01, &pb.v01)
            - 2.0 * sample_cov(&pa.v01, &pb.v01))
            / n;
    if var <= 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let z = diff / var.sqrt();
    let p_value = erfc(z.abs() / std::f64::consts::SQRT_2);
    Ok(DelongResult {
        auc_a: pa.auc,
        auc_b: pb.auc,
        z,
        p_value,
    })
}
