//! Training objectives as pure numeric evaluators over embedding batches,
//! with the PK sampling strategy. Evaluation only: no gradients.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gallery::{FeatureVector, Gallery};
use crate::scalar::Real;
use crate::similarity::{distance, Metric};

/// P nodule classes with K tracklet embeddings each.
#[derive(Debug, Clone)]
pub struct PkBatch<F: Real> {
    p: usize,
    k: usize,
    embeddings: Vec<FeatureVector<F>>,
    labels: Vec<usize>,
}

impl<F: Real> PkBatch<F> {
    /// Validates that exactly P distinct labels appear, each exactly K times.
    pub fn new(embeddings: Vec<FeatureVector<F>>, labels: Vec<usize>) -> Result<Self> {
        if embeddings.len() != labels.len() {
            return Err(Error::InvalidConfig(format!(
                "{} embeddings but {} labels",
                embeddings.len(),
                labels.len()
            )));
        }
        if embeddings.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for &l in &labels {
            *counts.entry(l).or_default() += 1;
        }
        let p = counts.len();
        let k = embeddings.len() / p;
        if p * k != embeddings.len() || counts.values().any(|&c| c != k) {
            return Err(Error::InvalidConfig(
                "labels do not form P classes with exactly K samples each".into(),
            ));
        }
        Ok(Self {
            p,
            k,
            embeddings,
            labels,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn embeddings(&self) -> &[FeatureVector<F>] {
        &self.embeddings
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}

/// One labeled pair; `same_nodule` is the y of the verification objectives.
#[derive(Debug, Clone)]
pub struct PairSample<F: Real> {
    pub a: FeatureVector<F>,
    pub b: FeatureVector<F>,
    pub same_nodule: bool,
    /// Two-class scores from an external verification head, when present.
    pub logits: Option<[F; 2]>,
}

/// Batch of labeled embedding pairs.
#[derive(Debug, Clone)]
pub struct LabeledPairBatch<F: Real> {
    pub pairs: Vec<PairSample<F>>,
}

/// Max-subtracted exponent normalization; sums to 1, entries in (0, 1).
pub fn softmax<F: Real>(scores: &[F]) -> Result<Vec<F>> {
    if scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidConfig("non-finite score".into()));
    }
    let max = scores.iter().cloned().fold(F::neg_infinity(), F::max);
    let exps: Vec<F> = scores.iter().map(|&s| (s - max).exp()).collect();
    let total: F = exps.iter().cloned().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Batch-hard triplet loss: for every anchor, hinge on the farthest
/// same-class distance minus the closest other-class distance, summed over
/// all P*K anchors (no averaging). The anchor itself is included in the
/// positive max, which never changes the value.
pub fn trihard_loss<F: Real>(batch: &PkBatch<F>, margin: F, metric: Metric) -> Result<F> {
    if batch.p() < 2 || batch.k() < 2 {
        return Err(Error::InvalidConfig(format!(
            "trihard needs P >= 2 and K >= 2, got P={} K={}",
            batch.p(),
            batch.k()
        )));
    }
    if !(margin.is_finite() && margin >= F::zero()) {
        return Err(Error::InvalidConfig(format!(
            "margin must be finite and non-negative, got {margin}"
        )));
    }
    let n = batch.embeddings.len();
    let mut total = F::zero();
    for a in 0..n {
        let mut hardest_pos = F::neg_infinity();
        let mut hardest_neg = F::infinity();
        for b in 0..n {
            let d = distance(metric, &batch.embeddings[a], &batch.embeddings[b])?;
            if batch.labels[a] == batch.labels[b] {
                // ties resolve to the lowest index: strict > keeps the first
                if d > hardest_pos {
                    hardest_pos = d;
                }
            } else if d < hardest_neg {
                hardest_neg = d;
            }
        }
        total = total + (margin + hardest_pos - hardest_neg).max(F::zero());
    }
    Ok(total)
}

/// Mean-per-anchor variant of [`trihard_loss`] for cross-pipeline
/// comparison.
pub fn trihard_loss_mean<F: Real>(batch: &PkBatch<F>, margin: F, metric: Metric) -> Result<F> {
    let sum = trihard_loss(batch, margin, metric)?;
    Ok(sum / F::from_usize(batch.p() * batch.k()).unwrap())
}

/// Multi-class cross-entropy over softmaxed logits, averaged over the batch.
/// `labels` rows must be one-hot.
pub fn classification_loss<F: Real>(logits: &[Vec<F>], labels: &[Vec<F>]) -> Result<F> {
    if logits.is_empty() {
        return Err(Error::EmptyInput);
    }
    if logits.len() != labels.len() {
        return Err(Error::InvalidConfig(format!(
            "{} logit rows but {} label rows",
            logits.len(),
            labels.len()
        )));
    }
    let c = logits[0].len();
    if c < 2 {
        return Err(Error::InvalidConfig("need at least 2 classes".into()));
    }
    let mut total = F::zero();
    for (row, (scores, onehot)) in logits.iter().zip(labels).enumerate() {
        if scores.len() != c || onehot.len() != c {
            return Err(Error::InvalidConfig(format!(
                "row {row} has inconsistent width"
            )));
        }
        let mut target = None;
        for (i, &v) in onehot.iter().enumerate() {
            if v == F::one() {
                if target.replace(i).is_some() {
                    return Err(Error::NotOneHot { row });
                }
            } else if v != F::zero() {
                return Err(Error::NotOneHot { row });
            }
        }
        let target = target.ok_or(Error::NotOneHot { row })?;
        let probs = softmax(scores)?;
        total = total - probs[target].ln();
    }
    Ok(total / F::from_usize(logits.len()).unwrap())
}

/// Classification objective: cross-entropy plus batch-hard triplet loss.
pub fn combined_classification_objective<F: Real>(
    batch: &PkBatch<F>,
    logits: &[Vec<F>],
    labels: &[Vec<F>],
    margin: F,
    metric: Metric,
) -> Result<F> {
    Ok(classification_loss(logits, labels)? + trihard_loss(batch, margin, metric)?)
}

/// Contrastive loss `(1/2N) sum[y d^2 + (1-y) max(0, m - d)]` with the
/// euclidean embedding distance. The negative term is not squared.
pub fn contrastive_loss<F: Real>(batch: &LabeledPairBatch<F>, margin: F) -> Result<F> {
    if batch.pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(margin.is_finite() && margin > F::zero()) {
        return Err(Error::InvalidConfig(format!(
            "margin must be finite and positive, got {margin}"
        )));
    }
    let mut total = F::zero();
    for pair in &batch.pairs {
        let d = distance(Metric::Euclidean, &pair.a, &pair.b)?;
        total = total
            + if pair.same_nodule {
                d * d
            } else {
                (margin - d).max(F::zero())
            };
    }
    let two_n = F::from_usize(2 * batch.pairs.len()).unwrap();
    Ok(total / two_n)
}

/// Binary cross-entropy over the two-class softmax of each pair's logits.
pub fn verification_cross_entropy<F: Real>(batch: &LabeledPairBatch<F>) -> Result<F> {
    if batch.pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut total = F::zero();
    for (i, pair) in batch.pairs.iter().enumerate() {
        let logits = pair
            .logits
            .ok_or_else(|| Error::InvalidConfig(format!("pair {i} has no logits")))?;
        let probs = softmax(&logits)?;
        let p = if pair.same_nodule { probs[1] } else { probs[0] };
        total = total - p.ln();
    }
    Ok(total / F::from_usize(batch.pairs.len()).unwrap())
}

/// Verification objective: binary cross-entropy plus contrastive loss.
pub fn combined_verification_objective<F: Real>(
    batch: &LabeledPairBatch<F>,
    margin: F,
) -> Result<F> {
    Ok(verification_cross_entropy(batch)? + contrastive_loss(batch, margin)?)
}

/// Draws a PK batch from a gallery with ground truth: P distinct nodules,
/// K tracklets each, with replacement only when a nodule has fewer than K
/// tracklets. Deterministic given the seed. Class labels are indices into
/// the drawn classes, 0..P.
pub fn sample_pk_batch<F: Real>(
    gallery: &Gallery<F>,
    p: usize,
    k: usize,
    seed: u64,
) -> Result<PkBatch<F>> {
    if p < 1 || k < 1 {
        return Err(Error::InvalidConfig("P and K must be >= 1".into()));
    }
    let mut by_nodule: Vec<(String, Vec<usize>)> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, rec) in gallery.records().iter().enumerate() {
        let nodule = rec
            .nodule_id
            .as_deref()
            .ok_or_else(|| Error::MissingNoduleId(rec.tracklet_id.clone()))?;
        match index.get(nodule) {
            Some(&g) => by_nodule[g].1.push(i),
            None => {
                index.insert(nodule, by_nodule.len());
                by_nodule.push((nodule.to_string(), vec![i]));
            }
        }
    }
    drop(index);
    if by_nodule.len() < p {
        return Err(Error::TooFewNodules {
            needed: p,
            found: by_nodule.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut class_order: Vec<usize> = (0..by_nodule.len()).collect();
    class_order.shuffle(&mut rng);
    class_order.truncate(p);

    let mut embeddings = Vec::with_capacity(p * k);
    let mut labels = Vec::with_capacity(p * k);
    for (class, &nodule) in class_order.iter().enumerate() {
        let members = &by_nodule[nodule].1;
        let chosen: Vec<usize> = if members.len() >= k {
            let mut pool = members.clone();
            pool.shuffle(&mut rng);
            pool.truncate(k);
            pool
        } else {
            (0..k)
                .map(|_| members[rng.gen_range(0..members.len())])
                .collect()
        };
        for i in chosen {
            embeddings.push(gallery.records()[i].embedding.clone());
            labels.push(class);
        }
    }
    PkBatch::new(embeddings, labels)
}
