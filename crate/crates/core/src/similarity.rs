//! Distance and similarity kernels between feature vectors, and
//! threshold-based pairwise verification decisions.

use crate::error::{Error, Result};
use crate::gallery::{FeatureVector, Gallery};
use crate::scalar::Real;

/// Distance map used for matching and clustering.
///
/// Cosine distance is `1 - cosine_similarity`, range `[0, 2]`, so the
/// clustering comparison `d < tau` reads as a proper distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    CosineDistance,
    Euclidean,
}

fn check_dims<F: Real>(a: &FeatureVector<F>, b: &FeatureVector<F>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(())
}

/// Cosine similarity `(a.b)/(|a||b|)`, clamped to `[-1, 1]` against rounding
/// overshoot. Zero-norm inputs are an error: they signal a degenerate
/// extractor output.
pub fn cosine_similarity<F: Real>(a: &FeatureVector<F>, b: &FeatureVector<F>) -> Result<F> {
    check_dims(a, b)?;
    let mut dot = F::zero();
    let mut na = F::zero();
    let mut nb = F::zero();
    for (&x, &y) in a.as_slice().iter().zip(b.as_slice()) {
        dot = dot + x * y;
        na = na + x * x;
        nb = nb + y * y;
    }
    if na == F::zero() || nb == F::zero() {
        return Err(Error::ZeroNorm);
    }
    let sim = dot / (na.sqrt() * nb.sqrt());
    Ok(sim.min(F::one()).max(-F::one()))
}

fn euclidean<F: Real>(a: &FeatureVector<F>, b: &FeatureVector<F>) -> F {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<F>()
        .sqrt()
}

/// Distance between two embeddings under the given metric.
pub fn distance<F: Real>(metric: Metric, a: &FeatureVector<F>, b: &FeatureVector<F>) -> Result<F> {
    match metric {
        Metric::CosineDistance => Ok(F::one() - cosine_similarity(a, b)?),
        Metric::Euclidean => {
            check_dims(a, b)?;
            Ok(euclidean(a, b))
        }
    }
}

/// Symmetric pairwise distance matrix with a zero diagonal, stored dense.
#[derive(Debug, Clone)]
pub struct DistanceMatrix<F: Real> {
    n: usize,
    data: Vec<F>,
}

impl<F: Real> DistanceMatrix<F> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> F {
        self.data[i * self.n + j]
    }
}

/// Evaluates distances against a fixed feature set, caching norms for the
/// cosine metric.
pub(crate) struct MetricEval<'a, F: Real> {
    metric: Metric,
    features: &'a [FeatureVector<F>],
    norms: Vec<F>,
}

impl<'a, F: Real> MetricEval<'a, F> {
    pub fn new(metric: Metric, features: &'a [FeatureVector<F>]) -> Result<Self> {
        if let Some(first) = features.first() {
            let dim = first.dim();
            for f in features {
                if f.dim() != dim {
                    return Err(Error::DimMismatch {
                        left: dim,
                        right: f.dim(),
                    });
                }
            }
        }
        let norms = match metric {
            Metric::CosineDistance => {
                let norms: Vec<F> = features.iter().map(FeatureVector::norm).collect();
                if norms.iter().any(|&n| n == F::zero()) {
                    return Err(Error::ZeroNorm);
                }
                norms
            }
            Metric::Euclidean => Vec::new(),
        };
        Ok(Self {
            metric,
            features,
            norms,
        })
    }

    pub fn dist(&self, i: usize, j: usize) -> F {
        let (a, b) = (&self.features[i], &self.features[j]);
        match self.metric {
            Metric::Euclidean => euclidean(a, b),
            Metric::CosineDistance => {
                let mut dot = F::zero();
                for (&x, &y) in a.as_slice().iter().zip(b.as_slice()) {
                    dot = dot + x * y;
                }
                let sim = (dot / (self.norms[i] * self.norms[j]))
                    .min(F::one())
                    .max(-F::one());
                F::one() - sim
            }
        }
    }
}

/// Full pairwise distance matrix over a gallery's embeddings.
pub fn pairwise_distance_matrix<F: Real>(
    gallery: &Gallery<F>,
    metric: Metric,
) -> Result<DistanceMatrix<F>> {
    let features: Vec<FeatureVector<F>> = gallery
        .records()
        .iter()
        .map(|r| r.embedding.clone())
        .collect();
    let eval = MetricEval::new(metric, &features)?;
    let n = features.len();
    let mut data = vec![F::zero(); n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = eval.dist(i, j);
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix { n, data })
}

/// Same-nodule decision by cosine similarity: positive iff
/// `score >= threshold`.
pub fn verify_pair<F: Real>(
    a: &FeatureVector<F>,
    b: &FeatureVector<F>,
    threshold: F,
) -> Result<(bool, F)> {
    let score = cosine_similarity(a, b)?;
    Ok((score >= threshold, score))
}
