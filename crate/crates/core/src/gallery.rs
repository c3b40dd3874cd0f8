//! Domain types shared by all modules: embeddings, tracklet metadata,
//! galleries, and partitions.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// An E-dimensional real embedding of one tracklet.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<F: Real> {
    values: Vec<F>,
}

impl<F: Real> FeatureVector<F> {
    /// Builds a vector, rejecting empty or non-finite input.
    pub fn new(values: Vec<F>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyEmbedding {
                record: String::from("<anonymous>"),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEntry {
                record: String::from("<anonymous>"),
                index,
            });
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[F] {
        &self.values
    }

    pub fn into_values(self) -> Vec<F> {
        self.values
    }

    /// Euclidean norm.
    pub fn norm(&self) -> F {
        self.values.iter().map(|&v| v * v).sum::<F>().sqrt()
    }
}

/// Embedding plus identity metadata for one tracklet.
#[derive(Debug, Clone)]
pub struct TrackletRecord<F: Real> {
    pub tracklet_id: String,
    /// One video per patient; this id doubles as the video id.
    pub patient_id: String,
    /// Ground truth; absent in pure-inference mode.
    pub nodule_id: Option<String>,
    pub length_frames: u32,
    pub embedding: FeatureVector<F>,
}

/// A validated collection of tracklet records with a uniform embedding
/// dimension. Immutable after construction; safe for concurrent reads.
#[derive(Debug, Clone)]
pub struct Gallery<F: Real> {
    records: Vec<TrackletRecord<F>>,
    dim: usize,
}

impl<F: Real> Gallery<F> {
    /// Validates and assembles a gallery. Input order is preserved.
    pub fn build(records: Vec<TrackletRecord<F>>) -> Result<Self> {
        let first = records.first().ok_or(Error::EmptyGallery)?;
        let dim = first.embedding.dim();
        let mut seen = HashSet::with_capacity(records.len());
        for rec in &records {
            if rec.embedding.dim() != dim {
                return Err(Error::DimensionMismatch {
                    record: rec.tracklet_id.clone(),
                    expected: dim,
                    found: rec.embedding.dim(),
                });
            }
            if let Some(index) = rec.embedding.as_slice().iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteEntry {
                    record: rec.tracklet_id.clone(),
                    index,
                });
            }
            if rec.length_frames < 1 {
                return Err(Error::InvalidLength {
                    record: rec.tracklet_id.clone(),
                    length: u64::from(rec.length_frames),
                });
            }
            if !seen.insert(rec.tracklet_id.as_str()) {
                return Err(Error::DuplicateTrackletId(rec.tracklet_id.clone()));
            }
        }
        // HashSet borrows from records; drop before moving.
        drop(seen);
        Ok(Self { records, dim })
    }

    pub fn records(&self) -> &[TrackletRecord<F>] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Record indices grouped by patient, in order of first appearance.
    pub fn patients(&self) -> Vec<(String, Vec<usize>)> {
        let mut order: Vec<String> = Vec::new();
        let mut groups: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, rec) in self.records.iter().enumerate() {
            let entry = groups.entry(rec.patient_id.as_str()).or_default();
            if entry.is_empty() {
                order.push(rec.patient_id.clone());
            }
            entry.push(i);
        }
        order
            .into_iter()
            .map(|p| {
                let idx = groups.remove(p.as_str()).unwrap();
                (p, idx)
            })
            .collect()
    }

    /// True iff every record carries a ground-truth nodule id.
    pub fn has_ground_truth(&self) -> bool {
        self.records.iter().all(|r| r.nodule_id.is_some())
    }
}

/// Each unordered within-patient pair exactly once; `same_nodule` is true iff
/// the ground-truth nodule ids are equal. Cross-patient pairs are never
/// generated.
pub fn patient_pairs<F: Real>(gallery: &Gallery<F>) -> Result<Vec<(usize, usize, bool)>> {
    for rec in gallery.records() {
        if rec.nodule_id.is_none() {
            return Err(Error::MissingNoduleId(rec.tracklet_id.clone()));
        }
    }
    let mut pairs = Vec::new();
    for (_, indices) in gallery.patients() {
        for (a, &i) in indices.iter().enumerate() {
            for &j in &indices[a + 1..] {
                let same = gallery.records()[i].nodule_id == gallery.records()[j].nodule_id;
                pairs.push((i, j, same));
            }
        }
    }
    Ok(pairs)
}

/// A clustering result: disjoint, non-empty groups of record indices
/// covering the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    clusters: Vec<Vec<usize>>,
}

impl Partition {
    /// Canonicalizes (members ascending, clusters ordered by first member)
    /// and validates disjointness and coverage of `0..n`.
    pub fn new(mut clusters: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        for c in &mut clusters {
            if c.is_empty() {
                return Err(Error::InvalidPartition("empty cluster".into()));
            }
            c.sort_unstable();
        }
        clusters.sort_unstable_by_key(|c| c[0]);
        let mut seen = vec![false; n];
        let mut total = 0usize;
        for c in &clusters {
            for &i in c {
                if i >= n {
                    return Err(Error::InvalidPartition(format!(
                        "index {i} out of range for {n} records"
                    )));
                }
                if seen[i] {
                    return Err(Error::InvalidPartition(format!("index {i} appears twice")));
                }
                seen[i] = true;
                total += 1;
            }
        }
        if total != n {
            return Err(Error::InvalidPartition(format!(
                "{total} of {n} indices covered"
            )));
        }
        Ok(Self { clusters })
    }

    pub fn empty() -> Self {
        Self { clusters: Vec::new() }
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    /// Cluster id per record index.
    pub fn assignments(&self, n: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; n];
        for (cid, c) in self.clusters.iter().enumerate() {
            for &i in c {
                out[i] = cid;
            }
        }
        out
    }

    /// True iff every cluster of `self` is contained in one cluster of
    /// `coarser`.
    pub fn refines(&self, coarser: &Partition, n: usize) -> bool {
        let coarse = coarser.assignments(n);
        self.clusters.iter().all(|c| {
            let target = coarse[c[0]];
            c.iter().all(|&i| coarse[i] == target)
        })
    }
}
