//! Synthetic gallery generator: patients with nodules, nodules with
//! tracklets, embeddings on the unit hypersphere with controllable
//! intra-nodule dispersion.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::gallery::{FeatureVector, Gallery, TrackletRecord};
use crate::metrics::ScoredPair;
use crate::scalar::Real;

const MAX_CENTER_ATTEMPTS: usize = 10_000;

/// Discrete count distribution: value `min + i` drawn with weight
/// `weights[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountDist {
    pub min: usize,
    pub weights: Vec<f64>,
}

impl CountDist {
    pub fn new(min: usize, weights: Vec<f64>) -> Result<Self> {
        if min < 1 || weights.is_empty() {
            return Err(Error::InvalidConfig(
                "count distribution needs min >= 1 and at least one weight".into(),
            ));
        }
        if weights.iter().any(|&w| !(w.is_finite() && w >= 0.0))
            || weights.iter().sum::<f64>() <= 0.0
        {
            return Err(Error::InvalidConfig(
                "count weights must be non-negative with a positive sum".into(),
            ));
        }
        Ok(Self { min, weights })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let total: f64 = self.weights.iter().sum();
        let mut u = rng.gen_range(0.0..total);
        for (i, &w) in self.weights.iter().enumerate() {
            if u < w {
                return self.min + i;
            }
            u -= w;
        }
        self.min + self.weights.len() - 1
    }
}

/// Generator configuration. Defaults mirror the source dataset's scale
/// ratios: about 1.1 nodules per patient and 3.9 tracklets per nodule,
/// with heavy-tailed tracklet lengths truncated to [1, 2122].
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_patients: usize,
    pub nodules_per_patient: CountDist,
    pub tracklets_per_nodule: CountDist,
    pub dim: usize,
    /// Gaussian sigma added to the nodule center before renormalization.
    pub intra_noise: f64,
    /// Minimum angular separation between nodule centers within a patient,
    /// radians, in (0, pi].
    pub min_center_angle: f64,
    /// Log-normal (mu, sigma) for tracklet frame lengths.
    pub length_mu: f64,
    pub length_sigma: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_patients: 100,
            // 90% one nodule, 9% two, 1% three
            nodules_per_patient: CountDist {
                min: 1,
                weights: vec![0.90, 0.09, 0.01],
            },
            // mean 3.85 tracklets per nodule
            tracklets_per_nodule: CountDist {
                min: 1,
                weights: vec![0.10, 0.15, 0.20, 0.20, 0.15, 0.10, 0.10],
            },
            dim: 512,
            intra_noise: 0.05,
            min_center_angle: std::f64::consts::FRAC_PI_4,
            length_mu: 4.0,
            length_sigma: 1.2,
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.n_patients < 1 {
            return Err(Error::InvalidConfig("n_patients must be >= 1".into()));
        }
        if self.dim < 2 {
            return Err(Error::InvalidConfig("dim must be >= 2".into()));
        }
        if !(self.intra_noise.is_finite() && self.intra_noise >= 0.0) {
            return Err(Error::InvalidConfig(
                "intra_noise must be finite and >= 0".into(),
            ));
        }
        if !(self.min_center_angle > 0.0 && self.min_center_angle <= std::f64::consts::PI) {
            return Err(Error::InvalidConfig(
                "min_center_angle must lie in (0, pi]".into(),
            ));
        }
        if !(self.length_sigma > 0.0 && self.length_mu.is_finite()) {
            return Err(Error::InvalidConfig("invalid length model".into()));
        }
        CountDist::new(
            self.nodules_per_patient.min,
            self.nodules_per_patient.weights.clone(),
        )?;
        CountDist::new(
            self.tracklets_per_nodule.min,
            self.tracklets_per_nodule.weights.clone(),
        )?;
        Ok(())
    }
}

fn gaussian_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut v {
        *x /= norm;
    }
    v
}

fn angle(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    dot.clamp(-1.0, 1.0).acos()
}

fn sample_length(rng: &mut ChaCha8Rng, mu: f64, sigma: f64) -> u32 {
    // truncated log-normal over [1, 2122], resampled until inside
    loop {
        let z: f64 = StandardNormal.sample(rng);
        let l = (mu + sigma * z).exp();
        if (1.0..=2122.0).contains(&l) {
            return l.round().clamp(1.0, 2122.0) as u32;
        }
    }
}

/// Generates a gallery with ground truth. Per patient, nodule centers are
/// drawn on the unit sphere by rejection until all pairwise angles reach
/// `min_center_angle`; each tracklet embedding is
/// `normalize(center + intra_noise * gaussian / sqrt(dim))`, so
/// `intra_noise` is the expected norm of the perturbation regardless of
/// dimension. Deterministic given the seed.
pub fn generate_gallery<F: Real>(config: &SynthConfig) -> Result<Gallery<F>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut records = Vec::new();
    for p in 0..config.n_patients {
        let patient_id = format!("p{p:04}");
        let n_nodules = config.nodules_per_patient.sample(&mut rng);
        let mut centers: Vec<Vec<f64>> = Vec::with_capacity(n_nodules);
        let mut attempts = 0usize;
        while centers.len() < n_nodules {
            let candidate = normalize(gaussian_vec(&mut rng, config.dim));
            if centers
                .iter()
                .all(|c| angle(c, &candidate) >= config.min_center_angle)
            {
                centers.push(candidate);
            } else {
                attempts += 1;
                if attempts > MAX_CENTER_ATTEMPTS {
                    return Err(Error::CenterSampling {
                        nodules: n_nodules,
                        min_angle: config.min_center_angle,
                        dim: config.dim,
                    });
                }
            }
        }
        for (n, center) in centers.iter().enumerate() {
            let nodule_id = format!("{patient_id}_n{n}");
            let n_tracklets = config.tracklets_per_nodule.sample(&mut rng);
            for t in 0..n_tracklets {
                let embedding = if config.intra_noise == 0.0 {
                    center.clone()
                } else {
                    let noise = gaussian_vec(&mut rng, config.dim);
                    let scale = config.intra_noise / (config.dim as f64).sqrt();
                    normalize(
                        center
                            .iter()
                            .zip(&noise)
                            .map(|(c, z)| c + scale * z)
                            .collect(),
                    )
                };
                records.push(TrackletRecord {
                    tracklet_id: format!("{nodule_id}_t{t}"),
                    patient_id: patient_id.clone(),
                    nodule_id: Some(nodule_id.clone()),
                    length_frames: sample_length(&mut rng, config.length_mu, config.length_sigma),
                    embedding: FeatureVector::new(
                        embedding.into_iter().map(F::from_f64_lossy).collect(),
                    )?,
                });
            }
        }
    }
    Gallery::build(records)
}

/// Within-nodule versus between-nodule cosine-distance summary of a
/// generated gallery, for the separability check.
#[derive(Debug, Clone, Copy)]
pub struct SeparabilityReport {
    pub mean_within: f64,
    pub mean_between: f64,
    pub max_within: f64,
    pub min_between: f64,
}

pub fn separability_report<F: Real>(gallery: &Gallery<F>) -> Result<Option<SeparabilityReport>> {
    let pairs = crate::gallery::patient_pairs(gallery)?;
    let mut within = Vec::new();
    let mut between = Vec::new();
    for (i, j, same) in pairs {
        let d = crate::similarity::distance(
            crate::similarity::Metric::CosineDistance,
            &gallery.records()[i].embedding,
            &gallery.records()[j].embedding,
        )?
        .to_f64_lossy();
        if same {
            within.push(d);
        } else {
            between.push(d);
        }
    }
    if within.is_empty() || between.is_empty() {
        return Ok(None);
    }
    Ok(Some(SeparabilityReport {
        mean_within: within.iter().sum::<f64>() / within.len() as f64,
        mean_between: between.iter().sum::<f64>() / between.len() as f64,
        max_within: within.iter().cloned().fold(f64::MIN, f64::max),
        min_between: between.iter().cloned().fold(f64::MAX, f64::min),
    }))
}

/// Adds seeded Gaussian noise to scores; labels and ids are unchanged.
/// Constructs a strictly-worse model for comparison testing.
pub fn perturb_scores<F: Real>(
    pairs: &[ScoredPair<F>],
    noise_sigma: f64,
    seed: u64,
) -> Vec<ScoredPair<F>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pairs
        .iter()
        .map(|p| {
            let z: f64 = StandardNormal.sample(&mut rng);
            ScoredPair {
                score: p.score + F::from_f64_lossy(noise_sigma * z),
                ..p.clone()
            }
        })
        .collect()
}
