//! File formats and run manifests.
//!
//! Galleries and scored pairs are line-oriented JSON (one object per line);
//! clusters are a JSON map `patient_id -> list of lists of tracklet_ids`.
//! Parsing is strict: unknown fields and malformed lines fail with the line
//! number. All writes are atomic (temp file + rename) and numbers serialize
//! with round-trip-exact decimal formatting.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gallery::{FeatureVector, Gallery, TrackletRecord};
use crate::losses::{LabeledPairBatch, PairSample, PkBatch};
use crate::metrics::ScoredPair;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GalleryRecordWire {
    tracklet_id: String,
    patient_id: String,
    nodule_id: Option<String>,
    length_frames: u32,
    embedding: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoreRecordWire {
    pair_id: String,
    id_a: String,
    id_b: String,
    score: f64,
    label: u8,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PkRowWire {
    label: usize,
    embedding: Vec<f64>,
    #[serde(default)]
    logits: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairRowWire {
    embedding_a: Vec<f64>,
    embedding_b: Vec<f64>,
    label: u8,
    #[serde(default)]
    logits: Option<[f64; 2]>,
}

/// Clusters file: patient id to list of clusters of tracklet ids.
pub type ClustersFile = BTreeMap<String, Vec<Vec<String>>>;

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_line_err(path: &Path, line: usize, message: impl ToString) -> Error {
    Error::ParseLine {
        path: path.to_path_buf(),
        line,
        message: message.to_string(),
    }
}

fn read_jsonl<T, R>(path: &Path, mut convert: impl FnMut(usize, T) -> Result<R>) -> Result<Vec<R>>
where
    T: for<'de> Deserialize<'de>,
{
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let wire: T =
            serde_json::from_str(&line).map_err(|e| parse_line_err(path, lineno, e))?;
        out.push(convert(lineno, wire)?);
    }
    Ok(out)
}

/// Writes `content` to `path` atomically via a sibling temp file.
pub fn atomic_write(path: &Path, content: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = path.with_extension(format!(
        "{}.tmp-{}",
        path.extension()
            .map(|e| e.to_string_lossy().into_owned())
            .unwrap_or_default(),
        std::process::id()
    ));
    if let Some(dir) = dir {
        fs::create_dir_all(dir).map_err(|e| io_err(path, e))?;
    }
    let mut file = fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
    file.write_all(content).map_err(|e| io_err(&tmp, e))?;
    file.sync_all().map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

pub fn read_gallery(path: &Path) -> Result<Gallery<f64>> {
    let records = read_jsonl(path, |lineno, wire: GalleryRecordWire| {
        if wire.embedding.iter().any(|v| !v.is_finite()) {
            return Err(parse_line_err(path, lineno, "non-finite embedding entry"));
        }
        Ok(TrackletRecord {
            embedding: FeatureVector::new(wire.embedding)
                .map_err(|e| parse_line_err(path, lineno, e))?,
            tracklet_id: wire.tracklet_id,
            patient_id: wire.patient_id,
            nodule_id: wire.nodule_id,
            length_frames: wire.length_frames,
        })
    })?;
    Gallery::build(records)
}

pub fn write_gallery(path: &Path, gallery: &Gallery<f64>) -> Result<()> {
    let mut buf = Vec::new();
    for rec in gallery.records() {
        let wire = GalleryRecordWire {
            tracklet_id: rec.tracklet_id.clone(),
            patient_id: rec.patient_id.clone(),
            nodule_id: rec.nodule_id.clone(),
            length_frames: rec.length_frames,
            embedding: rec.embedding.as_slice().to_vec(),
        };
        serde_json::to_writer(&mut buf, &wire).expect("serialize record");
        buf.push(b'\n');
    }
    atomic_write(path, &buf)
}

pub fn read_scores(path: &Path) -> Result<Vec<ScoredPair<f64>>> {
    read_jsonl(path, |lineno, wire: ScoreRecordWire| {
        if !wire.score.is_finite() {
            return Err(parse_line_err(path, lineno, "non-finite score"));
        }
        if wire.label > 1 {
            return Err(parse_line_err(path, lineno, "label must be 0 or 1"));
        }
        Ok(ScoredPair {
            pair_id: wire.pair_id,
            id_a: wire.id_a,
            id_b: wire.id_b,
            score: wire.score,
            label: wire.label == 1,
        })
    })
}

pub fn write_scores(path: &Path, pairs: &[ScoredPair<f64>]) -> Result<()> {
    let mut buf = Vec::new();
    for pair in pairs {
        let wire = ScoreRecordWire {
            pair_id: pair.pair_id.clone(),
            id_a: pair.id_a.clone(),
            id_b: pair.id_b.clone(),
            score: pair.score,
            label: u8::from(pair.label),
        };
        serde_json::to_writer(&mut buf, &wire).expect("serialize score");
        buf.push(b'\n');
    }
    atomic_write(path, &buf)
}

pub fn read_clusters(path: &Path) -> Result<ClustersFile> {
    let content = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&content).map_err(|e| Error::FileFormat {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_clusters(path: &Path, clusters: &ClustersFile) -> Result<()> {
    let mut buf = serde_json::to_vec_pretty(clusters).expect("serialize clusters");
    buf.push(b'\n');
    atomic_write(path, &buf)
}

/// PK batch file: rows of `{label, embedding, logits?}`. Returns the batch
/// plus per-row logits for the classification objectives.
pub fn read_pk_batch(path: &Path) -> Result<(PkBatch<f64>, Vec<Option<Vec<f64>>>)> {
    let rows = read_jsonl(path, |lineno, wire: PkRowWire| {
        if wire.embedding.iter().any(|v| !v.is_finite()) {
            return Err(parse_line_err(path, lineno, "non-finite embedding entry"));
        }
        let embedding =
            FeatureVector::new(wire.embedding).map_err(|e| parse_line_err(path, lineno, e))?;
        Ok((wire.label, embedding, wire.logits))
    })?;
    let mut embeddings = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    let mut logits = Vec::with_capacity(rows.len());
    for (label, embedding, row_logits) in rows {
        embeddings.push(embedding);
        labels.push(label);
        logits.push(row_logits);
    }
    Ok((PkBatch::new(embeddings, labels)?, logits))
}

/// Pair batch file: rows of `{embedding_a, embedding_b, label, logits?}`.
pub fn read_pair_batch(path: &Path) -> Result<LabeledPairBatch<f64>> {
    let pairs = read_jsonl(path, |lineno, wire: PairRowWire| {
        if wire.label > 1 {
            return Err(parse_line_err(path, lineno, "label must be 0 or 1"));
        }
        Ok(PairSample {
            a: FeatureVector::new(wire.embedding_a)
                .map_err(|e| parse_line_err(path, lineno, e))?,
            b: FeatureVector::new(wire.embedding_b)
                .map_err(|e| parse_line_err(path, lineno, e))?,
            same_nodule: wire.label == 1,
            logits: wire.logits,
        })
    })?;
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(LabeledPairBatch { pairs })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MachineInfo {
    pub os: String,
    pub arch: String,
}

impl MachineInfo {
    pub fn current() -> Self {
        Self {
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
        }
    }
}

/// Wall-clock metadata; excluded from reproducibility comparisons.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingInfo {
    pub started_unix_ms: u64,
    pub elapsed_ms: u64,
}

/// Every run emits a manifest next to its output; re-running the recorded
/// arguments reproduces the outputs bit-identically (timing excluded).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Full CLI arguments after the program name.
    pub args: Vec<String>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub machine: MachineInfo,
    pub timing: TimingInfo,
}

/// Manifest path convention: `<output>.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.push_str(".manifest.json");
    output.with_file_name(name)
}

pub fn write_manifest(output: &Path, manifest: &RunManifest) -> Result<()> {
    let mut buf = serde_json::to_vec_pretty(manifest).expect("serialize manifest");
    buf.push(b'\n');
    atomic_write(&manifest_path(output), &buf)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let content = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&content).map_err(|e| Error::FileFormat {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
