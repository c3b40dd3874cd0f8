//! Command-line interface: argument parsing, command dispatch, report
//! shapes, and manifest emission.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sonoreid::clustering::{
    cluster_per_patient, ApParams, ClusterAlgo, ClusterConfig, Mode, Order, Preference,
};
use sonoreid::error::{Error, Result};
use sonoreid::gallery::{Gallery, Partition};
use sonoreid::io::{self, ClustersFile, MachineInfo, RunManifest, TimingInfo};
use sonoreid::losses;
use sonoreid::metrics::{
    self, auc_confidence_interval, delong_test, operating_point, pairwise_cluster_metrics,
    roc_curve, timing_benchmark, ScoredPair,
};
use sonoreid::similarity::Metric;
use sonoreid::synth::{generate_gallery, separability_report, CountDist, SynthConfig};

#[derive(Parser)]
#[command(name = "sonoreid", version, about = "Nodule tracklet re-identification engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic gallery with ground truth
    Synth(SynthArgs),
    /// Cluster a gallery per patient
    Cluster(ClusterArgs),
    /// Evaluate a clusters file against gallery ground truth
    EvalCluster(EvalClusterArgs),
    /// ROC/AUC/CI report over scored pairs, optionally with a DeLong comparison
    EvalPairs(EvalPairsArgs),
    /// Benchmark clustering algorithms: accuracy plus median wall-clock
    Bench(BenchArgs),
    /// Evaluate a loss objective on a batch file
    Loss(LossArgs),
    /// Re-run a command from its manifest
    Rerun(RerunArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    Cosine,
    Euclidean,
}

impl From<MetricArg> for Metric {
    fn from(value: MetricArg) -> Self {
        match value {
            MetricArg::Cosine => Metric::CosineDistance,
            MetricArg::Euclidean => Metric::Euclidean,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Literal,
    Fixpoint,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OrderArg {
    SeededRandom,
    InputOrder,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgoArg {
    Threshold,
    Dbscan,
    Meanshift,
    Affinity,
}

#[derive(Args)]
struct SynthArgs {
    /// Output gallery path (JSONL)
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    patients: usize,
    #[arg(long, default_value_t = 512)]
    dim: usize,
    #[arg(long, env = "SONOREID_SEED", default_value_t = 0)]
    seed: u64,
    /// Gaussian sigma applied to nodule centers before renormalization
    #[arg(long, default_value_t = 0.05)]
    intra_noise: f64,
    /// Minimum angle between nodule centers of one patient, radians
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
    min_center_angle: f64,
    /// Comma-separated weights for 1, 2, ... nodules per patient
    #[arg(long, default_value = "0.90,0.09,0.01")]
    nodule_weights: String,
    /// Comma-separated weights for 1, 2, ... tracklets per nodule
    #[arg(long, default_value = "0.10,0.15,0.20,0.20,0.15,0.10,0.10")]
    tracklet_weights: String,
    #[arg(long, default_value_t = 4.0)]
    length_mu: f64,
    #[arg(long, default_value_t = 1.2)]
    length_sigma: f64,
}

#[derive(Args, Clone)]
struct AlgoParams {
    /// Distance threshold for the threshold algorithm
    #[arg(long, default_value_t = 0.3)]
    tau: f64,
    #[arg(long, value_enum, default_value_t = MetricArg::Cosine)]
    metric: MetricArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Fixpoint)]
    mode: ModeArg,
    #[arg(long, env = "SONOREID_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = OrderArg::InputOrder)]
    order: OrderArg,
    /// DBSCAN radius; defaults to tau
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 1)]
    min_pts: usize,
    /// Mean-shift bandwidth (euclidean); defaults to tau
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Affinity-propagation damping, in [0.5, 1)
    #[arg(long, default_value_t = 0.9)]
    damping: f64,
    /// Affinity-propagation preference: a number or "median"
    #[arg(long, default_value = "median")]
    preference: String,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
}

impl AlgoParams {
    fn build(&self, algo: AlgoArg) -> Result<ClusterAlgo<f64>> {
        Ok(match algo {
            AlgoArg::Threshold => ClusterAlgo::Threshold(ClusterConfig {
                tau: self.tau,
                metric: self.metric.into(),
                mode: match self.mode {
                    ModeArg::Literal => Mode::Literal,
                    ModeArg::Fixpoint => Mode::Fixpoint,
                },
                seed: self.seed,
                order: match self.order {
                    OrderArg::SeededRandom => Order::SeededRandom,
                    OrderArg::InputOrder => Order::InputOrder,
                },
            }),
            AlgoArg::Dbscan => ClusterAlgo::Dbscan {
                eps: self.eps.unwrap_or(self.tau),
                min_pts: self.min_pts,
                metric: self.metric.into(),
            },
            AlgoArg::Meanshift => ClusterAlgo::MeanShift {
                bandwidth: self.bandwidth.unwrap_or(self.tau),
            },
            AlgoArg::Affinity => {
                let preference = if self.preference == "median" {
                    Preference::Median
                } else {
                    let v: f64 = self.preference.parse().map_err(|_| {
                        Error::InvalidConfig(format!(
                            "preference must be a number or \"median\", got `{}`",
                            self.preference
                        ))
                    })?;
                    Preference::Value(v)
                };
                ClusterAlgo::Affinity(ApParams {
                    damping: self.damping,
                    max_iter: self.max_iter,
                    preference,
                    metric: self.metric.into(),
                    convergence_iter: 15,
                })
            }
        })
    }
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    gallery: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = AlgoArg::Threshold)]
    algo: AlgoArg,
    #[command(flatten)]
    params: AlgoParams,
}

#[derive(Args)]
struct EvalClusterArgs {
    #[arg(long)]
    clusters: PathBuf,
    #[arg(long)]
    gallery: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalPairsArgs {
    #[arg(long)]
    scores: PathBuf,
    /// Second scores file over the identical pair set, for the DeLong test
    #[arg(long)]
    compare: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    gallery: PathBuf,
    /// Comma-separated subset of threshold,dbscan,meanshift,affinity
    #[arg(long, default_value = "threshold,dbscan,meanshift,affinity")]
    algos: String,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    params: AlgoParams,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ObjectiveArg {
    Trihard,
    Classification,
    CombinedClass,
    Contrastive,
    VerificationCe,
    CombinedVerif,
}

#[derive(Args)]
struct LossArgs {
    #[arg(long)]
    batch: PathBuf,
    #[arg(long, value_enum)]
    objective: ObjectiveArg,
    #[arg(long, default_value_t = 0.3)]
    margin_triplet: f64,
    #[arg(long, default_value_t = 1.0)]
    margin_contrastive: f64,
    #[arg(long, value_enum, default_value_t = MetricArg::Euclidean)]
    metric: MetricArg,
    /// Report the triplet loss as a mean over anchors instead of the sum
    #[arg(long)]
    normalize: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RerunArgs {
    manifest: PathBuf,
}

/// Entry point shared by `main` and `rerun`.
pub fn run(args: &[String]) -> Result<()> {
    let mut argv = vec!["sonoreid".to_string()];
    argv.extend(args.iter().cloned());
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0);
    let clock = Instant::now();
    let ctx = RunContext {
        args: args.to_vec(),
        started,
        clock,
    };
    match cli.command {
        Command::Synth(a) => cmd_synth(a, &ctx),
        Command::Cluster(a) => cmd_cluster(a, &ctx),
        Command::EvalCluster(a) => cmd_eval_cluster(a, &ctx),
        Command::EvalPairs(a) => cmd_eval_pairs(a, &ctx),
        Command::Bench(a) => cmd_bench(a, &ctx),
        Command::Loss(a) => cmd_loss(a, &ctx),
        Command::Rerun(a) => {
            let manifest = io::read_manifest(&a.manifest)?;
            run(&manifest.args)
        }
    }
}

struct RunContext {
    args: Vec<String>,
    started: u64,
    clock: Instant,
}

impl RunContext {
    fn manifest(
        &self,
        command: &str,
        inputs: &[&Path],
        outputs: &[&Path],
        seed: Option<u64>,
    ) -> RunManifest {
        RunManifest {
            tool: "sonoreid".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            args: self.args.clone(),
            inputs: inputs.iter().map(|p| p.to_path_buf()).collect(),
            outputs: outputs.iter().map(|p| p.to_path_buf()).collect(),
            seed,
            machine: MachineInfo::current(),
            timing: TimingInfo {
                started_unix_ms: self.started,
                elapsed_ms: self.clock.elapsed().as_millis() as u64,
            },
        }
    }
}

fn parse_weights(spec: &str, what: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(|w| {
            w.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("bad {what} weight `{w}`")))
        })
        .collect()
}

fn emit_report<T: Serialize>(report: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report).expect("serialize report");
    text.push('\n');
    println!("{}", text.trim_end());
    if let Some(path) = out {
        io::atomic_write(path, text.as_bytes())?;
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs, ctx: &RunContext) -> Result<()> {
    if args.patients == 0 {
        return Err(Error::InvalidConfig("--patients must be >= 1".into()));
    }
    let config = SynthConfig {
        n_patients: args.patients,
        nodules_per_patient: CountDist::new(1, parse_weights(&args.nodule_weights, "nodule")?)?,
        tracklets_per_nodule: CountDist::new(1, parse_weights(&args.tracklet_weights, "tracklet")?)?,
        dim: args.dim,
        intra_noise: args.intra_noise,
        min_center_angle: args.min_center_angle,
        length_mu: args.length_mu,
        length_sigma: args.length_sigma,
        seed: args.seed,
    };
    let gallery: Gallery<f64> = generate_gallery(&config)?;
    io::write_gallery(&args.out, &gallery)?;
    io::write_manifest(
        &args.out,
        &ctx.manifest("synth", &[], &[&args.out], Some(args.seed)),
    )?;

    #[derive(Serialize)]
    struct Summary {
        records: usize,
        patients: usize,
        dim: usize,
        separability: Option<SeparabilitySummary>,
    }
    #[derive(Serialize)]
    struct SeparabilitySummary {
        mean_within_cosine_distance: f64,
        mean_between_cosine_distance: f64,
        max_within: f64,
        min_between: f64,
    }
    let separability = separability_report(&gallery)?.map(|r| SeparabilitySummary {
        mean_within_cosine_distance: r.mean_within,
        mean_between_cosine_distance: r.mean_between,
        max_within: r.max_within,
        min_between: r.min_between,
    });
    emit_report(
        &Summary {
            records: gallery.len(),
            patients: gallery.patients().len(),
            dim: gallery.dim(),
            separability,
        },
        None,
    )
}

fn cmd_cluster(args: ClusterArgs, ctx: &RunContext) -> Result<()> {
    let gallery = io::read_gallery(&args.gallery)?;
    let algo = args.params.build(args.algo)?;
    // surface the AP convergence warning without failing the run
    if let ClusterAlgo::Affinity(ref params) = algo {
        for (patient_id, idx) in gallery.patients() {
            let features: Vec<_> = idx
                .iter()
                .map(|&i| gallery.records()[i].embedding.clone())
                .collect();
            let outcome =
                sonoreid::clustering::cluster_affinity_propagation(&features, params)?;
            if !outcome.converged {
                eprintln!(
                    "warning: affinity propagation did not converge for patient {patient_id}"
                );
            }
        }
    }
    let per_patient = cluster_per_patient(&gallery, &algo)?;
    let mut clusters = ClustersFile::new();
    for pc in &per_patient {
        let groups: Vec<Vec<String>> = pc
            .partition
            .clusters()
            .iter()
            .map(|cluster| {
                cluster
                    .iter()
                    .map(|&local| {
                        gallery.records()[pc.member_indices[local]]
                            .tracklet_id
                            .clone()
                    })
                    .collect()
            })
            .collect();
        clusters.insert(pc.patient_id.clone(), groups);
    }
    io::write_clusters(&args.out, &clusters)?;
    io::write_manifest(
        &args.out,
        &ctx.manifest(
            "cluster",
            &[&args.gallery],
            &[&args.out],
            Some(args.params.seed),
        ),
    )
}

fn partitions_with_labels(
    gallery: &Gallery<f64>,
    clusters: &ClustersFile,
) -> Result<Vec<(Partition, Vec<String>)>> {
    let patients = gallery.patients();
    if patients.len() != clusters.len() {
        return Err(Error::RecordMismatch(format!(
            "gallery has {} patients, clusters file has {}",
            patients.len(),
            clusters.len()
        )));
    }
    let mut out = Vec::with_capacity(patients.len());
    for (patient_id, member_indices) in patients {
        let groups = clusters.get(&patient_id).ok_or_else(|| {
            Error::RecordMismatch(format!("patient `{patient_id}` missing from clusters file"))
        })?;
        let local: std::collections::HashMap<&str, usize> = member_indices
            .iter()
            .enumerate()
            .map(|(local, &i)| (gallery.records()[i].tracklet_id.as_str(), local))
            .collect();
        let index_groups: Vec<Vec<usize>> = groups
            .iter()
            .map(|g| {
                g.iter()
                    .map(|id| {
                        local.get(id.as_str()).copied().ok_or_else(|| {
                            Error::RecordMismatch(format!(
                                "tracklet `{id}` not in patient `{patient_id}`"
                            ))
                        })
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let partition = Partition::new(index_groups, member_indices.len())
            .map_err(|e| Error::RecordMismatch(format!("patient `{patient_id}`: {e}")))?;
        let labels = member_indices
            .iter()
            .map(|&i| {
                gallery.records()[i]
                    .nodule_id
                    .clone()
                    .ok_or_else(|| Error::MissingNoduleId(gallery.records()[i].tracklet_id.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push((partition, labels));
    }
    Ok(out)
}

#[derive(Serialize)]
struct ClusterReport {
    precision: f64,
    recall: f64,
    f_score: f64,
    tp: u64,
    fp: u64,
    tn: u64,
    fn_: u64,
}

fn cmd_eval_cluster(args: EvalClusterArgs, ctx: &RunContext) -> Result<()> {
    let gallery = io::read_gallery(&args.gallery)?;
    let clusters = io::read_clusters(&args.clusters)?;
    let inputs = partitions_with_labels(&gallery, &clusters)?;
    let m: metrics::ClusterMetrics<f64> = pairwise_cluster_metrics(&inputs)?;
    let report = ClusterReport {
        precision: m.precision,
        recall: m.recall,
        f_score: m.f_score,
        tp: m.confusion.tp,
        fp: m.confusion.fp,
        tn: m.confusion.tn,
        fn_: m.confusion.fn_,
    };
    emit_report(&report, args.out.as_deref())?;
    if let Some(out) = &args.out {
        io::write_manifest(
            out,
            &ctx.manifest(
                "eval-cluster",
                &[&args.clusters, &args.gallery],
                &[out],
                None,
            ),
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EstimateReport {
    value: f64,
    lower: f64,
    upper: f64,
}

impl From<metrics::Estimate<f64>> for EstimateReport {
    fn from(e: metrics::Estimate<f64>) -> Self {
        Self {
            value: e.value,
            lower: e.lower,
            upper: e.upper,
        }
    }
}

#[derive(Serialize)]
struct PairsReport {
    auc: f64,
    auc_ci95: (f64, f64),
    threshold: f64,
    accuracy: EstimateReport,
    sensitivity: EstimateReport,
    specificity: EstimateReport,
    ci_method: &'static str,
    roc_points: Vec<(f64, f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delong: Option<DelongReport>,
}

#[derive(Serialize)]
struct DelongReport {
    auc_a: f64,
    auc_b: f64,
    z: f64,
    p_value: f64,
}

fn cmd_eval_pairs(args: EvalPairsArgs, ctx: &RunContext) -> Result<()> {
    let pairs = io::read_scores(&args.scores)?;
    let roc = roc_curve(&pairs)?;
    let (auc, lo, hi) = auc_confidence_interval(&pairs, 0.95)?;
    let op = operating_point(&pairs, args.threshold, 0.95)?;
    let delong = match &args.compare {
        Some(path) => {
            let other = io::read_scores(path)?;
            align_pairs(&pairs, &other)?;
            let r = delong_test(&pairs, &other)?;
            Some(DelongReport {
                auc_a: r.auc_a,
                auc_b: r.auc_b,
                z: r.z,
                p_value: r.p_value,
            })
        }
        None => None,
    };
    let report = PairsReport {
        auc,
        auc_ci95: (lo, hi),
        threshold: args.threshold,
        accuracy: op.accuracy.into(),
        sensitivity: op.sensitivity.into(),
        specificity: op.specificity.into(),
        ci_method: "wilson (acc/se/sp), delong normal approximation (auc)",
        roc_points: roc
            .points
            .iter()
            .map(|p| (p.fpr, p.tpr, p.threshold))
            .collect(),
        delong,
    };
    emit_report(&report, args.out.as_deref())?;
    if let Some(out) = &args.out {
        let mut inputs: Vec<&Path> = vec![&args.scores];
        if let Some(c) = &args.compare {
            inputs.push(c);
        }
        io::write_manifest(out, &ctx.manifest("eval-pairs", &inputs, &[out], None))?;
    }
    Ok(())
}

fn align_pairs(a: &[ScoredPair<f64>], b: &[ScoredPair<f64>]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::MisalignedPairs(format!(
            "{} pairs vs {}",
            a.len(),
            b.len()
        )));
    }
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        if x.pair_id != y.pair_id {
            return Err(Error::MisalignedPairs(format!(
                "pair id mismatch at line {}: `{}` vs `{}`",
                i + 1,
                x.pair_id,
                y.pair_id
            )));
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct BenchReport {
    rows: Vec<BenchRowReport>,
    /// DBSCAN noise points are scored as singleton clusters.
    noise_convention: &'static str,
    machine: MachineInfo,
}

#[derive(Serialize)]
struct BenchRowReport {
    algorithm: String,
    precision: f64,
    recall: f64,
    f_score: f64,
    median_seconds: f64,
}

fn cmd_bench(args: BenchArgs, ctx: &RunContext) -> Result<()> {
    let gallery = io::read_gallery(&args.gallery)?;
    let mut algos = Vec::new();
    for name in args.algos.split(',') {
        let algo = match name.trim() {
            "threshold" => AlgoArg::Threshold,
            "dbscan" => AlgoArg::Dbscan,
            "meanshift" => AlgoArg::Meanshift,
            "affinity" => AlgoArg::Affinity,
            other => {
                return Err(Error::InvalidConfig(format!("unknown algorithm `{other}`")))
            }
        };
        algos.push(args.params.build(algo)?);
    }
    let rows = timing_benchmark(&gallery, &algos, args.reps)?;
    let report = BenchReport {
        rows: rows
            .into_iter()
            .map(|r| BenchRowReport {
                algorithm: r.algorithm,
                precision: r.precision,
                recall: r.recall,
                f_score: r.f_score,
                median_seconds: r.median_seconds,
            })
            .collect(),
        noise_convention: "dbscan noise points counted as singleton clusters",
        machine: MachineInfo::current(),
    };
    emit_report(&report, args.out.as_deref())?;
    if let Some(out) = &args.out {
        io::write_manifest(
            out,
            &ctx.manifest("bench", &[&args.gallery], &[out], Some(args.params.seed)),
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct LossReport {
    objective: String,
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    components: Option<std::collections::BTreeMap<String, f64>>,
}

fn cmd_loss(args: LossArgs, ctx: &RunContext) -> Result<()> {
    let metric: Metric = args.metric.into();
    let (value, components) = match args.objective {
        ObjectiveArg::Trihard => {
            let (batch, _) = io::read_pk_batch(&args.batch)?;
            let v = if args.normalize {
                losses::trihard_loss_mean(&batch, args.margin_triplet, metric)?
            } else {
                losses::trihard_loss(&batch, args.margin_triplet, metric)?
            };
            (v, None)
        }
        ObjectiveArg::Classification => {
            let (batch, logits) = io::read_pk_batch(&args.batch)?;
            let (logits, labels) = classification_inputs(&batch, &logits)?;
            (losses::classification_loss(&logits, &labels)?, None)
        }
        ObjectiveArg::CombinedClass => {
            let (batch, logits) = io::read_pk_batch(&args.batch)?;
            let (logits, labels) = classification_inputs(&batch, &logits)?;
            let class = losses::classification_loss(&logits, &labels)?;
            let trip = losses::trihard_loss(&batch, args.margin_triplet, metric)?;
            let mut comps = std::collections::BTreeMap::new();
            comps.insert("classification".into(), class);
            comps.insert("trihard".into(), trip);
            (class + trip, Some(comps))
        }
        ObjectiveArg::Contrastive => {
            let batch = io::read_pair_batch(&args.batch)?;
            (losses::contrastive_loss(&batch, args.margin_contrastive)?, None)
        }
        ObjectiveArg::VerificationCe => {
            let batch = io::read_pair_batch(&args.batch)?;
            (losses::verification_cross_entropy(&batch)?, None)
        }
        ObjectiveArg::CombinedVerif => {
            let batch = io::read_pair_batch(&args.batch)?;
            let ce = losses::verification_cross_entropy(&batch)?;
            let con = losses::contrastive_loss(&batch, args.margin_contrastive)?;
            let mut comps = std::collections::BTreeMap::new();
            comps.insert("verification_ce".into(), ce);
            comps.insert("contrastive".into(), con);
            (ce + con, Some(comps))
        }
    };
    let name = match args.objective {
        ObjectiveArg::Trihard => "trihard",
        ObjectiveArg::Classification => "classification",
        ObjectiveArg::CombinedClass => "combined-class",
        ObjectiveArg::Contrastive => "contrastive",
        ObjectiveArg::VerificationCe => "verification-ce",
        ObjectiveArg::CombinedVerif => "combined-verif",
    };
    let report = LossReport {
        objective: name.into(),
        value,
        components,
    };
    emit_report(&report, args.out.as_deref())?;
    if let Some(out) = &args.out {
        io::write_manifest(out, &ctx.manifest("loss", &[&args.batch], &[out], None))?;
    }
    Ok(())
}

/// One-hot labels sized to the logit width; every row must carry logits of
/// equal width and a label inside it.
fn classification_inputs(
    batch: &losses::PkBatch<f64>,
    logits: &[Option<Vec<f64>>],
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let rows: Vec<Vec<f64>> = logits
        .iter()
        .enumerate()
        .map(|(i, l)| {
            l.clone()
                .ok_or_else(|| Error::InvalidConfig(format!("row {i} has no logits")))
        })
        .collect::<Result<_>>()?;
    let width = rows
        .first()
        .map(Vec::len)
        .ok_or(Error::EmptyInput)?;
    let labels: Vec<Vec<f64>> = batch
        .labels()
        .iter()
        .enumerate()
        .map(|(i, &label)| {
            if label >= width {
                return Err(Error::InvalidConfig(format!(
                    "row {i}: label {label} outside logit width {width}"
                )));
            }
            Ok((0..width).map(|c| f64::from(u8::from(c == label))).collect())
        })
        .collect::<Result<_>>()?;
    Ok((rows, labels))
}
