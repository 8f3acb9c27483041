//! The `mibag` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use mibag_core::{Aggregator, Dataset};

use crate::config::{parse_k_range, MeasureSpec, RunConfig};
use crate::error::{Error, Result};
use crate::export::{read_assignment, read_distmat, read_weights, write_assignment, write_distmat, write_json, write_weights};
use crate::parallel::with_pool;
use crate::pipeline::{
    aggregates, bag_ids, cluster_stage, compute_distances, compute_weights, evaluation_stage, run_localize,
    run_pipeline, run_sweep, write_pipeline, write_sweep, RunReport, ASSIGNMENT_FILE, AUC_FILE, DISTMAT_FILE,
    REPORT_FILE, WEIGHTS_FILE,
};
use crate::store::load_dataset;
use crate::synth::{write_synthetic, SynthParams};

#[derive(Debug, Parser)]
#[command(name = "mibag", version, about = "Multiple-instance clustering of image bags")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a dataset and print its shape and label histogram.
    Validate(RunArgs),
    /// Generate a planted-defect dataset with masks.
    Synth(SynthArgs),
    /// Compute instance weights into <out>/weights/weights.json.
    Weights(RunArgs),
    /// Compute the bag distance matrix into <out>/distmat.csv.
    Distmat(RunArgs),
    /// Cluster bags into <out>/assignment.csv.
    Cluster(RunArgs),
    /// Score an assignment against the labels into <out>/report.json.
    Evaluate(RunArgs),
    /// Weights, distances, clustering and evaluation in one run.
    Pipeline(RunArgs),
    /// Purity over a range of cluster counts.
    Sweep(RunArgs),
    /// Pixel-level localization AUC of the weights against masks.
    Localize(RunArgs),
}

/// Flags shared by the data commands. Each overrides the config file.
#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// TOML config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// wa or hausdorff:<variant>.
    #[arg(long)]
    pub measure: Option<String>,
    /// uniform, unsup, semi, topk, combined or mask.
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Top-k size for the topk and combined weight modes.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub subsample: Option<usize>,
    /// mean, max or min.
    #[arg(long)]
    pub aggregator: Option<String>,
    /// Scores behind topk and combined weights: unsup or semi.
    #[arg(long)]
    pub scores: Option<String>,
    /// Directory of <bag id>.pgm masks.
    #[arg(long)]
    pub masks: Option<PathBuf>,
    /// ward, single, complete, average, spectral, kmeans, gmm or kmedoids.
    #[arg(long)]
    pub clusterer: Option<String>,
    /// Number of clusters.
    #[arg(long = "K")]
    pub n_clusters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Labels left out of evaluation, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub exclude_labels: Option<Vec<String>>,
    /// Swept cluster counts: a-b or a comma list.
    #[arg(long)]
    pub k_range: Option<String>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub gmm_reg: Option<f64>,
    #[arg(long)]
    pub spectral_sigma: Option<f64>,
    /// arithmetic or geometric.
    #[arg(long)]
    pub nmi: Option<String>,
    /// macro or micro.
    #[arg(long)]
    pub f1: Option<String>,
    /// Precomputed weights (JSON) instead of computing them.
    #[arg(long)]
    pub weights_file: Option<PathBuf>,
    /// Precomputed distance matrix (CSV).
    #[arg(long)]
    pub distmat: Option<PathBuf>,
    /// Assignment (CSV) to evaluate.
    #[arg(long)]
    pub assignment: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 60)]
    pub n: usize,
    #[arg(long, default_value_t = 64)]
    pub m: usize,
    #[arg(long, default_value_t = 16)]
    pub d: usize,
    #[arg(long, default_value_t = 3)]
    pub k_true: usize,
    #[arg(long, default_value_t = 4)]
    pub defect_instances: usize,
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    #[arg(long, default_value_t = 10)]
    pub references: usize,
    #[arg(long, default_value_t = 16)]
    pub pool_size: usize,
    #[arg(long, default_value_t = 4)]
    pub mask_scale: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_value<T: serde::de::DeserializeOwned>(flag: &str, value: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(value.to_string()))
        .map_err(|_| Error::Config(format!("invalid value {value:?} for --{flag}")))
}

impl RunArgs {
    /// The config file (if any) with these flags applied on top.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    cfg.$field = v.clone().into();
                }
            )*};
        }
        set!(manifest, out, masks, k, subsample, n_clusters, spectral_sigma);
        set!(measure, clusterer, tau, seed, restarts, max_iter, tol, gmm_reg);
        if let Some(v) = &self.exclude_labels {
            cfg.exclude_labels = v.iter().filter(|s| !s.is_empty()).cloned().collect();
        }
        if let Some(v) = &self.weights {
            cfg.weights = v.parse()?;
        }
        if let Some(v) = &self.aggregator {
            cfg.aggregator = parse_value::<Aggregator>("aggregator", v)?;
        }
        if let Some(v) = &self.scores {
            cfg.scores = parse_value("scores", v)?;
        }
        if let Some(v) = &self.nmi {
            cfg.nmi = parse_value("nmi", v)?;
        }
        if let Some(v) = &self.f1 {
            cfg.f1 = parse_value("f1", v)?;
        }
        if let Some(v) = &self.k_range {
            cfg.k_range = Some(parse_k_range(v)?);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses arguments and runs the command. Usage errors exit inside clap.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::parse_from(args);
    with_pool(move || dispatch(cli.command))?
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Validate(a) => cmd_validate(&a.resolve()?),
        Command::Synth(a) => cmd_synth(&a),
        Command::Weights(a) => cmd_weights(&a.resolve()?),
        Command::Distmat(a) => cmd_distmat(&a, &a.resolve()?),
        Command::Cluster(a) => cmd_cluster(&a, &a.resolve()?),
        Command::Evaluate(a) => cmd_evaluate(&a, &a.resolve()?),
        Command::Pipeline(a) => cmd_pipeline(&a.resolve()?),
        Command::Sweep(a) => cmd_sweep(&a, &a.resolve()?),
        Command::Localize(a) => cmd_localize(&a.resolve()?),
    }
}

fn dataset(cfg: &RunConfig) -> Result<Dataset> {
    load_dataset(cfg.manifest_path()?)
}

fn cmd_validate(cfg: &RunConfig) -> Result<()> {
    let data = dataset(cfg)?;
    let sizes: Vec<usize> = data.bags().iter().map(|b| b.len()).collect();
    let min = sizes.iter().min().copied().unwrap_or(0);
    let max = sizes.iter().max().copied().unwrap_or(0);
    let mean = sizes.iter().sum::<usize>() as f64 / sizes.len() as f64;
    println!("N={} D={}", data.len(), data.dim());
    println!("M min={min} max={max} mean={mean:.2}");
    println!("reference bags={}", data.reference_bags().len());
    let mut histogram: BTreeMap<&str, usize> = BTreeMap::new();
    let mut unlabeled = 0;
    for label in data.labels() {
        match label {
            Some(l) => *histogram.entry(l).or_default() += 1,
            None => unlabeled += 1,
        }
    }
    for (label, count) in &histogram {
        println!("label {label}: {count}");
    }
    if unlabeled > 0 {
        println!("warning: {unlabeled} unlabeled bags; evaluation will be skipped");
    }
    Ok(())
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let params = SynthParams {
        n: a.n,
        m: a.m,
        d: a.d,
        k_true: a.k_true,
        defect_instances: a.defect_instances,
        noise: a.noise,
        references: a.references,
        pool_size: a.pool_size,
        mask_scale: a.mask_scale,
        seed: a.seed,
    };
    let manifest = write_synthetic(&params, &a.out)?;
    println!("{}", manifest.display());
    Ok(())
}

fn cmd_weights(cfg: &RunConfig) -> Result<()> {
    let data = dataset(cfg)?;
    let weights = compute_weights(&data, cfg)?;
    write_weights(&cfg.out_dir()?.join(WEIGHTS_FILE), &weights)
}

/// Weights from `--weights-file`, or computed from the config.
fn weights_for(a: &RunArgs, data: &Dataset, cfg: &RunConfig) -> Result<Vec<mibag_core::WeightVector>> {
    match &a.weights_file {
        Some(path) => read_weights(path, data),
        None => compute_weights(data, cfg),
    }
}

fn cmd_distmat(a: &RunArgs, cfg: &RunConfig) -> Result<()> {
    let data = dataset(cfg)?;
    let measure = cfg.measure()?;
    let weights = match measure {
        MeasureSpec::WeightedAverage => Some(weights_for(a, &data, cfg)?),
        MeasureSpec::Hausdorff(_) => None,
    };
    let d = compute_distances(&data, measure, weights.as_deref())?;
    write_distmat(&cfg.out_dir()?.join(DISTMAT_FILE), &bag_ids(&data), &d)
}

fn check_ids(path: &Path, found: &[String], data: &Dataset) -> Result<()> {
    if found.len() != data.len() || found.iter().zip(data.bags()).any(|(f, b)| f != b.id()) {
        return Err(Error::format(path, "bag ids do not match the manifest"));
    }
    Ok(())
}

fn cmd_cluster(a: &RunArgs, cfg: &RunConfig) -> Result<()> {
    let method = cfg.method()?;
    let k = cfg.cluster_count()?;
    let out = cfg.out_dir()?.join(ASSIGNMENT_FILE);
    let assignment = if method.uses_distances() {
        let path = a
            .distmat
            .as_deref()
            .ok_or_else(|| Error::Config(format!("clusterer {method} needs --distmat")))?;
        let (ids, d) = read_distmat(path)?;
        let assignment = cluster_stage(method, Some(&d), None, k, cfg)?;
        let ids: Vec<&str> = ids.iter().map(String::as_str).collect();
        write_assignment(&out, &ids, &assignment)?;
        assignment
    } else {
        let data = dataset(cfg)?;
        let weights = weights_for(a, &data, cfg)?;
        let vectors = aggregates(&data, &weights)?;
        let assignment = cluster_stage(method, None, Some(&vectors), k, cfg)?;
        write_assignment(&out, &bag_ids(&data), &assignment)?;
        assignment
    };
    for w in assignment.warnings() {
        eprintln!("warning: {w:?}");
    }
    Ok(())
}

fn cmd_evaluate(a: &RunArgs, cfg: &RunConfig) -> Result<()> {
    let data = dataset(cfg)?;
    let path = a
        .assignment
        .as_deref()
        .ok_or_else(|| Error::Config("evaluate needs --assignment".into()))?;
    let (ids, assignment) = read_assignment(path, cfg.n_clusters)?;
    check_ids(path, &ids, &data)?;
    let mut report = RunReport::new("evaluate", cfg, &data);
    report.evaluation = evaluation_stage(&data, &assignment, cfg)?;
    if report.evaluation.is_none() {
        eprintln!("warning: unlabeled dataset, nothing to evaluate");
    }
    print_evaluation(&report);
    write_json(&cfg.out_dir()?.join(REPORT_FILE), &report)
}

fn print_evaluation(report: &RunReport) {
    if let Some(e) = &report.evaluation {
        println!("NMI={:.4} ARI={:.4} F1={:.4} n={}", e.nmi, e.ari, e.f1, e.n_evaluated);
    }
}

fn cmd_pipeline(cfg: &RunConfig) -> Result<()> {
    let data = dataset(cfg)?;
    let output = run_pipeline(&data, cfg)?;
    write_pipeline(cfg.out_dir()?, &data, &output)?;
    for w in output.assignment.warnings() {
        eprintln!("warning: {w:?}");
    }
    print_evaluation(&output.report);
    Ok(())
}

fn cmd_sweep(a: &RunArgs, cfg: &RunConfig) -> Result<()> {
    let data = dataset(cfg)?;
    let weights = a.weights_file.as_deref().map(|p| read_weights(p, &data)).transpose()?;
    let (curve, report) = run_sweep(&data, cfg, weights.as_deref())?;
    write_sweep(cfg.out_dir()?, &curve, &report)?;
    println!("mAUC={:.4}", curve.mauc);
    for (t, r) in &curve.r_at_p {
        println!("R@{t}={r:.4}");
    }
    Ok(())
}

fn cmd_localize(cfg: &RunConfig) -> Result<()> {
    let data = dataset(cfg)?;
    let (result, report) = run_localize(&data, cfg)?;
    write_json(&cfg.out_dir()?.join(AUC_FILE), &report)?;
    println!("AUC={:.4}", result.auc);
    Ok(())
}
