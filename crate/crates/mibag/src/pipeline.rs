//! The pipeline stages shared by the subcommands, and the reports they write.
//!
//! Each stage takes what the previous one produced (in memory or read back
//! from its output file), so staged runs and a single `pipeline` run give
//! identical files.

use std::collections::BTreeMap;
use std::path::Path;

use mibag_core::cluster::{cluster, ClusterAssignment, ClusterInput, ClusterWarning, Method};
use mibag_core::distances::aggregate_all;
use mibag_core::metrics::{
    evaluate, full_range, localization_auc, purity_sweep, EvaluationReport, LocalizationReport, PurityCurve,
};
use mibag_core::weights::{combined_topk_soft_weights, hard_topk_weights, mask_weights, uniform_weights};
use mibag_core::{resize_mask_to_grid, Dataset, DistanceMatrix, Mask, MaskSet, Measure, WeightVector};
use serde::{Deserialize, Serialize};

use crate::config::{MeasureSpec, RunConfig, ScoreSource, WeightMode};
use crate::error::{Error, Result};
use crate::export::{write_assignment, write_distmat, write_json, write_purity_csv, write_weights};
use crate::parallel::{
    par_distance_matrix, par_semi_scores, par_semi_soft_weights, par_unsup_scores, par_unsup_soft_weights,
};
use crate::store::load_masks;

pub const REPORT_FILE: &str = "report.json";
pub const DISTMAT_FILE: &str = "distmat.csv";
pub const ASSIGNMENT_FILE: &str = "assignment.csv";
pub const WEIGHTS_FILE: &str = "weights/weights.json";
pub const PURITY_CSV_FILE: &str = "purity.csv";
pub const CURVE_FILE: &str = "curve.json";
pub const AUC_FILE: &str = "auc.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub category: String,
    pub n_bags: usize,
    pub n_reference: usize,
    pub dim: usize,
}

impl DatasetSummary {
    pub fn of(dataset: &Dataset) -> Self {
        Self {
            category: dataset.category().to_string(),
            n_bags: dataset.len(),
            n_reference: dataset.reference_bags().len(),
            dim: dataset.dim(),
        }
    }
}

/// Written as `report.json` by `pipeline` and `evaluate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: RunConfig,
    pub dataset: DatasetSummary,
    pub warnings: Vec<ClusterWarning>,
    /// Absent when the bags carry no labels.
    pub evaluation: Option<EvaluationReport>,
}

impl RunReport {
    pub fn new(command: &str, config: &RunConfig, dataset: &Dataset) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed: config.seed,
            config: config.clone(),
            dataset: DatasetSummary::of(dataset),
            warnings: Vec::new(),
            evaluation: None,
        }
    }
}

/// Written as `curve.json` by `sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config: RunConfig,
    pub n: usize,
    pub mauc: f64,
    /// Keyed by the purity threshold as written in the config.
    pub r_at_p: BTreeMap<String, f64>,
    pub points: Vec<(usize, f64)>,
}

/// Written as `auc.json` by `localize`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizeReport {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config: RunConfig,
    pub auc: f64,
    pub pixels: usize,
    pub per_image: BTreeMap<String, Option<f64>>,
}

/// Masks for every bag: files from `dir`, all-zero masks for bags without
/// one (normal images).
pub fn complete_masks(dir: &Path, dataset: &Dataset) -> Result<MaskSet> {
    let found = load_masks(dir, dataset)?;
    let (h, w) = found.size().ok_or_else(|| {
        Error::from(mibag_core::Error::MissingMask { id: dataset.bags()[0].id().to_string() })
    })?;
    let mut all = MaskSet::new();
    for bag in dataset.bags() {
        let mask = match found.get(bag.id()) {
            Some(m) => m.clone(),
            None => Mask::zeros(h, w)?,
        };
        all.insert(bag.id(), mask)?;
    }
    Ok(all)
}

fn masks_for(cfg: &RunConfig, dataset: &Dataset) -> Result<MaskSet> {
    let dir = cfg
        .masks
        .as_deref()
        .ok_or_else(|| Error::Config("weight mode mask needs --masks".into()))?;
    complete_masks(dir, dataset)
}

/// Instance weights for every bag, in bag order, per the configured mode.
pub fn compute_weights(dataset: &Dataset, cfg: &RunConfig) -> Result<Vec<WeightVector>> {
    let wcfg = cfg.weight_config();
    let tag = |bag_id: &str, w: WeightVector| w.with_bag_id(bag_id);
    match cfg.weights {
        WeightMode::Uniform => Ok(dataset.bags().iter().map(uniform_weights).collect()),
        WeightMode::Unsup => par_unsup_soft_weights(dataset, &wcfg, cfg.aggregator),
        WeightMode::Semi => par_semi_soft_weights(dataset, &wcfg),
        WeightMode::Topk | WeightMode::Combined => {
            let k = cfg.k.ok_or_else(|| Error::Config("weight modes topk and combined need --k".into()))?;
            let scores = match cfg.scores {
                ScoreSource::Unsup => par_unsup_scores(dataset, &wcfg, cfg.aggregator)?,
                ScoreSource::Semi => par_semi_scores(dataset)?,
            };
            dataset
                .bags()
                .iter()
                .zip(&scores)
                .map(|(bag, s)| {
                    let w = if cfg.weights == WeightMode::Topk {
                        hard_topk_weights(s, k)?
                    } else {
                        combined_topk_soft_weights(s, cfg.tau, k)?
                    };
                    Ok(tag(bag.id(), w))
                })
                .collect()
        }
        WeightMode::Mask => {
            let masks = masks_for(cfg, dataset)?;
            dataset
                .bags()
                .iter()
                .map(|bag| {
                    let (rows, cols) =
                        bag.grid().ok_or_else(|| mibag_core::Error::MissingGrid { id: bag.id().to_string() })?;
                    let mask = masks.get(bag.id()).expect("completed mask set covers every bag");
                    Ok(tag(bag.id(), mask_weights(&resize_mask_to_grid(mask, rows, cols)?)?))
                })
                .collect()
        }
    }
}

/// Pairwise bag distances. Weighted-average measures need `weights`.
pub fn compute_distances(
    dataset: &Dataset,
    measure: MeasureSpec,
    weights: Option<&[WeightVector]>,
) -> Result<DistanceMatrix> {
    match measure {
        MeasureSpec::WeightedAverage => {
            let weights = weights.ok_or_else(|| Error::Config("measure wa needs weights".into()))?;
            par_distance_matrix(dataset.bags(), Measure::WeightedAverage(weights))
        }
        MeasureSpec::Hausdorff(v) => par_distance_matrix(dataset.bags(), Measure::Hausdorff(v)),
    }
}

/// Weighted-average aggregates, the input of k-means and GMM.
pub fn aggregates(dataset: &Dataset, weights: &[WeightVector]) -> Result<Vec<Vec<f64>>> {
    Ok(aggregate_all(dataset.bags(), weights)?)
}

/// What a clusterer needs for `method`: the distance matrix, or aggregated
/// vectors for k-means and GMM.
pub fn cluster_stage(
    method: Method,
    distances: Option<&DistanceMatrix>,
    vectors: Option<&[Vec<f64>]>,
    k: usize,
    cfg: &RunConfig,
) -> Result<ClusterAssignment> {
    let input = cluster_input(method, distances, vectors)?;
    Ok(cluster(method, input, k, &cfg.cluster_config())?)
}

fn cluster_input<'a>(
    method: Method,
    distances: Option<&'a DistanceMatrix>,
    vectors: Option<&'a [Vec<f64>]>,
) -> Result<ClusterInput<'a>> {
    if method.uses_distances() {
        distances
            .map(ClusterInput::Distances)
            .ok_or_else(|| Error::Config(format!("clusterer {method} needs a distance matrix")))
    } else {
        vectors
            .map(ClusterInput::Vectors)
            .ok_or_else(|| Error::Config(format!("clusterer {method} needs measure wa (aggregated bags)")))
    }
}

/// Scores an assignment when every bag is labeled; `None` when none is.
pub fn evaluation_stage(
    dataset: &Dataset,
    assignment: &ClusterAssignment,
    cfg: &RunConfig,
) -> Result<Option<EvaluationReport>> {
    let labels = dataset.labels();
    if labels.iter().all(Option::is_none) {
        return Ok(None);
    }
    Ok(Some(evaluate(&labels, assignment, &cfg.exclude(), cfg.eval_options())?))
}

/// Everything a full run produces.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub weights: Option<Vec<WeightVector>>,
    pub distances: DistanceMatrix,
    pub assignment: ClusterAssignment,
    pub report: RunReport,
}

/// Weights (for `wa`), distances, clustering and evaluation.
pub fn run_pipeline(dataset: &Dataset, cfg: &RunConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let measure = cfg.measure()?;
    let method = cfg.method()?;
    let k = cfg.cluster_count()?;
    let weights = match measure {
        MeasureSpec::WeightedAverage => Some(compute_weights(dataset, cfg)?),
        MeasureSpec::Hausdorff(_) => None,
    };
    let distances = compute_distances(dataset, measure, weights.as_deref())?;
    let vectors = weights.as_deref().map(|w| aggregates(dataset, w)).transpose()?;
    let assignment = cluster_stage(method, Some(&distances), vectors.as_deref(), k, cfg)?;
    let mut report = RunReport::new("pipeline", cfg, dataset);
    report.warnings = assignment.warnings().to_vec();
    report.evaluation = evaluation_stage(dataset, &assignment, cfg)?;
    Ok(PipelineOutput { weights, distances, assignment, report })
}

/// Writes a pipeline run's files under `dir`.
pub fn write_pipeline(dir: &Path, dataset: &Dataset, output: &PipelineOutput) -> Result<()> {
    let ids = bag_ids(dataset);
    if let Some(w) = &output.weights {
        write_weights(&dir.join(WEIGHTS_FILE), w)?;
    }
    write_distmat(&dir.join(DISTMAT_FILE), &ids, &output.distances)?;
    write_assignment(&dir.join(ASSIGNMENT_FILE), &ids, &output.assignment)?;
    write_json(&dir.join(REPORT_FILE), &output.report)
}

pub fn bag_ids(dataset: &Dataset) -> Vec<&str> {
    dataset.bags().iter().map(|b| b.id()).collect()
}

/// Purity over a range of cluster counts.
pub fn run_sweep(
    dataset: &Dataset,
    cfg: &RunConfig,
    weights: Option<&[WeightVector]>,
) -> Result<(PurityCurve, SweepReport)> {
    cfg.validate()?;
    let measure = cfg.measure()?;
    let method = cfg.method()?;
    let owned;
    let weights = match (measure, weights) {
        (MeasureSpec::WeightedAverage, None) => {
            owned = compute_weights(dataset, cfg)?;
            Some(owned.as_slice())
        }
        (MeasureSpec::WeightedAverage, w) => w,
        (MeasureSpec::Hausdorff(_), _) => None,
    };
    let distances = if method.uses_distances() {
        Some(compute_distances(dataset, measure, weights)?)
    } else {
        None
    };
    let vectors = match (method.uses_distances(), weights) {
        (false, Some(w)) => Some(aggregates(dataset, w)?),
        _ => None,
    };
    let input = cluster_input(method, distances.as_ref(), vectors.as_deref())?;
    let ks = cfg.k_range.clone().unwrap_or_else(|| full_range(dataset.len()));
    let labels = dataset.labels();
    let curve = purity_sweep(
        method,
        input,
        &labels,
        &cfg.exclude(),
        &ks,
        &cfg.thresholds,
        &cfg.cluster_config(),
    )?;
    let report = SweepReport {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        n: curve.n,
        mauc: curve.mauc,
        r_at_p: curve.r_at_p.iter().map(|(t, r)| (t.to_string(), *r)).collect(),
        points: curve.points.clone(),
    };
    Ok((curve, report))
}

pub fn write_sweep(dir: &Path, curve: &PurityCurve, report: &SweepReport) -> Result<()> {
    write_purity_csv(&dir.join(PURITY_CSV_FILE), curve)?;
    write_json(&dir.join(CURVE_FILE), report)
}

/// Pixel AUC of the configured weights against the masks in `cfg.masks`.
pub fn run_localize(dataset: &Dataset, cfg: &RunConfig) -> Result<(LocalizationReport, LocalizeReport)> {
    cfg.validate()?;
    let dir = cfg
        .masks
        .as_deref()
        .ok_or_else(|| Error::Config("localize needs --masks".into()))?;
    let masks = complete_masks(dir, dataset)?;
    let weights = compute_weights(dataset, cfg)?;
    let result = localization_auc(dataset.bags(), &weights, &masks)?;
    let report = LocalizeReport {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        auc: result.auc,
        pixels: result.pixels,
        per_image: result.per_image.iter().cloned().collect(),
    };
    Ok((result, report))
}
