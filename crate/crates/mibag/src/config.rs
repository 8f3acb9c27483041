//! Run configuration: a TOML file overlaid by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mibag_core::cluster::{ClusterConfig, Method, SpectralSigma};
use mibag_core::metrics::{EvalOptions, F1Average, NmiNormalization, DEFAULT_PURITY_THRESHOLDS};
use mibag_core::weights::DEFAULT_TAU;
use mibag_core::{Aggregator, HausdorffVariant, WeightConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How instance weights are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    Uniform,
    #[default]
    Unsup,
    Semi,
    /// `1/k` on the k highest-scoring instances.
    Topk,
    /// Softmax over the k highest-scoring instances.
    Combined,
    /// Normalized ground-truth masks.
    Mask,
}

impl FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "uniform" => Self::Uniform,
            "unsup" => Self::Unsup,
            "semi" => Self::Semi,
            "topk" => Self::Topk,
            "combined" => Self::Combined,
            "mask" => Self::Mask,
            _ => return Err(Error::Config(format!("unknown weight mode {s:?}"))),
        })
    }
}

/// Which scores feed the top-k weight modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreSource {
    #[default]
    Unsup,
    Semi,
}

/// A parsed `--measure` value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureSpec {
    WeightedAverage,
    Hausdorff(HausdorffVariant),
}

impl FromStr for MeasureSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "wa" {
            return Ok(Self::WeightedAverage);
        }
        match s.strip_prefix("hausdorff:") {
            Some(v) => Ok(Self::Hausdorff(v.parse()?)),
            None if s == "hausdorff" => Ok(Self::Hausdorff(HausdorffVariant::MAX)),
            None => Err(Error::Config(format!("unknown measure {s:?}, expected wa or hausdorff:<variant>"))),
        }
    }
}

impl fmt::Display for MeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::WeightedAverage => f.write_str("wa"),
            Self::Hausdorff(v) => write!(f, "hausdorff:{v}"),
        }
    }
}

/// Parses `"a-b"` (inclusive) or a comma-separated list of cluster counts.
pub fn parse_k_range(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::Config(format!("invalid K range {s:?}, expected a-b or a comma list"));
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Config("empty K range".into()));
    }
    if let Some((a, b)) = s.split_once('-') {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect()
}

/// Every knob of a run. Unset keys take their defaults; the resolved value is
/// echoed into each report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// `wa` or `hausdorff:<variant>`.
    pub measure: String,
    pub weights: WeightMode,
    pub tau: f64,
    /// Top-k size for the `topk` and `combined` modes.
    pub k: Option<usize>,
    pub subsample: Option<usize>,
    pub aggregator: Aggregator,
    pub scores: ScoreSource,
    pub masks: Option<PathBuf>,
    pub clusterer: String,
    #[serde(rename = "K")]
    pub n_clusters: Option<usize>,
    pub seed: u64,
    pub exclude_labels: Vec<String>,
    /// Swept cluster counts; all of `1..=N` when unset.
    pub k_range: Option<Vec<usize>>,
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub gmm_reg: f64,
    /// Fixed spectral bandwidth; the median distance when unset.
    pub spectral_sigma: Option<f64>,
    pub nmi: NmiNormalization,
    pub f1: F1Average,
    pub thresholds: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let cluster = ClusterConfig::default();
        Self {
            manifest: None,
            out: None,
            measure: "wa".into(),
            weights: WeightMode::default(),
            tau: DEFAULT_TAU,
            k: None,
            subsample: None,
            aggregator: Aggregator::default(),
            scores: ScoreSource::default(),
            masks: None,
            clusterer: "ward".into(),
            n_clusters: None,
            seed: 0,
            exclude_labels: Vec::new(),
            k_range: None,
            restarts: cluster.restarts,
            max_iter: cluster.max_iter,
            tol: cluster.tol,
            gmm_reg: cluster.gmm_reg,
            spectral_sigma: None,
            nmi: NmiNormalization::default(),
            f1: F1Average::default(),
            thresholds: DEFAULT_PURITY_THRESHOLDS.to_vec(),
        }
    }
}

impl RunConfig {
    /// Reads a TOML file. Relative paths inside it are resolved against the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self =
            toml::from_str(&text).map_err(|source| Error::Toml { path: path.to_path_buf(), source })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.manifest, &mut cfg.out, &mut cfg.masks].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn measure(&self) -> Result<MeasureSpec> {
        self.measure.parse()
    }

    pub fn method(&self) -> Result<Method> {
        self.clusterer
            .parse()
            .map_err(|_| Error::Config(format!("unknown clusterer {:?}", self.clusterer)))
    }

    pub fn weight_config(&self) -> WeightConfig {
        WeightConfig {
            tau: self.tau,
            k: self.k,
            subsample_size: self.subsample,
            seed: self.seed,
        }
    }

    pub fn cluster_config(&self) -> ClusterConfig {
        ClusterConfig {
            seed: self.seed,
            restarts: self.restarts,
            max_iter: self.max_iter,
            tol: self.tol,
            gmm_reg: self.gmm_reg,
            spectral_sigma: self.spectral_sigma.map_or(SpectralSigma::Median, SpectralSigma::Fixed),
        }
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions { nmi: self.nmi, f1: self.f1 }
    }

    pub fn manifest_path(&self) -> Result<&Path> {
        self.manifest.as_deref().ok_or_else(|| Error::Config("--manifest is required".into()))
    }

    pub fn out_dir(&self) -> Result<&Path> {
        self.out.as_deref().ok_or_else(|| Error::Config("--out is required".into()))
    }

    pub fn cluster_count(&self) -> Result<usize> {
        self.n_clusters.ok_or_else(|| Error::Config("--K is required".into()))
    }

    pub fn exclude(&self) -> Vec<&str> {
        self.exclude_labels.iter().map(String::as_str).collect()
    }

    /// Checks every value that can be checked without data.
    pub fn validate(&self) -> Result<()> {
        self.measure()?;
        self.method()?;
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        if self.k == Some(0) {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.subsample == Some(0) {
            return Err(Error::Config("subsample must be at least 1".into()));
        }
        if self.n_clusters == Some(0) {
            return Err(Error::Config("K must be at least 1".into()));
        }
        if self.restarts == 0 || self.max_iter == 0 {
            return Err(Error::Config("restarts and max_iter must be at least 1".into()));
        }
        if !(self.tol >= 0.0) || !(self.gmm_reg >= 0.0) {
            return Err(Error::Config("tol and gmm_reg must be nonnegative".into()));
        }
        if self.spectral_sigma.is_some_and(|s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::Config("spectral_sigma must be positive".into()));
        }
        if self.thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::Config("purity thresholds must lie in [0, 1]".into()));
        }
        if matches!(&self.k_range, Some(r) if r.is_empty()) {
            return Err(Error::Config("empty K range".into()));
        }
        if matches!(self.weights, WeightMode::Topk | WeightMode::Combined) && self.k.is_none() {
            return Err(Error::Config("weight modes topk and combined need --k".into()));
        }
        Ok(())
    }
}
