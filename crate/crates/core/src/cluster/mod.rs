//! Clustering backends over bag distance matrices or aggregated vectors.
//!
//! Distance-based: [`agglomerative`], [`spectral`], [`kmedoids`].
//! Vector-based: [`kmeans`], [`gmm_full`].

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::distances::DistanceMatrix;
use crate::error::{Error, Result};

mod agglomerative;
mod gmm;
mod kmeans;
mod kmedoids;
mod spectral;

pub use agglomerative::{agglomerative, linkage, Dendrogram, Linkage, Merge};
pub use gmm::{gmm_fit, gmm_full, GmmFit};
pub use kmeans::{kmeans, kmeans_fit, KMeansFit};
pub use kmedoids::{kmedoids, kmedoids_fit, KMedoidsFit};
pub use spectral::{spectral, spectral_embedding};

/// Something unusual the clusterer wants the caller to know about.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ClusterWarning {
    /// Fewer than K clusters are populated.
    EmptyClusters { count: usize },
    /// All pairwise distances are zero; one cluster returned.
    DegenerateAffinity,
    /// Covariance regularization had to be raised to this value.
    RegularizationRaised { reg: f64 },
}

/// Cluster label per bag.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClusterAssignment {
    labels: Vec<usize>,
    k: usize,
    warnings: Vec<ClusterWarning>,
}

impl ClusterAssignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidClusterCount { k, n: labels.len() });
        }
        if labels.iter().any(|&l| l >= k) {
            return Err(Error::InvalidConfig("cluster label out of range"));
        }
        let mut out = Self {
            labels,
            k,
            warnings: Vec::new(),
        };
        let empty = out.k - out.populated();
        if empty > 0 && out.labels.len() >= out.k {
            out.warnings.push(ClusterWarning::EmptyClusters { count: empty });
        }
        Ok(out)
    }

    pub(crate) fn with_warning(mut self, warning: ClusterWarning) -> Self {
        self.warnings.push(warning);
        self
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn warnings(&self) -> &[ClusterWarning] {
        &self.warnings
    }

    /// Number of distinct labels in use.
    pub fn populated(&self) -> usize {
        let mut seen = alloc::vec![false; self.k];
        for &l in &self.labels {
            seen[l] = true;
        }
        seen.into_iter().filter(|&s| s).count()
    }
}

/// Affinity bandwidth for spectral clustering.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SpectralSigma {
    /// Median of the off-diagonal distances.
    #[default]
    Median,
    Fixed(f64),
}

/// Hyperparameters shared by the clustering backends.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClusterConfig {
    pub seed: u64,
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub gmm_reg: f64,
    pub spectral_sigma: SpectralSigma,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 10,
            max_iter: 300,
            tol: 1e-6,
            gmm_reg: 1e-6,
            spectral_sigma: SpectralSigma::Median,
        }
    }
}

impl ClusterConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1"));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidConfig("tol must be nonnegative"));
        }
        if !(self.gmm_reg >= 0.0) {
            return Err(Error::InvalidConfig("gmm_reg must be nonnegative"));
        }
        if let SpectralSigma::Fixed(s) = self.spectral_sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidConfig("spectral sigma must be positive"));
            }
        }
        Ok(())
    }
}

/// The clustering method, as named on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Method {
    Agglomerative(Linkage),
    Spectral,
    KMeans,
    Gmm,
    KMedoids,
}

impl Method {
    /// Whether the method works from a distance matrix (as opposed to
    /// aggregated vectors).
    pub fn uses_distances(self) -> bool {
        !matches!(self, Method::KMeans | Method::Gmm)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Agglomerative(Linkage::Ward) => "ward",
            Method::Agglomerative(Linkage::Single) => "single",
            Method::Agglomerative(Linkage::Complete) => "complete",
            Method::Agglomerative(Linkage::Average) => "average",
            Method::Spectral => "spectral",
            Method::KMeans => "kmeans",
            Method::Gmm => "gmm",
            Method::KMedoids => "kmedoids",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ward" => Method::Agglomerative(Linkage::Ward),
            "single" => Method::Agglomerative(Linkage::Single),
            "complete" => Method::Agglomerative(Linkage::Complete),
            "average" => Method::Agglomerative(Linkage::Average),
            "spectral" => Method::Spectral,
            "kmeans" => Method::KMeans,
            "gmm" => Method::Gmm,
            "kmedoids" => Method::KMedoids,
            _ => return Err(Error::InvalidConfig("unknown clustering method")),
        })
    }
}

/// Data handed to a clusterer: a distance matrix or one vector per bag.
#[derive(Debug, Clone, Copy)]
pub enum ClusterInput<'a> {
    Distances(&'a DistanceMatrix),
    Vectors(&'a [Vec<f64>]),
}

impl ClusterInput<'_> {
    pub fn len(&self) -> usize {
        match self {
            ClusterInput::Distances(d) => d.n(),
            ClusterInput::Vectors(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Runs `method` with `k` clusters on matching input.
pub fn cluster(method: Method, input: ClusterInput<'_>, k: usize, cfg: &ClusterConfig) -> Result<ClusterAssignment> {
    match (method, input) {
        (Method::Agglomerative(l), ClusterInput::Distances(d)) => agglomerative(d, l, k),
        (Method::Spectral, ClusterInput::Distances(d)) => spectral(d, k, cfg),
        (Method::KMedoids, ClusterInput::Distances(d)) => kmedoids(d, k, cfg),
        (Method::KMeans, ClusterInput::Vectors(v)) => kmeans(v, k, cfg),
        (Method::Gmm, ClusterInput::Vectors(v)) => gmm_full(v, k, cfg),
        (m, _) if m.uses_distances() => Err(Error::InvalidConfig("method needs a distance matrix")),
        _ => Err(Error::InvalidConfig("method needs aggregated vectors")),
    }
}

pub(crate) fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        Err(Error::InvalidClusterCount { k, n })
    } else {
        Ok(())
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn method_names_roundtrip() {
        for name in ["ward", "single", "complete", "average", "spectral", "kmeans", "gmm", "kmedoids"] {
            assert_eq!(alloc::format!("{}", name.parse::<Method>().unwrap()), name);
        }
        assert!("dbscan".parse::<Method>().is_err());
    }

    #[test]
    fn assignment_flags_empty_clusters() {
        let a = ClusterAssignment::new(vec![0, 0, 2], 3).unwrap();
        assert_eq!(a.warnings(), &[ClusterWarning::EmptyClusters { count: 1 }]);
        assert!(ClusterAssignment::new(vec![0, 3], 3).is_err());
    }
}
