//! Cluster purity under over-clustering, summarized by mAUC and R@P.

use alloc::vec::Vec;

use super::scores::{contingency, ContingencyTable};
use crate::cluster::{cluster, linkage, ClusterAssignment, ClusterConfig, ClusterInput, Method};
use crate::error::{Error, Result};

/// Purity levels reported by default.
pub const DEFAULT_PURITY_THRESHOLDS: [f64; 3] = [0.9, 0.95, 0.99];

/// Share of bags that carry the majority label of their cluster.
pub fn purity(table: &ContingencyTable) -> f64 {
    let hits: u64 = (0..table.clusters())
        .map(|c| table.counts().iter().map(|row| row[c]).max().unwrap_or(0))
        .sum();
    hits as f64 / table.total() as f64
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PurityCurve {
    /// `(K, purity)` in strictly increasing K.
    pub points: Vec<(usize, f64)>,
    /// Number of clustered bags; the sweep domain is `1..=n`.
    pub n: usize,
    /// Area under the step curve divided by `n`.
    pub mauc: f64,
    /// `(threshold, 1 - K_min / n)`, or 0 when the threshold is never reached.
    pub r_at_p: Vec<(f64, f64)>,
}

impl PurityCurve {
    /// Summarizes swept points. Each point's purity holds until the next
    /// swept K; the last one holds through `n`.
    pub fn from_points(points: Vec<(usize, f64)>, n: usize, thresholds: &[f64]) -> Result<Self> {
        check_range(points.iter().map(|p| p.0), n)?;
        let mut area = 0.0;
        for (i, &(k, p)) in points.iter().enumerate() {
            let next = points.get(i + 1).map_or(n + 1, |q| q.0);
            area += (next - k) as f64 * p;
        }
        let r_at_p = thresholds
            .iter()
            .map(|&t| {
                let r = points
                    .iter()
                    .find(|&&(_, p)| p >= t)
                    .map_or(0.0, |&(k, _)| 1.0 - k as f64 / n as f64);
                (t, r)
            })
            .collect();
        Ok(Self {
            points,
            n,
            mauc: area / n as f64,
            r_at_p,
        })
    }

    pub fn recall_at(&self, threshold: f64) -> Option<f64> {
        self.r_at_p.iter().find(|(t, _)| *t == threshold).map(|&(_, r)| r)
    }
}

fn check_range(ks: impl IntoIterator<Item = usize>, n: usize) -> Result<()> {
    let mut prev = 0;
    let mut any = false;
    for k in ks {
        if k <= prev || k > n {
            return Err(Error::InvalidRange { n });
        }
        prev = k;
        any = true;
    }
    if any {
        Ok(())
    } else {
        Err(Error::EmptyRange)
    }
}

/// The full sweep `1..=n`.
pub fn full_range(n: usize) -> Vec<usize> {
    (1..=n).collect()
}

/// Purity curve from any clustering callback, one call per swept K.
pub fn purity_curve<F>(
    truth: &[Option<&str>],
    exclude: &[&str],
    ks: &[usize],
    thresholds: &[f64],
    mut assign: F,
) -> Result<PurityCurve>
where
    F: FnMut(usize) -> Result<ClusterAssignment>,
{
    let n = truth.len();
    check_range(ks.iter().copied(), n)?;
    let mut points = Vec::with_capacity(ks.len());
    for &k in ks {
        let table = contingency(truth, &assign(k)?, exclude)?;
        points.push((k, purity(&table)));
    }
    PurityCurve::from_points(points, n, thresholds)
}

/// Sweeps `method` over `ks`. Agglomerative methods build one dendrogram
/// and cut it at every K.
pub fn purity_sweep(
    method: Method,
    input: ClusterInput<'_>,
    truth: &[Option<&str>],
    exclude: &[&str],
    ks: &[usize],
    thresholds: &[f64],
    cfg: &ClusterConfig,
) -> Result<PurityCurve> {
    if input.len() != truth.len() {
        return Err(Error::LengthMismatch { expected: truth.len(), found: input.len() });
    }
    match (method, input) {
        (Method::Agglomerative(l), ClusterInput::Distances(d)) => {
            let dendrogram = linkage(d, l);
            purity_curve(truth, exclude, ks, thresholds, |k| dendrogram.cut(k))
        }
        _ => purity_curve(truth, exclude, ks, thresholds, |k| cluster(method, input, k, cfg)),
    }
}
