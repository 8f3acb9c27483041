//! Bottom-up agglomeration with Lance-Williams distance updates.

use alloc::vec::Vec;

use super::{check_k, ClusterAssignment};
use crate::distances::DistanceMatrix;
use crate::error::Result;

/// Cluster-to-cluster distance rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Linkage {
    /// Minimum-variance merging, run on squared input distances.
    Ward,
    Single,
    Complete,
    /// Size-weighted mean of member distances.
    Average,
}

/// One merge step. Clusters are identified by their smallest member index,
/// so `left < right` and the merged cluster keeps the `left` identifier.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    /// Linkage distance at which the two clusters were joined.
    pub height: f64,
    /// Size of the merged cluster.
    pub size: usize,
}

/// The full merge sequence for `n` observations.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dendrogram {
    n: usize,
    merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// Flat clustering with `k` clusters: replays the first `n - k` merges.
    /// Labels follow the order of each cluster's first member.
    pub fn cut(&self, k: usize) -> Result<ClusterAssignment> {
        check_k(k, self.n)?;
        let mut root: Vec<usize> = (0..self.n).collect();
        for merge in &self.merges[..self.n - k] {
            root[merge.right] = merge.left;
        }
        // `right` always points to a smaller id, so one ascending pass
        // resolves every chain.
        for i in 0..self.n {
            root[i] = root[root[i]];
        }
        let mut label_of_root = alloc::vec![usize::MAX; self.n];
        let mut next = 0;
        let labels = root
            .iter()
            .map(|&r| {
                if label_of_root[r] == usize::MAX {
                    label_of_root[r] = next;
                    next += 1;
                }
                label_of_root[r]
            })
            .collect();
        ClusterAssignment::new(labels, k)
    }
}

/// Builds the complete dendrogram.
///
/// Ties between candidate merges go to the lexicographically smallest
/// `(left, right)` pair.
pub fn linkage(d: &DistanceMatrix, method: Linkage) -> Dendrogram {
    let n = d.n();
    let mut dist: Vec<f64> = d.values().to_vec();
    if method == Linkage::Ward {
        for v in &mut dist {
            *v *= *v;
        }
    }
    let mut size = alloc::vec![1usize; n];
    let mut active = alloc::vec![true; n];
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    for _ in 1..n {
        let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if active[j] && dist[i * n + j] < best.2 {
                    best = (i, j, dist[i * n + j]);
                }
            }
        }
        let (i, j, dij) = best;
        if i == usize::MAX {
            // only reachable with non-finite input distances
            break;
        }
        let (ni, nj) = (size[i] as f64, size[j] as f64);
        for k in 0..n {
            if !active[k] || k == i || k == j {
                continue;
            }
            let dik = dist[i * n + k];
            let djk = dist[j * n + k];
            let nk = size[k] as f64;
            let updated = match method {
                Linkage::Single => dik.min(djk),
                Linkage::Complete => dik.max(djk),
                Linkage::Average => (ni * dik + nj * djk) / (ni + nj),
                Linkage::Ward => ((ni + nk) * dik + (nj + nk) * djk - nk * dij) / (ni + nj + nk),
            };
            dist[i * n + k] = updated;
            dist[k * n + i] = updated;
        }
        active[j] = false;
        size[i] += size[j];
        let height = match method {
            Linkage::Ward => libm::sqrt(dij.max(0.0)),
            _ => dij,
        };
        merges.push(Merge {
            left: i,
            right: j,
            height,
            size: size[i],
        });
    }
    Dendrogram { n, merges }
}

/// Agglomerative clustering cut at `k` clusters.
pub fn agglomerative(d: &DistanceMatrix, method: Linkage, k: usize) -> Result<ClusterAssignment> {
    check_k(k, d.n())?;
    linkage(d, method).cut(k)
}
