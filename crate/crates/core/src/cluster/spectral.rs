//! Normalized spectral clustering on a Gaussian affinity.

use alloc::vec::Vec;

use super::{check_k, kmeans, ClusterAssignment, ClusterConfig, ClusterWarning, SpectralSigma};
use crate::distances::DistanceMatrix;
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;

/// Kernel bandwidth: the configured value, or the median off-diagonal
/// distance. When more than half of the distances are zero the median of the
/// positive distances is used instead. `None` means every distance is zero.
fn bandwidth(d: &DistanceMatrix, sigma: SpectralSigma) -> Option<f64> {
    if let SpectralSigma::Fixed(s) = sigma {
        return Some(s);
    }
    let mut upper = d.upper();
    upper.sort_by(f64::total_cmp);
    let median = median_sorted(&upper)?;
    if median > 0.0 {
        return Some(median);
    }
    let positive: Vec<f64> = upper.into_iter().filter(|&x| x > 0.0).collect();
    median_sorted(&positive)
}

fn median_sorted(xs: &[f64]) -> Option<f64> {
    match xs.len() {
        0 => None,
        n if n % 2 == 1 => Some(xs[n / 2]),
        n => Some(0.5 * (xs[n / 2 - 1] + xs[n / 2])),
    }
}

/// Row-normalized spectral embedding: one `k`-dimensional row per bag.
///
/// Returns `None` when all distances are zero and no bandwidth exists.
pub fn spectral_embedding(d: &DistanceMatrix, k: usize, cfg: &ClusterConfig) -> Result<Option<Vec<Vec<f64>>>> {
    cfg.validate()?;
    let n = d.n();
    check_k(k, n)?;
    let Some(sigma) = bandwidth(d, cfg.spectral_sigma) else {
        return Ok(None);
    };
    let denom = 2.0 * sigma * sigma;
    let mut a = alloc::vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = if i == j {
                1.0
            } else {
                let dij = d.get(i, j);
                libm::exp(-dij * dij / denom)
            };
        }
    }
    let inv_sqrt_deg: Vec<f64> = (0..n)
        .map(|i| 1.0 / libm::sqrt(a[i * n..(i + 1) * n].iter().sum::<f64>()))
        .collect();
    let mut lap = alloc::vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let norm = inv_sqrt_deg[i] * a[i * n + j] * inv_sqrt_deg[j];
            lap[i * n + j] = if i == j { 1.0 - norm } else { -norm };
        }
    }
    let (_, vecs) = symmetric_eigen(&lap, n);
    let rows = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..k).map(|c| vecs[i * n + c]).collect();
            let len = libm::sqrt(row.iter().map(|x| x * x).sum::<f64>());
            if len > 0.0 {
                for x in &mut row {
                    *x /= len;
                }
            }
            row
        })
        .collect();
    Ok(Some(rows))
}

/// Spectral clustering: embedding rows clustered with seeded k-means.
pub fn spectral(d: &DistanceMatrix, k: usize, cfg: &ClusterConfig) -> Result<ClusterAssignment> {
    let n = d.n();
    if n < 2 {
        return Err(Error::InvalidClusterCount { k, n });
    }
    check_k(k, n)?;
    if k == 1 {
        cfg.validate()?;
        return ClusterAssignment::new(alloc::vec![0; n], 1);
    }
    match spectral_embedding(d, k, cfg)? {
        Some(rows) => kmeans(&rows, k, cfg),
        None => Ok(ClusterAssignment::new(alloc::vec![0; n], k)?.with_warning(ClusterWarning::DegenerateAffinity)),
    }
}
