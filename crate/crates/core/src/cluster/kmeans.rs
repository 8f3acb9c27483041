//! Lloyd's k-means with k-means++ seeding and seeded restarts.
//!
//! Each restart runs Lloyd iterations and then single-point moves: a point
//! goes to another cluster whenever that lowers the total inertia once both
//! centroids are updated. Lloyd fixed points are not always stable under
//! such moves, so this finds better partitions than Lloyd alone.

use alloc::vec::Vec;

use rand::RngExt;
use rand_pcg::Pcg64;

use super::{check_k, squared_distance, ClusterAssignment, ClusterConfig};
use crate::error::{Error, Result};

/// Result of the best restart.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub assignment: ClusterAssignment,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Final inertia of every restart, in restart order.
    pub restart_inertias: Vec<f64>,
}

pub fn kmeans(vectors: &[Vec<f64>], k: usize, cfg: &ClusterConfig) -> Result<ClusterAssignment> {
    kmeans_fit(vectors, k, cfg).map(|fit| fit.assignment)
}

/// Runs `cfg.restarts` seeded restarts and keeps the lowest inertia, with
/// ties going to the earlier restart.
pub fn kmeans_fit(vectors: &[Vec<f64>], k: usize, cfg: &ClusterConfig) -> Result<KMeansFit> {
    cfg.validate()?;
    check_k(k, vectors.len())?;
    let dim = vectors[0].len();
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::LengthMismatch {
            expected: dim,
            found: vectors.iter().map(Vec::len).find(|&l| l != dim).unwrap_or(dim),
        });
    }

    let mut best: Option<(Vec<usize>, Vec<Vec<f64>>, f64)> = None;
    let mut restart_inertias = Vec::with_capacity(cfg.restarts);
    for restart in 0..cfg.restarts {
        let mut rng = Pcg64::new(u128::from(cfg.seed), restart as u128);
        let centroids = plus_plus_seeds(vectors, k, &mut rng);
        let (labels, _) = lloyd(vectors, centroids, cfg);
        let (labels, centroids, inertia) = single_moves(vectors, labels, k, cfg.max_iter);
        restart_inertias.push(inertia);
        if best.as_ref().is_none_or(|b| inertia < b.2) {
            best = Some((labels, centroids, inertia));
        }
    }
    let (labels, centroids, inertia) = best.expect("at least one restart");
    Ok(KMeansFit {
        assignment: ClusterAssignment::new(labels, k)?,
        centroids,
        inertia,
        restart_inertias,
    })
}

fn plus_plus_seeds(vectors: &[Vec<f64>], k: usize, rng: &mut Pcg64) -> Vec<Vec<f64>> {
    let n = vectors.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(vectors[rng.random_range(0..n)].clone());
    let mut nearest: Vec<f64> = vectors.iter().map(|v| squared_distance(v, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &w) in nearest.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = vectors[pick].clone();
        for (d, v) in nearest.iter_mut().zip(vectors) {
            *d = d.min(squared_distance(v, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn nearest_centroid(v: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(v, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn lloyd(vectors: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, cfg: &ClusterConfig) -> (Vec<usize>, Vec<Vec<f64>>) {
    let k = centroids.len();
    let dim = vectors[0].len();
    let mut labels = alloc::vec![0usize; vectors.len()];
    for _ in 0..cfg.max_iter {
        let mut dists = alloc::vec![0.0; vectors.len()];
        for (i, v) in vectors.iter().enumerate() {
            let (c, d) = nearest_centroid(v, &centroids);
            labels[i] = c;
            dists[i] = d;
        }
        let mut sums = alloc::vec![alloc::vec![0.0; dim]; k];
        let mut counts = alloc::vec![0usize; k];
        for (v, &l) in vectors.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(v) {
                *s += x;
            }
        }
        // empty clusters take the point farthest from its centroid
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let far = (0..vectors.len())
                .filter(|&i| counts[labels[i]] > 1)
                .fold(None, |acc: Option<usize>, i| match acc {
                    Some(b) if dists[b] >= dists[i] => Some(b),
                    _ => Some(i),
                });
            if let Some(i) = far {
                let old = labels[i];
                counts[old] -= 1;
                for (s, x) in sums[old].iter_mut().zip(&vectors[i]) {
                    *s -= x;
                }
                labels[i] = c;
                dists[i] = 0.0;
                counts[c] = 1;
                sums[c] = vectors[i].clone();
            }
        }
        let mut shift = 0.0;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let updated: Vec<f64> = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            shift += squared_distance(&updated, &centroids[c]);
            centroids[c] = updated;
        }
        if shift <= cfg.tol {
            break;
        }
    }
    for (i, v) in vectors.iter().enumerate() {
        labels[i] = nearest_centroid(v, &centroids).0;
    }
    (labels, centroids)
}

fn means(vectors: &[Vec<f64>], labels: &[usize], k: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let dim = vectors[0].len();
    let mut sums = alloc::vec![alloc::vec![0.0; dim]; k];
    let mut counts = alloc::vec![0usize; k];
    for (v, &l) in vectors.iter().zip(labels) {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(v) {
            *s += x;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            for x in s.iter_mut() {
                *x /= c as f64;
            }
        }
    }
    (sums, counts)
}

/// Moves single points between clusters while a move lowers the inertia.
/// Taking point `x` out of cluster `a` saves `n_a / (n_a - 1) * |x - c_a|^2`
/// and adding it to `b` costs `n_b / (n_b + 1) * |x - c_b|^2`.
fn single_moves(vectors: &[Vec<f64>], mut labels: Vec<usize>, k: usize, max_passes: usize) -> (Vec<usize>, Vec<Vec<f64>>, f64) {
    let (mut centroids, mut counts) = means(vectors, &labels, k);
    for _ in 0..max_passes {
        let mut moved = false;
        for (i, v) in vectors.iter().enumerate() {
            let a = labels[i];
            if counts[a] < 2 {
                continue;
            }
            let na = counts[a] as f64;
            let saving = na / (na - 1.0) * squared_distance(v, &centroids[a]);
            let mut best: Option<(usize, f64)> = None;
            for b in (0..k).filter(|&b| b != a && counts[b] > 0) {
                let nb = counts[b] as f64;
                let cost = nb / (nb + 1.0) * squared_distance(v, &centroids[b]);
                if best.is_none_or(|(_, c)| cost < c) {
                    best = Some((b, cost));
                }
            }
            let Some((b, cost)) = best else { continue };
            if saving - cost <= 1e-12 * saving {
                continue;
            }
            let nb = counts[b] as f64;
            for (c, x) in centroids[a].iter_mut().zip(v) {
                *c = (*c * na - x) / (na - 1.0);
            }
            for (c, x) in centroids[b].iter_mut().zip(v) {
                *c = (*c * nb + x) / (nb + 1.0);
            }
            counts[a] -= 1;
            counts[b] += 1;
            labels[i] = b;
            moved = true;
        }
        if !moved {
            break;
        }
    }
    // exact means again, so the reported inertia carries no update drift
    let (centroids, _) = means(vectors, &labels, k);
    let inertia = vectors.iter().zip(&labels).map(|(v, &l)| squared_distance(v, &centroids[l])).sum();
    (labels, centroids, inertia)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pts(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn separates_two_groups() {
        let fit = kmeans_fit(&pts(&[0.0, 1.0, 10.0, 11.0]), 2, &ClusterConfig::default()).unwrap();
        let l = fit.assignment.labels();
        assert_eq!(l[0], l[1]);
        assert_eq!(l[2], l[3]);
        assert_ne!(l[0], l[2]);
        assert!((fit.inertia - 1.0).abs() < 1e-12);
        assert!(fit.restart_inertias.iter().all(|&r| fit.inertia <= r));
    }

    #[test]
    fn k_equals_n_zero_inertia() {
        let fit = kmeans_fit(&pts(&[3.0, -1.0, 8.0]), 3, &ClusterConfig::default()).unwrap();
        assert_eq!(fit.inertia, 0.0);
        let mut l = fit.assignment.labels().to_vec();
        l.sort();
        assert_eq!(l, vec![0, 1, 2]);
    }

    #[test]
    fn duplicates_share_a_label() {
        let a = kmeans(&pts(&[2.0, 2.0, 9.0, 9.0, 9.0]), 2, &ClusterConfig::default()).unwrap();
        assert_eq!(a.labels()[0], a.labels()[1]);
        assert_eq!(a.labels()[2], a.labels()[4]);
    }

    #[test]
    fn deterministic_and_validated() {
        let v = pts(&[0.3, 1.7, 2.2, 5.0, 5.1, 9.9]);
        let cfg = ClusterConfig { seed: 42, ..ClusterConfig::default() };
        assert_eq!(kmeans(&v, 3, &cfg).unwrap(), kmeans(&v, 3, &cfg).unwrap());
        assert!(kmeans(&v, 7, &cfg).is_err());
        assert!(kmeans(&v, 0, &cfg).is_err());
    }
}
