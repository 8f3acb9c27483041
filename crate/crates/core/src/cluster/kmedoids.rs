//! Partitioning Around Medoids: greedy BUILD followed by steepest SWAP.
//!
//! SWAP only reaches a local optimum, so it is repeated from
//! `restarts - 1` seeded random medoid sets and the cheapest result wins.
//! The BUILD start comes first and wins ties.

use alloc::vec::Vec;
use rand::seq::index;
use rand_pcg::Pcg64;

use super::{check_k, ClusterAssignment, ClusterConfig};
use crate::distances::DistanceMatrix;
use crate::error::Result;

/// Swaps must improve the cost by more than this to be applied.
const SWAP_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct KMedoidsFit {
    pub assignment: ClusterAssignment,
    /// Medoid bag index per cluster label.
    pub medoids: Vec<usize>,
    /// Sum of distances from every bag to its medoid.
    pub cost: f64,
    /// Cost of the greedy BUILD medoids.
    pub build_cost: f64,
    /// Cost after each swap applied in the winning run.
    pub swap_costs: Vec<f64>,
    /// Final cost of every run, the BUILD start first.
    pub restart_costs: Vec<f64>,
}

pub fn kmedoids(d: &DistanceMatrix, k: usize, cfg: &ClusterConfig) -> Result<ClusterAssignment> {
    kmedoids_fit(d, k, cfg).map(|fit| fit.assignment)
}

pub fn kmedoids_fit(d: &DistanceMatrix, k: usize, cfg: &ClusterConfig) -> Result<KMedoidsFit> {
    cfg.validate()?;
    let n = d.n();
    check_k(k, n)?;

    let start = build(d, k);
    let build_cost = total_cost(d, &start);
    let mut best = swap(d, start, build_cost, cfg.max_iter);
    let mut restart_costs = alloc::vec![best.1];
    for restart in 1..cfg.restarts {
        let mut rng = Pcg64::new(u128::from(cfg.seed), restart as u128);
        let mut start = index::sample(&mut rng, n, k).into_vec();
        start.sort_unstable();
        let cost = total_cost(d, &start);
        let run = swap(d, start, cost, cfg.max_iter);
        restart_costs.push(run.1);
        if run.1 < best.1 {
            best = run;
        }
    }
    let (medoids, cost, swap_costs) = best;

    let labels = (0..n).map(|i| nearest_slot(d, &medoids, i).0).collect();
    Ok(KMedoidsFit {
        assignment: ClusterAssignment::new(labels, k)?,
        medoids,
        cost,
        build_cost,
        swap_costs,
        restart_costs,
    })
}

/// Steepest-descent swaps from `medoids` until none improves the cost.
fn swap(d: &DistanceMatrix, mut medoids: Vec<usize>, mut cost: f64, max_iter: usize) -> (Vec<usize>, f64, Vec<f64>) {
    let n = d.n();
    let mut swap_costs = Vec::new();
    for _ in 0..max_iter {
        let (nearest, second) = nearest_two(d, &medoids);
        let mut best: Option<(usize, usize, f64)> = None;
        for slot in 0..medoids.len() {
            for h in 0..n {
                if medoids.contains(&h) {
                    continue;
                }
                let mut delta = 0.0;
                for i in 0..n {
                    let dih = d.get(i, h);
                    let (near_slot, near_d) = nearest[i];
                    let new = if near_slot == slot { dih.min(second[i]) } else { near_d.min(dih) };
                    delta += new - near_d;
                }
                if best.is_none_or(|b| delta < b.2) {
                    best = Some((slot, h, delta));
                }
            }
        }
        match best {
            Some((slot, h, delta)) if delta < -SWAP_EPSILON => {
                medoids[slot] = h;
                cost = total_cost(d, &medoids);
                swap_costs.push(cost);
            }
            _ => break,
        }
    }
    (medoids, cost, swap_costs)
}

fn build(d: &DistanceMatrix, k: usize) -> Vec<usize> {
    let n = d.n();
    let first = (0..n)
        .map(|j| (j, (0..n).map(|i| d.get(i, j)).sum::<f64>()))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
        .0;
    let mut medoids = alloc::vec![first];
    let mut nearest: Vec<f64> = (0..n).map(|i| d.get(i, first)).collect();
    while medoids.len() < k {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for c in (0..n).filter(|c| !medoids.contains(c)) {
            let gain: f64 = (0..n).map(|i| (nearest[i] - d.get(i, c)).max(0.0)).sum();
            if gain > best.1 {
                best = (c, gain);
            }
        }
        let c = best.0;
        for (i, near) in nearest.iter_mut().enumerate() {
            *near = near.min(d.get(i, c));
        }
        medoids.push(c);
    }
    medoids
}

/// Closest medoid slot for bag `i`; ties go to the lower bag index.
fn nearest_slot(d: &DistanceMatrix, medoids: &[usize], i: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY, usize::MAX);
    for (slot, &m) in medoids.iter().enumerate() {
        let dist = d.get(i, m);
        if dist < best.1 || (dist == best.1 && m < best.2) {
            best = (slot, dist, m);
        }
    }
    (best.0, best.1)
}

fn nearest_two(d: &DistanceMatrix, medoids: &[usize]) -> (Vec<(usize, f64)>, Vec<f64>) {
    let n = d.n();
    let mut nearest = Vec::with_capacity(n);
    let mut second = Vec::with_capacity(n);
    for i in 0..n {
        let near = nearest_slot(d, medoids, i);
        let sec = medoids
            .iter()
            .enumerate()
            .filter(|&(slot, _)| slot != near.0)
            .map(|(_, &m)| d.get(i, m))
            .fold(f64::INFINITY, f64::min);
        nearest.push(near);
        second.push(sec);
    }
    (nearest, second)
}

fn total_cost(d: &DistanceMatrix, medoids: &[usize]) -> f64 {
    (0..d.n()).map(|i| nearest_slot(d, medoids, i).1).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn line(points: &[f64]) -> DistanceMatrix {
        let n = points.len();
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                v[i * n + j] = (points[i] - points[j]).abs();
            }
        }
        DistanceMatrix::new(n, v, "test").unwrap()
    }

    #[test]
    fn three_points() {
        let fit = kmedoids_fit(&line(&[0.0, 1.0, 10.0]), 2, &ClusterConfig::default()).unwrap();
        assert_eq!(fit.cost, 1.0);
        assert!(fit.medoids.contains(&2));
        assert!(fit.medoids.contains(&0) || fit.medoids.contains(&1));
        let l = fit.assignment.labels();
        assert_eq!(l[0], l[1]);
        assert_ne!(l[0], l[2]);
    }

    #[test]
    fn k_equals_n_costs_nothing() {
        let fit = kmedoids_fit(&line(&[4.0, -2.0, 7.5, 1.0]), 4, &ClusterConfig::default()).unwrap();
        assert_eq!(fit.cost, 0.0);
    }

    #[test]
    fn duplicates_share_cluster() {
        let a = kmedoids(&line(&[5.0, 5.0, 0.0, 0.0, 0.0]), 2, &ClusterConfig::default()).unwrap();
        assert_eq!(a.labels()[0], a.labels()[1]);
        assert_eq!(a.labels()[2], a.labels()[3]);
        assert_eq!(a.labels()[3], a.labels()[4]);
    }

    #[test]
    fn swaps_never_increase_cost() {
        let pts = [0.0, 0.4, 3.0, 3.3, 3.9, 8.0, 8.8, 12.0, 20.0];
        let single = ClusterConfig { restarts: 1, ..ClusterConfig::default() };
        let fit = kmedoids_fit(&line(&pts), 3, &single).unwrap();
        let mut prev = fit.build_cost;
        for &c in &fit.swap_costs {
            assert!(c <= prev);
            prev = c;
        }
        assert!(fit.cost <= fit.build_cost);
    }

    #[test]
    fn restarts_keep_the_cheapest_run() {
        let pts = [0.0, 0.4, 3.0, 3.3, 3.9, 8.0, 8.8, 12.0, 20.0];
        let cfg = ClusterConfig { seed: 4, ..ClusterConfig::default() };
        let fit = kmedoids_fit(&line(&pts), 3, &cfg).unwrap();
        assert_eq!(fit.restart_costs.len(), cfg.restarts);
        let min = fit.restart_costs.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(fit.cost, min);
        assert!(fit.cost <= fit.build_cost);
        assert_eq!(fit, kmedoids_fit(&line(&pts), 3, &cfg).unwrap());
    }
}
