//! Independent reference implementations used by the integration tests.
//!
//! Everything here is written the slow, obvious way and shares no code with
//! the library beyond the input types.

#![allow(dead_code)]

use mibag_core::cluster::Linkage;
use mibag_core::{Bag, DistanceMatrix};
use rand::{RngExt, SeedableRng};
use rand_pcg::Pcg64;

pub fn rng(seed: u64) -> Pcg64 {
    Pcg64::seed_from_u64(seed)
}

pub fn random_bag(rng: &mut Pcg64, id: &str, m: usize, d: usize) -> Bag {
    let values: Vec<f32> = (0..m * d).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    Bag::new(id, values, d, None, None).unwrap()
}

pub fn instance_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let diff = x as f64 - y as f64;
            diff * diff
        })
        .sum::<f64>()
        .sqrt()
}

/// All instance-pair distances, `[m][n]`.
pub fn all_pairs(a: &Bag, b: &Bag) -> Vec<Vec<f64>> {
    a.instances()
        .map(|x| b.instances().map(|y| instance_distance(x, y)).collect())
        .collect()
}

fn directed(table: &[Vec<f64>], reduce_max: bool) -> f64 {
    let minima: Vec<f64> = table.iter().map(|row| row.iter().cloned().fold(f64::INFINITY, f64::min)).collect();
    if reduce_max {
        minima.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    } else {
        minima.iter().sum::<f64>() / minima.len() as f64
    }
}

fn transpose(t: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..t[0].len()).map(|c| t.iter().map(|r| r[c]).collect()).collect()
}

/// Directed max-min distance from `a` to `b`.
pub fn directed_maxmin(a: &Bag, b: &Bag) -> f64 {
    directed(&all_pairs(a, b), true)
}

/// The six Hausdorff formulations, by their library names.
pub fn hausdorff(a: &Bag, b: &Bag, name: &str) -> f64 {
    let t = all_pairs(a, b);
    let back = transpose(&t);
    let count = (t.len() * t[0].len()) as f64;
    match name {
        "meanmean" => t.iter().flatten().sum::<f64>() / count,
        "maxmin-max" => directed(&t, true).max(directed(&back, true)),
        "maxmin-mean" => 0.5 * (directed(&t, true) + directed(&back, true)),
        "minmin" => t.iter().flatten().cloned().fold(f64::INFINITY, f64::min),
        "meanmin-max" => directed(&t, false).max(directed(&back, false)),
        "meanmin-mean" => 0.5 * (directed(&t, false) + directed(&back, false)),
        other => panic!("unknown variant {other}"),
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Minimum assignment cost over every permutation of a square matrix.
pub fn brute_assignment(cost: &[Vec<f64>]) -> f64 {
    permutations(cost.len())
        .iter()
        .map(|p| p.iter().enumerate().map(|(r, &c)| cost[r][c]).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

fn joint_counts(truth: &[usize], pred: &[usize]) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let kt = truth.iter().max().unwrap() + 1;
    let kp = pred.iter().max().unwrap() + 1;
    let mut joint = vec![vec![0.0; kp]; kt];
    for (&t, &p) in truth.iter().zip(pred) {
        joint[t][p] += 1.0;
    }
    let rows = joint.iter().map(|r| r.iter().sum()).collect();
    let cols = (0..kp).map(|c| joint.iter().map(|r| r[c]).sum()).collect();
    (joint, rows, cols)
}

fn shannon(counts: impl Iterator<Item = f64>, n: f64) -> f64 {
    counts.filter(|&c| c > 0.0).map(|c| -(c / n) * (c / n).ln()).sum()
}

/// NMI via `I = H(T) + H(P) - H(T, P)`.
pub fn nmi(truth: &[usize], pred: &[usize], arithmetic: bool) -> f64 {
    let n = truth.len() as f64;
    let (joint, rows, cols) = joint_counts(truth, pred);
    let ht = shannon(rows.into_iter(), n);
    let hp = shannon(cols.into_iter(), n);
    let hj = shannon(joint.into_iter().flatten(), n);
    if ht == 0.0 || hp == 0.0 {
        return if ht == 0.0 && hp == 0.0 { 1.0 } else { 0.0 };
    }
    let mi = ht + hp - hj;
    if arithmetic {
        mi / (0.5 * (ht + hp))
    } else {
        mi / (ht * hp).sqrt()
    }
}

/// ARI from the four pair categories, enumerating every pair.
pub fn ari(truth: &[usize], pred: &[usize]) -> f64 {
    let (mut n11, mut n10, mut n01, mut n00) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..truth.len() {
        for j in (i + 1)..truth.len() {
            match (truth[i] == truth[j], pred[i] == pred[j]) {
                (true, true) => n11 += 1.0,
                (true, false) => n10 += 1.0,
                (false, true) => n01 += 1.0,
                (false, false) => n00 += 1.0,
            }
        }
    }
    let denom = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11);
    if denom == 0.0 {
        return 1.0;
    }
    2.0 * (n00 * n11 - n01 * n10) / denom
}

/// `P(score_pos > score_neg) + P(tie) / 2` over every positive/negative pair.
pub fn pair_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if positive[i] && !positive[j] {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

/// Agglomeration that recomputes every cluster distance from the members.
/// Returns `(left, right, height)` per merge, clusters named by their
/// smallest member.
pub fn agglomerate(d: &DistanceMatrix, method: Linkage) -> Vec<(usize, usize, f64)> {
    let mut clusters: Vec<Vec<usize>> = (0..d.n()).map(|i| vec![i]).collect();
    let mut merges = Vec::new();
    while clusters.len() > 1 {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let value = linkage_value(d, &clusters[a], &clusters[b], method);
                if best.is_none_or(|(_, _, v)| value < v) {
                    best = Some((a, b, value));
                }
            }
        }
        let (a, b, value) = best.unwrap();
        let right = clusters.remove(b);
        let left_id = clusters[a][0];
        let right_id = right[0];
        clusters[a].extend(right);
        clusters[a].sort_unstable();
        let height = if method == Linkage::Ward { value.max(0.0).sqrt() } else { value };
        merges.push((left_id.min(right_id), left_id.max(right_id), height));
    }
    merges
}

fn linkage_value(d: &DistanceMatrix, a: &[usize], b: &[usize], method: Linkage) -> f64 {
    let cross: Vec<f64> = a.iter().flat_map(|&i| b.iter().map(move |&j| d.get(i, j))).collect();
    match method {
        Linkage::Single => cross.iter().cloned().fold(f64::INFINITY, f64::min),
        Linkage::Complete => cross.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        Linkage::Average => cross.iter().sum::<f64>() / cross.len() as f64,
        Linkage::Ward => {
            // increase in within-cluster squared error, from pairwise squares
            let (na, nb) = (a.len() as f64, b.len() as f64);
            let sq = |xs: &[usize], ys: &[usize]| -> f64 {
                xs.iter().flat_map(|&i| ys.iter().map(move |&j| d.get(i, j).powi(2))).sum()
            };
            let sab = sq(a, b);
            let saa = sq(a, a);
            let sbb = sq(b, b);
            na * nb / (na + nb) * (2.0 * sab / (na * nb) - saa / (na * na) - sbb / (nb * nb))
        }
    }
}

/// Smallest k-means objective over every labeling into at most `k` groups.
pub fn best_inertia(points: &[Vec<f64>], k: usize) -> f64 {
    let n = points.len();
    let mut labels = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        let mut total = 0.0;
        for c in 0..k {
            let members: Vec<&Vec<f64>> = points.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
            if members.is_empty() {
                continue;
            }
            let dim = members[0].len();
            let centroid: Vec<f64> =
                (0..dim).map(|a| members.iter().map(|p| p[a]).sum::<f64>() / members.len() as f64).collect();
            total += members
                .iter()
                .map(|p| p.iter().zip(&centroid).map(|(x, c)| (x - c).powi(2)).sum::<f64>())
                .sum::<f64>();
        }
        best = best.min(total);
        let mut pos = 0;
        loop {
            if pos == n {
                return best;
            }
            labels[pos] += 1;
            if labels[pos] < k {
                break;
            }
            labels[pos] = 0;
            pos += 1;
        }
    }
}

/// Smallest medoid cost over every medoid set of size `k`.
pub fn best_medoid_cost(d: &DistanceMatrix, k: usize) -> f64 {
    fn subsets(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            subsets(n, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut all = Vec::new();
    subsets(d.n(), k, 0, &mut Vec::new(), &mut all);
    all.iter()
        .map(|medoids| {
            (0..d.n())
                .map(|i| medoids.iter().map(|&m| d.get(i, m)).fold(f64::INFINITY, f64::min))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Euclidean distance matrix of plain points.
pub fn point_distances(points: &[Vec<f64>]) -> DistanceMatrix {
    let n = points.len();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            v[i * n + j] = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        }
    }
    DistanceMatrix::new(n, v, "points").unwrap()
}

pub fn random_points(rng: &mut Pcg64, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}
