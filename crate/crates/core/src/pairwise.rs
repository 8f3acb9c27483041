//! Instance-pair Euclidean distances between two bags.
//!
//! Distances use `||a-b||^2 = ||a||^2 + ||b||^2 - 2 a.b` with per-instance
//! squared norms computed once per bag, clamped at zero before the root.

use alloc::vec::Vec;

use crate::bag::Bag;

#[inline]
pub(crate) fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| f64::from(x) * f64::from(y))
        .sum()
}

/// Squared L2 norm of every instance of `bag`.
pub fn squared_norms(bag: &Bag) -> Vec<f64> {
    bag.instances().map(|row| dot(row, row)).collect()
}

/// Euclidean distance between two 64-bit vectors.
#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    libm::sqrt(sq)
}

/// Row-major `M_a x M_b` table of instance distances.
pub(crate) fn distance_table(a: &Bag, a_norms: &[f64], b: &Bag, b_norms: &[f64]) -> Vec<f64> {
    let mut table = Vec::with_capacity(a.len() * b.len());
    for (row, &na) in a.instances().zip(a_norms) {
        for (col, &nb) in b.instances().zip(b_norms) {
            let sq = na + nb - 2.0 * dot(row, col);
            table.push(libm::sqrt(sq.max(0.0)));
        }
    }
    table
}

/// Bags paired with their cached instance norms.
#[derive(Debug, Clone)]
pub struct PreparedBags<'a> {
    bags: &'a [Bag],
    norms: Vec<Vec<f64>>,
}

impl<'a> PreparedBags<'a> {
    pub fn new(bags: &'a [Bag]) -> Self {
        Self {
            bags,
            norms: bags.iter().map(squared_norms).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    pub fn bag(&self, i: usize) -> &'a Bag {
        &self.bags[i]
    }

    pub fn bags(&self) -> &'a [Bag] {
        self.bags
    }

    pub(crate) fn table(&self, i: usize, j: usize) -> Vec<f64> {
        distance_table(&self.bags[i], &self.norms[i], &self.bags[j], &self.norms[j])
    }

    /// For each instance of bag `i`, its distance to the nearest instance
    /// of bag `j`.
    pub fn min_profile(&self, i: usize, j: usize) -> Vec<f64> {
        let table = self.table(i, j);
        row_minima(&table, self.bags[j].len())
    }

    /// Per-instance nearest distance from `bags[i]` to any instance of an
    /// external bag with precomputed norms.
    pub(crate) fn min_profile_against(&self, i: usize, other: &Bag, other_norms: &[f64]) -> Vec<f64> {
        let table = distance_table(&self.bags[i], &self.norms[i], other, other_norms);
        row_minima(&table, other.len())
    }
}

pub(crate) fn row_minima(table: &[f64], cols: usize) -> Vec<f64> {
    table
        .chunks_exact(cols)
        .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
        .collect()
}

pub(crate) fn col_minima(table: &[f64], cols: usize) -> Vec<f64> {
    let mut mins = alloc::vec![f64::INFINITY; cols];
    for row in table.chunks_exact(cols) {
        for (m, &v) in mins.iter_mut().zip(row) {
            if v < *m {
                *m = v;
            }
        }
    }
    mins
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_matches_direct_differences() {
        let a = Bag::from_instances("a", [[0.5f32, -1.0], [2.0, 3.0]]).unwrap();
        let b = Bag::from_instances("b", [[1.0f32, 1.0], [0.0, 0.0], [-2.0, 0.25]]).unwrap();
        let t = distance_table(&a, &squared_norms(&a), &b, &squared_norms(&b));
        for (m, ra) in a.instances().enumerate() {
            for (n, rb) in b.instances().enumerate() {
                let direct: f64 = ra
                    .iter()
                    .zip(rb)
                    .map(|(&x, &y)| (f64::from(x) - f64::from(y)).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!((t[m * 3 + n] - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn self_distance_is_exactly_zero() {
        let a = Bag::from_instances("a", [[0.1f32, 0.7, -0.3]]).unwrap();
        let n = squared_norms(&a);
        assert_eq!(distance_table(&a, &n, &a, &n), alloc::vec![0.0]);
    }
}
