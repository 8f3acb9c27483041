//! Minimum-cost assignment with row/column potentials, O(n^3).

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Optimal assignment for a (possibly rectangular) cost matrix.
///
/// Returns one `(row, col)` pair per matched row, sorted by row. When the
/// matrix is rectangular the smaller side is fully matched.
pub fn hungarian(cost: &[Vec<f64>]) -> Result<Vec<(usize, usize)>> {
    let rows = cost.len();
    if rows == 0 {
        return Ok(Vec::new());
    }
    let cols = cost[0].len();
    for (r, row) in cost.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::LengthMismatch { expected: cols, found: row.len() });
        }
        if let Some(c) = row.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteCost { row: r, col: c });
        }
    }
    if cols == 0 {
        return Ok(Vec::new());
    }
    let n = rows.max(cols);
    // padding with a constant leaves the optimum over real cells unchanged
    let at = |r: usize, c: usize| if r < rows && c < cols { cost[r][c] } else { 0.0 };

    // 1-based arrays; column 0 is the virtual start column
    let mut u = alloc::vec![0.0; n + 1];
    let mut v = alloc::vec![0.0; n + 1];
    let mut owner = alloc::vec![0usize; n + 1];
    let mut way = alloc::vec![0usize; n + 1];
    for r in 1..=n {
        owner[0] = r;
        let mut col0 = 0;
        let mut minv = alloc::vec![f64::INFINITY; n + 1];
        let mut used = alloc::vec![false; n + 1];
        loop {
            used[col0] = true;
            let r0 = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for c in 1..=n {
                if used[c] {
                    continue;
                }
                let reduced = at(r0 - 1, c - 1) - u[r0] - v[c];
                if reduced < minv[c] {
                    minv[c] = reduced;
                    way[c] = col0;
                }
                if minv[c] < delta {
                    delta = minv[c];
                    col1 = c;
                }
            }
            for c in 0..=n {
                if used[c] {
                    u[owner[c]] += delta;
                    v[c] -= delta;
                } else {
                    minv[c] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            owner[col0] = owner[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = (1..=n)
        .filter(|&c| owner[c] != 0)
        .map(|c| (owner[c] - 1, c - 1))
        .filter(|&(r, c)| r < rows && c < cols)
        .collect();
    pairs.sort_unstable();
    Ok(pairs)
}

/// Total cost of an assignment.
pub fn assignment_cost(cost: &[Vec<f64>], pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(r, c)| cost[r][c]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn small_examples() {
        let c = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        let p = hungarian(&c).unwrap();
        assert_eq!(p, vec![(0, 0), (1, 1)]);
        assert_eq!(assignment_cost(&c, &p), 2.0);
        assert_eq!(hungarian(&[vec![7.0]]).unwrap(), vec![(0, 0)]);
        let id = vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        assert_eq!(assignment_cost(&id, &hungarian(&id).unwrap()), 0.0);
    }

    #[test]
    fn rectangular_inputs() {
        let wide = vec![vec![5.0, 1.0, 9.0]];
        assert_eq!(hungarian(&wide).unwrap(), vec![(0, 1)]);
        let tall = vec![vec![4.0], vec![2.0], vec![8.0]];
        assert_eq!(hungarian(&tall).unwrap(), vec![(1, 0)]);
    }

    #[test]
    fn rejects_non_finite() {
        let c = vec![vec![1.0, f64::NAN], vec![0.0, 1.0]];
        assert_eq!(hungarian(&c).unwrap_err(), Error::NonFiniteCost { row: 0, col: 1 });
    }
}
