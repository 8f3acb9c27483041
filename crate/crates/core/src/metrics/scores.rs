//! Contingency tables and the partition agreement scores built on them.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::hungarian::hungarian;
use crate::cluster::ClusterAssignment;
use crate::error::{Error, Result};

/// Counts of bags per (true label, predicted cluster).
///
/// Rows follow the first appearance of each label among the evaluated bags;
/// columns are cluster indices `0..K`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContingencyTable {
    labels: Vec<String>,
    counts: Vec<Vec<u64>>,
    clusters: usize,
}

impl ContingencyTable {
    /// Builds a table directly from counts. Rows must all have the same
    /// length and the total must be positive.
    pub fn from_counts(labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        if labels.len() != counts.len() {
            return Err(Error::LengthMismatch { expected: labels.len(), found: counts.len() });
        }
        let clusters = counts.first().map_or(0, Vec::len);
        if let Some(row) = counts.iter().find(|r| r.len() != clusters) {
            return Err(Error::LengthMismatch { expected: clusters, found: row.len() });
        }
        let table = Self { labels, counts, clusters };
        if table.total() == 0 {
            return Err(Error::EmptyEvaluation);
        }
        Ok(table)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.clusters).map(|c| self.counts.iter().map(|r| r[c]).sum()).collect()
    }
}

/// Cross-tabulates truth against predictions, skipping bags whose label is
/// in `exclude`.
pub fn contingency(truth: &[Option<&str>], pred: &ClusterAssignment, exclude: &[&str]) -> Result<ContingencyTable> {
    if truth.len() != pred.len() {
        return Err(Error::LengthMismatch { expected: truth.len(), found: pred.len() });
    }
    let mut labels: Vec<String> = Vec::new();
    let mut counts: Vec<Vec<u64>> = Vec::new();
    for (index, (t, &p)) in truth.iter().zip(pred.labels()).enumerate() {
        let t = t.ok_or(Error::UnlabeledBag { index })?;
        if exclude.contains(&t) {
            continue;
        }
        let row = match labels.iter().position(|l| l == t) {
            Some(r) => r,
            None => {
                labels.push(t.to_string());
                counts.push(alloc::vec![0; pred.k()]);
                counts.len() - 1
            }
        };
        counts[row][p] += 1;
    }
    if labels.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    Ok(ContingencyTable {
        labels,
        counts,
        clusters: pred.k(),
    })
}

/// How mutual information is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum NmiNormalization {
    /// `2 I / (H(T) + H(P))`.
    #[default]
    Arithmetic,
    /// `I / sqrt(H(T) H(P))`.
    Geometric,
}

fn entropy(sums: &[u64], total: f64) -> f64 {
    sums.iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / total;
            -p * libm::log(p)
        })
        .sum()
}

/// Normalized mutual information with natural logarithms.
///
/// If either partition has zero entropy the score is 1 when both do and 0
/// otherwise.
pub fn nmi(table: &ContingencyTable, norm: NmiNormalization) -> f64 {
    let total = table.total() as f64;
    let rows = table.row_sums();
    let cols = table.col_sums();
    let ht = entropy(&rows, total);
    let hp = entropy(&cols, total);
    if ht == 0.0 || hp == 0.0 {
        return if ht == hp { 1.0 } else { 0.0 };
    }
    let mut mi = 0.0;
    for (r, row) in table.counts.iter().enumerate() {
        for (c, &nij) in row.iter().enumerate() {
            if nij == 0 {
                continue;
            }
            let nij = nij as f64;
            mi += nij / total * libm::log(nij * total / (rows[r] as f64 * cols[c] as f64));
        }
    }
    let denom = match norm {
        NmiNormalization::Arithmetic => 0.5 * (ht + hp),
        NmiNormalization::Geometric => libm::sqrt(ht * hp),
    };
    (mi.max(0.0) / denom).clamp(0.0, 1.0)
}

fn pairs(x: u64) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index. Returns 1 when the chance-corrected denominator
/// vanishes, which only happens for trivially identical partitions.
pub fn ari(table: &ContingencyTable) -> f64 {
    let total = table.total();
    let all = pairs(total);
    if all == 0.0 {
        return 1.0;
    }
    let index: f64 = table.counts.iter().flatten().map(|&n| pairs(n)).sum();
    let a: f64 = table.row_sums().into_iter().map(pairs).sum();
    let b: f64 = table.col_sums().into_iter().map(pairs).sum();
    let expected = a * b / all;
    let max = 0.5 * (a + b);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

/// How per-label F1 scores are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum F1Average {
    /// Unweighted mean over true labels.
    #[default]
    Macro,
    /// Matched bags over all evaluated bags.
    Micro,
}

/// Label-to-cluster matching that maximizes the number of matched bags.
/// Among matchings with the same count the one with the largest summed
/// per-pair F1 wins, so the macro F1 does not depend on label order.
/// Returns `(row, cluster)` pairs; labels left without a cluster are absent.
pub fn best_matching(table: &ContingencyTable) -> Vec<(usize, usize)> {
    let rows = table.row_sums();
    let cols = table.col_sums();
    // the F1 sum over a matching is at most the number of pairs, so scaling
    // counts past it keeps the count comparison first
    let scale = (rows.len().min(cols.len()) + 1) as f64;
    let cost: Vec<Vec<f64>> = table
        .counts
        .iter()
        .enumerate()
        .map(|(r, row)| {
            row.iter()
                .enumerate()
                .map(|(c, &hit)| -(hit as f64 * scale + pair_f1(hit, rows[r], cols[c])))
                .collect()
        })
        .collect();
    hungarian(&cost).expect("counts are finite")
}

fn pair_f1(hit: u64, row: u64, col: u64) -> f64 {
    if hit == 0 {
        return 0.0;
    }
    2.0 * hit as f64 / (row + col) as f64
}

/// F1 after matching true labels to clusters one-to-one.
pub fn matched_f1(table: &ContingencyTable, average: F1Average) -> f64 {
    let matching = best_matching(table);
    let total = table.total() as f64;
    match average {
        F1Average::Micro => matching.iter().map(|&(r, c)| table.counts[r][c] as f64).sum::<f64>() / total,
        F1Average::Macro => {
            let rows = table.row_sums();
            let cols = table.col_sums();
            let sum: f64 = matching.iter().map(|&(r, c)| pair_f1(table.counts[r][c], rows[r], cols[c])).sum();
            sum / table.labels.len() as f64
        }
    }
}

/// Options for [`evaluate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalOptions {
    pub nmi: NmiNormalization,
    pub f1: F1Average,
}

/// Agreement between a clustering and the ground truth.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvaluationReport {
    pub nmi: f64,
    pub ari: f64,
    pub f1: f64,
    /// `(true label, cluster)` pairs chosen by the matching.
    pub matching: Vec<(String, usize)>,
    pub excluded_labels: Vec<String>,
    pub n_evaluated: usize,
    pub n_excluded: usize,
    pub options: EvalOptions,
}

/// Computes NMI, ARI and matched F1 over the non-excluded bags.
pub fn evaluate(
    truth: &[Option<&str>],
    pred: &ClusterAssignment,
    exclude: &[&str],
    options: EvalOptions,
) -> Result<EvaluationReport> {
    let table = contingency(truth, pred, exclude)?;
    let n_evaluated = table.total() as usize;
    let matching = best_matching(&table)
        .into_iter()
        .map(|(r, c)| (table.labels[r].clone(), c))
        .collect();
    Ok(EvaluationReport {
        nmi: nmi(&table, options.nmi),
        ari: ari(&table),
        f1: matched_f1(&table, options.f1),
        matching,
        excluded_labels: exclude.iter().map(|s| s.to_string()).collect(),
        n_evaluated,
        n_excluded: truth.len() - n_evaluated,
        options,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn table(truth: &[&str], pred: &[usize]) -> ContingencyTable {
        let k = pred.iter().max().unwrap() + 1;
        let t: Vec<Option<&str>> = truth.iter().map(|&s| Some(s)).collect();
        contingency(&t, &ClusterAssignment::new(pred.to_vec(), k).unwrap(), &[]).unwrap()
    }

    #[test]
    fn contingency_counts_and_exclusion() {
        let t = table(&["a", "a", "b"], &[0, 0, 1]);
        assert_eq!(t.counts(), &[vec![2, 0], vec![0, 1]]);
        let truth = [Some("a"), Some("combined"), Some("b"), Some("combined")];
        let pred = ClusterAssignment::new(vec![0, 1, 1, 0], 2).unwrap();
        assert_eq!(contingency(&truth, &pred, &["combined"]).unwrap().total(), 2);
        let only = [Some("combined"), Some("combined")];
        let pred = ClusterAssignment::new(vec![0, 1], 2).unwrap();
        assert_eq!(contingency(&only, &pred, &["combined"]).unwrap_err(), Error::EmptyEvaluation);
        let missing = [Some("a"), None];
        assert_eq!(contingency(&missing, &pred, &[]).unwrap_err(), Error::UnlabeledBag { index: 1 });
    }

    #[test]
    fn nmi_examples() {
        assert_eq!(nmi(&table(&["a", "a", "b", "b"], &[1, 1, 0, 0]), NmiNormalization::default()), 1.0);
        assert!(nmi(&table(&["a", "a", "b", "b"], &[0, 1, 0, 1]), NmiNormalization::default()).abs() < 1e-12);
        let t = table(&["a", "a", "b", "b"], &[0, 0, 0, 1]);
        assert!((nmi(&t, NmiNormalization::Arithmetic) - 0.3437).abs() < 5e-5);
        assert!((nmi(&t, NmiNormalization::Geometric) - 0.3456).abs() < 5e-5);
    }

    #[test]
    fn ari_examples() {
        assert_eq!(ari(&table(&["a", "a", "b", "b"], &[0, 0, 1, 1])), 1.0);
        assert_eq!(ari(&table(&["a", "a", "b", "b"], &[0, 0, 0, 0])), 0.0);
        // pair counting: index 1, a = 2, b = 3, expected 1, max 2.5
        assert!(ari(&table(&["a", "a", "b", "b"], &[0, 0, 0, 1])).abs() < 1e-12);
    }

    #[test]
    fn count_ties_pick_the_better_f1() {
        let names = |a: &str, b: &str| vec![a.to_string(), b.to_string()];
        let t = ContingencyTable::from_counts(names("a", "b"), vec![vec![2, 2, 0], vec![0, 1, 1]]).unwrap();
        assert_eq!(best_matching(&t), vec![(0, 0), (1, 2)]);
        assert!((matched_f1(&t, F1Average::Macro) - 2.0 / 3.0).abs() < 1e-12);
        let swapped = ContingencyTable::from_counts(names("b", "a"), vec![vec![0, 1, 1], vec![2, 2, 0]]).unwrap();
        assert_eq!(matched_f1(&swapped, F1Average::Macro), matched_f1(&t, F1Average::Macro));
    }

    #[test]
    fn f1_examples() {
        assert_eq!(matched_f1(&table(&["a", "b"], &[1, 0]), F1Average::Macro), 1.0);
        let t = table(&["a", "a", "b", "b"], &[0, 0, 0, 1]);
        assert!((matched_f1(&t, F1Average::Macro) - 0.7333333333333333).abs() < 1e-12);
        assert_eq!(matched_f1(&t, F1Average::Micro), 0.75);
        // three labels, two clusters: one label is unmatched and scores 0
        let t = table(&["a", "b", "c"], &[0, 1, 1]);
        assert!((matched_f1(&t, F1Average::Macro) - (1.0 + 2.0 / 3.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn report_fields() {
        let truth = [Some("a"), Some("a"), Some("good"), Some("b")];
        let pred = ClusterAssignment::new(vec![0, 0, 1, 1], 2).unwrap();
        let r = evaluate(&truth, &pred, &["good"], EvalOptions::default()).unwrap();
        assert_eq!(r.n_evaluated, 3);
        assert_eq!(r.n_excluded, 1);
        assert_eq!(r.matching, vec![("a".into(), 0), ("b".into(), 1)]);
        assert_eq!((r.nmi, r.ari, r.f1), (1.0, 1.0, 1.0));
    }
}
