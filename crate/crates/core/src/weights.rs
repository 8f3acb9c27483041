//! Instance weight vectors: which patches of a bag matter for its distance
//! to other bags.
//!
//! Soft weights turn a per-instance score into a distribution with a
//! temperature-scaled softmax. Scores come from nearest-instance distances,
//! either to the other bags of the dataset (unsupervised) or to a pooled set
//! of labeled-normal instances (semi-supervised). Instances that look like
//! something seen elsewhere get low scores and therefore low weight.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index;
use rand_pcg::Pcg64;

use crate::bag::{Bag, Dataset};
use crate::error::{Error, Result};
use crate::pairwise::{self, PreparedBags};

/// Tolerance on the simplex constraint of a [`WeightVector`].
pub const SIMPLEX_TOLERANCE: f64 = 1e-6;

/// Default softmax temperature for unit-norm embeddings.
pub const DEFAULT_TAU: f64 = 0.1;

/// A probability vector over the instances of one bag.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightVector {
    bag_id: String,
    values: Vec<f64>,
}

impl WeightVector {
    /// Validates nonnegativity, finiteness, and unit sum.
    pub fn new(bag_id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidWeights("empty weight vector"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidWeights("weights must be finite and nonnegative"));
        }
        let sum: f64 = values.iter().sum();
        if libm::fabs(sum - 1.0) > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidWeights("weights must sum to 1"));
        }
        Ok(Self {
            bag_id: bag_id.into(),
            values,
        })
    }

    fn unchecked(bag_id: &str, values: Vec<f64>) -> Self {
        debug_assert!(Self::new(bag_id, values.clone()).is_ok());
        Self {
            bag_id: bag_id.into(),
            values,
        }
    }

    pub fn uniform(bag_id: impl Into<String>, m: usize) -> Self {
        let w = 1.0 / m as f64;
        Self {
            bag_id: bag_id.into(),
            values: alloc::vec![w; m],
        }
    }

    pub fn bag_id(&self) -> &str {
        &self.bag_id
    }

    pub fn with_bag_id(mut self, bag_id: impl Into<String>) -> Self {
        self.bag_id = bag_id.into();
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Parameters shared by the score-based weighting schemes.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightConfig {
    /// Softmax temperature.
    pub tau: f64,
    /// Number of instances kept by the top-k schemes.
    pub k: Option<usize>,
    /// Number of other bags sampled per bag when scoring without supervision.
    pub subsample_size: Option<usize>,
    pub seed: u64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            k: None,
            subsample_size: None,
            seed: 0,
        }
    }
}

impl WeightConfig {
    fn check_tau(&self) -> Result<()> {
        check_tau(self.tau)
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidTemperature(tau))
    }
}

/// How per-partner nearest distances are pooled into one score per instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Aggregator {
    #[default]
    Mean,
    Max,
    Min,
}

pub fn uniform_weights(bag: &Bag) -> WeightVector {
    WeightVector::uniform(bag.id(), bag.len())
}

/// For each instance of `bag_i`, the distance to its nearest instance in
/// `bag_j`.
pub fn min_distance_profile(bag_i: &Bag, bag_j: &Bag) -> Result<Vec<f64>> {
    if bag_i.dim() != bag_j.dim() {
        return Err(Error::DimensionMismatch {
            id: bag_j.id().into(),
            expected: bag_i.dim(),
            found: bag_j.dim(),
        });
    }
    let table = pair_table(bag_i, bag_j);
    Ok(pairwise::row_minima(&table, bag_j.len()))
}

/// Softmax of `scores / tau`, shifted by the maximum score.
pub fn softmax(scores: &[f64], tau: f64) -> Result<Vec<f64>> {
    check_tau(tau)?;
    if scores.is_empty() {
        return Err(Error::InvalidWeights("empty score vector"));
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = scores.iter().map(|s| libm::exp((s - max) / tau)).collect();
    let total: f64 = out.iter().sum();
    for v in &mut out {
        *v /= total;
    }
    Ok(out)
}

/// Indices of the other bags bag `i` is scored against, ascending.
///
/// With subsampling, the draw is keyed by `(seed, i)` so each bag's partner
/// set does not depend on evaluation order.
pub fn partner_indices(n: usize, i: usize, subsample_size: Option<usize>, seed: u64) -> Result<Vec<usize>> {
    if n < 2 {
        return Err(Error::TooFewBags { needed: 2, found: n });
    }
    let others = n - 1;
    let skip_self = |j: usize| if j >= i { j + 1 } else { j };
    match subsample_size {
        None => Ok((0..others).map(skip_self).collect()),
        Some(size) => {
            if size == 0 || size > others {
                return Err(Error::InvalidSubsample { size, max: others });
            }
            let mut rng = Pcg64::new(u128::from(seed), i as u128);
            let mut picked: Vec<usize> = index::sample(&mut rng, others, size)
                .into_iter()
                .map(skip_self)
                .collect();
            picked.sort_unstable();
            Ok(picked)
        }
    }
}

/// Unsupervised instance scores of bag `i`: the aggregated nearest distance
/// of each instance to the partner bags.
pub fn unsup_scores_for(
    prepared: &PreparedBags<'_>,
    i: usize,
    cfg: &WeightConfig,
    aggregator: Aggregator,
) -> Result<Vec<f64>> {
    let partners = partner_indices(prepared.len(), i, cfg.subsample_size, cfg.seed)?;
    let m = prepared.bag(i).len();
    let init = match aggregator {
        Aggregator::Mean => 0.0,
        Aggregator::Max => f64::NEG_INFINITY,
        Aggregator::Min => f64::INFINITY,
    };
    let mut scores = alloc::vec![init; m];
    for &j in &partners {
        let profile = prepared.min_profile(i, j);
        for (s, p) in scores.iter_mut().zip(profile) {
            *s = match aggregator {
                Aggregator::Mean => *s + p,
                Aggregator::Max => s.max(p),
                Aggregator::Min => s.min(p),
            };
        }
    }
    if aggregator == Aggregator::Mean {
        let count = partners.len() as f64;
        for s in &mut scores {
            *s /= count;
        }
    }
    Ok(scores)
}

/// Unsupervised instance scores for every bag of the dataset.
pub fn unsup_scores(dataset: &Dataset, cfg: &WeightConfig, aggregator: Aggregator) -> Result<Vec<Vec<f64>>> {
    let prepared = PreparedBags::new(dataset.bags());
    (0..dataset.len())
        .map(|i| unsup_scores_for(&prepared, i, cfg, aggregator))
        .collect()
}

/// Softmax weights over the unsupervised scores.
pub fn unsup_soft_weights(
    dataset: &Dataset,
    cfg: &WeightConfig,
    aggregator: Aggregator,
) -> Result<Vec<WeightVector>> {
    cfg.check_tau()?;
    let scores = unsup_scores(dataset, cfg, aggregator)?;
    soft_from_scores(dataset.bags(), &scores, cfg.tau)
}

/// Pooled labeled-normal instances with cached norms.
#[derive(Debug, Clone)]
pub struct ReferencePool<'a> {
    bags: &'a [Bag],
    norms: Vec<Vec<f64>>,
}

impl<'a> ReferencePool<'a> {
    pub fn new(bags: &'a [Bag]) -> Result<Self> {
        if bags.is_empty() {
            return Err(Error::MissingReference);
        }
        Ok(Self {
            bags,
            norms: bags.iter().map(pairwise::squared_norms).collect(),
        })
    }

    /// Distance of each instance of `prepared.bag(i)` to its nearest
    /// reference instance.
    pub fn scores_for(&self, prepared: &PreparedBags<'_>, i: usize) -> Result<Vec<f64>> {
        let bag = prepared.bag(i);
        let mut scores = alloc::vec![f64::INFINITY; bag.len()];
        for (reference, norms) in self.bags.iter().zip(&self.norms) {
            if reference.dim() != bag.dim() {
                return Err(Error::DimensionMismatch {
                    id: reference.id().into(),
                    expected: bag.dim(),
                    found: reference.dim(),
                });
            }
            let profile = prepared.min_profile_against(i, reference, norms);
            for (s, p) in scores.iter_mut().zip(profile) {
                *s = s.min(p);
            }
        }
        Ok(scores)
    }
}

/// Semi-supervised instance scores for every bag.
pub fn semi_scores(dataset: &Dataset) -> Result<Vec<Vec<f64>>> {
    let pool = ReferencePool::new(dataset.reference_bags())?;
    let prepared = PreparedBags::new(dataset.bags());
    (0..dataset.len()).map(|i| pool.scores_for(&prepared, i)).collect()
}

/// Softmax weights over distances to the pooled reference instances.
pub fn semi_soft_weights(dataset: &Dataset, cfg: &WeightConfig) -> Result<Vec<WeightVector>> {
    cfg.check_tau()?;
    let scores = semi_scores(dataset)?;
    soft_from_scores(dataset.bags(), &scores, cfg.tau)
}

/// Applies [`softmax`] to each bag's scores.
pub fn soft_from_scores(bags: &[Bag], scores: &[Vec<f64>], tau: f64) -> Result<Vec<WeightVector>> {
    bags.iter()
        .zip(scores)
        .map(|(bag, s)| Ok(WeightVector::unchecked(bag.id(), softmax(s, tau)?)))
        .collect()
}

/// Indices of the `k` largest scores; ties keep the lower index.
fn top_k_indices(scores: &[f64], k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > scores.len() {
        return Err(Error::InvalidTopK { k, m: scores.len() });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    Ok(order)
}

/// Weight `1/k` on the `k` highest-scoring instances.
pub fn hard_topk_weights(scores: &[f64], k: usize) -> Result<WeightVector> {
    let top = top_k_indices(scores, k)?;
    let mut values = alloc::vec![0.0; scores.len()];
    let w = 1.0 / k as f64;
    for i in top {
        values[i] = w;
    }
    Ok(WeightVector::unchecked("", values))
}

/// Softmax restricted to the `k` highest-scoring instances.
pub fn combined_topk_soft_weights(scores: &[f64], tau: f64, k: usize) -> Result<WeightVector> {
    check_tau(tau)?;
    let mut keep = alloc::vec![false; scores.len()];
    for i in top_k_indices(scores, k)? {
        keep[i] = true;
    }
    // same arithmetic as `softmax`, in index order, so k = M matches it bitwise
    let max = scores
        .iter()
        .zip(&keep)
        .filter(|(_, &kept)| kept)
        .fold(f64::NEG_INFINITY, |acc, (&s, _)| acc.max(s));
    let mut values: Vec<f64> = scores
        .iter()
        .zip(&keep)
        .map(|(s, &kept)| if kept { libm::exp((s - max) / tau) } else { 0.0 })
        .collect();
    let total: f64 = values.iter().sum();
    for v in &mut values {
        *v /= total;
    }
    Ok(WeightVector::unchecked("", values))
}

/// Normalizes a resized mask (row-major) into weights. An all-zero mask
/// yields uniform weights.
pub fn mask_weights(resized_mask: &[f64]) -> Result<WeightVector> {
    if resized_mask.is_empty() {
        return Err(Error::InvalidWeights("empty mask grid"));
    }
    if resized_mask.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidWeights("mask values must be finite and nonnegative"));
    }
    let total: f64 = resized_mask.iter().sum();
    if total == 0.0 {
        return Ok(WeightVector::uniform("", resized_mask.len()));
    }
    Ok(WeightVector::unchecked(
        "",
        resized_mask.iter().map(|v| v / total).collect(),
    ))
}

/// One-hot weights under which the weighted-average distance reproduces the
/// directed max-min Hausdorff distance from `bag_i` to `bag_j`.
pub fn maxh_onehot_weights(bag_i: &Bag, bag_j: &Bag) -> Result<(WeightVector, WeightVector)> {
    if bag_i.dim() != bag_j.dim() {
        return Err(Error::DimensionMismatch {
            id: bag_j.id().into(),
            expected: bag_i.dim(),
            found: bag_j.dim(),
        });
    }
    let table = pair_table(bag_i, bag_j);
    let cols = bag_j.len();
    let profile = pairwise::row_minima(&table, cols);
    let m_star = argmax(&profile);
    let n_star = argmin(&table[m_star * cols..(m_star + 1) * cols]);
    Ok((
        one_hot(bag_i.id(), bag_i.len(), m_star),
        one_hot(bag_j.id(), cols, n_star),
    ))
}

fn pair_table(a: &Bag, b: &Bag) -> Vec<f64> {
    pairwise::distance_table(a, &pairwise::squared_norms(a), b, &pairwise::squared_norms(b))
}

fn one_hot(id: &str, len: usize, at: usize) -> WeightVector {
    let mut values = alloc::vec![0.0; len];
    values[at] = 1.0;
    WeightVector::unchecked(id, values)
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}
