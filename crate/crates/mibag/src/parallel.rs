//! Multi-threaded drivers over the core kernels.
//!
//! Work is split per bag (weights) or per row of the upper triangle
//! (distances). Each value is computed by the same sequential kernel as in
//! the core crate, so results are bit-identical to the single-threaded path
//! whatever the thread count.

use mibag_core::distances::{aggregate_all, hausdorff_pair};
use mibag_core::pairwise::{euclidean, PreparedBags};
use mibag_core::weights::{soft_from_scores, unsup_scores_for, ReferencePool};
use mibag_core::{Aggregator, Bag, Dataset, DistanceMatrix, Measure, WeightConfig, WeightVector};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "MIBAG_THREADS";

/// Runs `f` on a pool sized by `MIBAG_THREADS`, or rayon's default.
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let n: usize = value
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {value:?}")))?;
        if n == 0 {
            return Err(Error::Config(format!("{THREADS_ENV} must be at least 1")));
        }
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?.install(f))
}

/// Unsupervised scores for every bag, one task per bag.
pub fn par_unsup_scores(dataset: &Dataset, cfg: &WeightConfig, aggregator: Aggregator) -> Result<Vec<Vec<f64>>> {
    let prepared = PreparedBags::new(dataset.bags());
    (0..dataset.len())
        .into_par_iter()
        .map(|i| unsup_scores_for(&prepared, i, cfg, aggregator))
        .collect::<mibag_core::Result<_>>()
        .map_err(Error::from)
}

/// Distances to the pooled reference instances for every bag.
pub fn par_semi_scores(dataset: &Dataset) -> Result<Vec<Vec<f64>>> {
    let pool = ReferencePool::new(dataset.reference_bags())?;
    let prepared = PreparedBags::new(dataset.bags());
    (0..dataset.len())
        .into_par_iter()
        .map(|i| pool.scores_for(&prepared, i))
        .collect::<mibag_core::Result<_>>()
        .map_err(Error::from)
}

pub fn par_unsup_soft_weights(
    dataset: &Dataset,
    cfg: &WeightConfig,
    aggregator: Aggregator,
) -> Result<Vec<WeightVector>> {
    let scores = par_unsup_scores(dataset, cfg, aggregator)?;
    Ok(soft_from_scores(dataset.bags(), &scores, cfg.tau)?)
}

pub fn par_semi_soft_weights(dataset: &Dataset, cfg: &WeightConfig) -> Result<Vec<WeightVector>> {
    let scores = par_semi_scores(dataset)?;
    Ok(soft_from_scores(dataset.bags(), &scores, cfg.tau)?)
}

/// Pairwise bag distances with rows of the upper triangle in parallel.
pub fn par_distance_matrix(bags: &[Bag], measure: Measure<'_>) -> Result<DistanceMatrix> {
    if let Some(first) = bags.first() {
        if let Some(bag) = bags.iter().find(|b| b.dim() != first.dim()) {
            return Err(mibag_core::Error::DimensionMismatch {
                id: bag.id().to_string(),
                expected: first.dim(),
                found: bag.dim(),
            }
            .into());
        }
    }
    let n = bags.len();
    let rows: Vec<Vec<f64>> = match measure {
        Measure::WeightedAverage(weights) => {
            let means = aggregate_all(bags, weights)?;
            (0..n)
                .into_par_iter()
                .map(|i| ((i + 1)..n).map(|j| euclidean(&means[i], &means[j])).collect())
                .collect()
        }
        Measure::Hausdorff(variant) => {
            let prepared = PreparedBags::new(bags);
            (0..n)
                .into_par_iter()
                .map(|i| ((i + 1)..n).map(|j| hausdorff_pair(&prepared, i, j, variant)).collect())
                .collect()
        }
    };
    let upper: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(DistanceMatrix::from_upper(n, &upper, measure.describe())?)
}
