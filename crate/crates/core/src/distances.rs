//! Bag-to-bag distances and distance matrices.
//!
//! The weighted-average distance aggregates each bag into one vector and
//! takes a single Euclidean norm. The Hausdorff family works on the full
//! instance-pair distance table of two bags.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::bag::{Bag, Dataset};
use crate::error::{Error, Result};
use crate::pairwise::{self, PreparedBags};
use crate::weights::WeightVector;

/// Symmetry tolerance accepted when importing a matrix.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// `sum_m alpha_m z_m`, accumulated in 64 bits.
pub fn aggregate(bag: &Bag, alpha: &WeightVector) -> Result<Vec<f64>> {
    if alpha.len() != bag.len() {
        return Err(Error::LengthMismatch {
            expected: bag.len(),
            found: alpha.len(),
        });
    }
    let mut out = alloc::vec![0.0f64; bag.dim()];
    for (row, &w) in bag.instances().zip(alpha.values()) {
        for (o, &z) in out.iter_mut().zip(row) {
            *o += w * f64::from(z);
        }
    }
    Ok(out)
}

/// Euclidean distance between the weighted averages of two bags.
pub fn wa_distance(bag_i: &Bag, alpha_i: &WeightVector, bag_j: &Bag, alpha_j: &WeightVector) -> Result<f64> {
    check_dims(bag_i, bag_j)?;
    let a = aggregate(bag_i, alpha_i)?;
    let b = aggregate(bag_j, alpha_j)?;
    Ok(pairwise::euclidean(&a, &b))
}

fn check_dims(a: &Bag, b: &Bag) -> Result<()> {
    if a.dim() == b.dim() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            id: b.id().into(),
            expected: a.dim(),
            found: b.dim(),
        })
    }
}

/// How instance distances are reduced in one direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum InnerAggregation {
    MaxMin,
    MinMin,
    MeanMin,
    MeanMean,
}

impl InnerAggregation {
    pub fn is_symmetric(self) -> bool {
        matches!(self, Self::MinMin | Self::MeanMean)
    }

    fn name(self) -> &'static str {
        match self {
            Self::MaxMin => "maxmin",
            Self::MinMin => "minmin",
            Self::MeanMin => "meanmin",
            Self::MeanMean => "meanmean",
        }
    }
}

/// How the two directed distances are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum OuterAggregation {
    Max,
    Mean,
    None,
}

/// A member of the Hausdorff family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HausdorffVariant {
    inner: InnerAggregation,
    outer: OuterAggregation,
}

impl HausdorffVariant {
    /// Maximum Hausdorff: max of the two directed max-min distances.
    pub const MAX: Self = Self::raw(InnerAggregation::MaxMin, OuterAggregation::Max);
    pub const MAX_AVG: Self = Self::raw(InnerAggregation::MaxMin, OuterAggregation::Mean);
    pub const MIN_MIN: Self = Self::raw(InnerAggregation::MinMin, OuterAggregation::None);
    pub const AVG_AVG: Self = Self::raw(InnerAggregation::MeanMean, OuterAggregation::None);
    pub const AVG_MIN_MAX: Self = Self::raw(InnerAggregation::MeanMin, OuterAggregation::Max);
    pub const AVG_MIN_MEAN: Self = Self::raw(InnerAggregation::MeanMin, OuterAggregation::Mean);

    pub const ALL: [Self; 6] = [
        Self::AVG_AVG,
        Self::MAX,
        Self::MAX_AVG,
        Self::MIN_MIN,
        Self::AVG_MIN_MAX,
        Self::AVG_MIN_MEAN,
    ];

    const fn raw(inner: InnerAggregation, outer: OuterAggregation) -> Self {
        Self { inner, outer }
    }

    /// `outer = None` is only valid for the symmetric inner reductions.
    pub fn new(inner: InnerAggregation, outer: OuterAggregation) -> Result<Self> {
        if outer == OuterAggregation::None && !inner.is_symmetric() {
            return Err(Error::InvalidVariant(
                "asymmetric inner reduction needs a max or mean outer reduction",
            ));
        }
        Ok(Self { inner, outer })
    }

    pub fn inner(self) -> InnerAggregation {
        self.inner
    }

    pub fn outer(self) -> OuterAggregation {
        self.outer
    }

    fn combine(self, forward: f64, backward: f64) -> f64 {
        match self.outer {
            OuterAggregation::Max => forward.max(backward),
            OuterAggregation::Mean => 0.5 * (forward + backward),
            OuterAggregation::None => forward,
        }
    }
}

impl fmt::Display for HausdorffVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.outer {
            OuterAggregation::None => f.write_str(self.inner.name()),
            OuterAggregation::Max => write!(f, "{}-max", self.inner.name()),
            OuterAggregation::Mean => write!(f, "{}-mean", self.inner.name()),
        }
    }
}

impl FromStr for HausdorffVariant {
    type Err = Error;

    /// Accepts `maxmin-max`, `maxmin-mean`, `meanmin-max`, `meanmin-mean`,
    /// `minmin`, `meanmean`, and the alias `maxh`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "maxh" {
            return Ok(Self::MAX);
        }
        let (inner, outer) = match s.split_once('-') {
            Some((i, o)) => (i, Some(o)),
            None => (s, None),
        };
        let inner = match inner {
            "maxmin" => InnerAggregation::MaxMin,
            "minmin" => InnerAggregation::MinMin,
            "meanmin" => InnerAggregation::MeanMin,
            "meanmean" => InnerAggregation::MeanMean,
            _ => return Err(Error::InvalidVariant("unknown inner reduction")),
        };
        let outer = match outer {
            None => OuterAggregation::None,
            Some("max") => OuterAggregation::Max,
            Some("mean") => OuterAggregation::Mean,
            Some(_) => return Err(Error::InvalidVariant("unknown outer reduction")),
        };
        Self::new(inner, outer)
    }
}

/// Reduces a row-major `rows x cols` distance table in the forward
/// direction (rows are instances of the first bag).
fn reduce_forward(table: &[f64], cols: usize, inner: InnerAggregation) -> f64 {
    match inner {
        InnerAggregation::MaxMin => pairwise::row_minima(table, cols)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max),
        InnerAggregation::MeanMin => mean(&pairwise::row_minima(table, cols)),
        InnerAggregation::MinMin => table.iter().copied().fold(f64::INFINITY, f64::min),
        InnerAggregation::MeanMean => mean(table),
    }
}

fn reduce_backward(table: &[f64], cols: usize, inner: InnerAggregation) -> f64 {
    match inner {
        InnerAggregation::MaxMin => pairwise::col_minima(table, cols)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max),
        InnerAggregation::MeanMin => mean(&pairwise::col_minima(table, cols)),
        InnerAggregation::MinMin | InnerAggregation::MeanMean => reduce_forward(table, cols, inner),
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Directed distance from `bag_i` to `bag_j` under the given inner reduction.
pub fn directed_hausdorff(bag_i: &Bag, bag_j: &Bag, inner: InnerAggregation) -> Result<f64> {
    check_dims(bag_i, bag_j)?;
    let table = pairwise::distance_table(
        bag_i,
        &pairwise::squared_norms(bag_i),
        bag_j,
        &pairwise::squared_norms(bag_j),
    );
    Ok(reduce_forward(&table, bag_j.len(), inner))
}

/// Symmetric Hausdorff-family distance.
pub fn hausdorff_distance(bag_i: &Bag, bag_j: &Bag, variant: HausdorffVariant) -> Result<f64> {
    check_dims(bag_i, bag_j)?;
    let table = pairwise::distance_table(
        bag_i,
        &pairwise::squared_norms(bag_i),
        bag_j,
        &pairwise::squared_norms(bag_j),
    );
    Ok(hausdorff_from_table(&table, bag_j.len(), variant))
}

fn hausdorff_from_table(table: &[f64], cols: usize, variant: HausdorffVariant) -> f64 {
    let forward = reduce_forward(table, cols, variant.inner);
    if variant.outer == OuterAggregation::None {
        return forward;
    }
    let backward = reduce_backward(table, cols, variant.inner);
    variant.combine(forward, backward)
}

/// Hausdorff distance between bags `i` and `j` of a prepared set.
pub fn hausdorff_pair(prepared: &PreparedBags<'_>, i: usize, j: usize, variant: HausdorffVariant) -> f64 {
    let table = prepared.table(i, j);
    hausdorff_from_table(&table, prepared.bag(j).len(), variant)
}

/// Which bag distance fills a [`DistanceMatrix`].
#[derive(Debug, Clone, Copy)]
pub enum Measure<'a> {
    /// Weighted-average distance with one weight vector per bag, in bag order.
    WeightedAverage(&'a [WeightVector]),
    Hausdorff(HausdorffVariant),
}

impl Measure<'_> {
    pub fn describe(&self) -> String {
        match self {
            Measure::WeightedAverage(_) => "wa".to_string(),
            Measure::Hausdorff(v) => format!("hausdorff:{v}"),
        }
    }
}

/// Work performed while building a distance matrix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounter {
    /// Instance-to-instance distance evaluations.
    pub instance_pairs: u64,
    /// `D`-dimensional norms between aggregated bag vectors.
    pub vector_norms: u64,
    /// Bag aggregations (one per bag for the weighted-average measure).
    pub aggregations: u64,
}

/// Symmetric `N x N` matrix of bag distances with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
    measure: String,
}

impl DistanceMatrix {
    /// Validates a full row-major matrix: finite, nonnegative, zero diagonal,
    /// symmetric within [`SYMMETRY_TOLERANCE`].
    pub fn new(n: usize, values: Vec<f64>, measure: impl Into<String>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::LengthMismatch {
                expected: n * n,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidDistanceMatrix("entries must be finite and nonnegative"));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::InvalidDistanceMatrix("diagonal must be zero"));
            }
            for j in (i + 1)..n {
                if libm::fabs(values[i * n + j] - values[j * n + i]) > SYMMETRY_TOLERANCE {
                    return Err(Error::InvalidDistanceMatrix("matrix is not symmetric"));
                }
            }
        }
        Ok(Self {
            n,
            values,
            measure: measure.into(),
        })
    }

    /// Builds a matrix from upper-triangle values listed in row-major order
    /// (`(0,1), (0,2), ..., (1,2), ...`).
    pub fn from_upper(n: usize, upper: &[f64], measure: impl Into<String>) -> Result<Self> {
        let expected = n * n.saturating_sub(1) / 2;
        if upper.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: upper.len(),
            });
        }
        let mut values = alloc::vec![0.0; n * n];
        let mut it = upper.iter();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = *it.next().expect("length checked");
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Self::new(n, values, measure)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn measure(&self) -> &str {
        &self.measure
    }

    /// Off-diagonal upper-triangle entries in row-major order.
    pub fn upper(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * self.n.saturating_sub(1) / 2);
        for i in 0..self.n {
            out.extend_from_slice(&self.row(i)[i + 1..]);
        }
        out
    }
}

/// Aggregated vectors of every bag under its weight vector.
pub fn aggregate_all(bags: &[Bag], weights: &[WeightVector]) -> Result<Vec<Vec<f64>>> {
    if weights.len() != bags.len() {
        let missing = bags.get(weights.len()).map(|b| b.id().into()).unwrap_or_default();
        return Err(Error::MissingWeights { id: missing });
    }
    bags.iter()
        .zip(weights)
        .map(|(bag, w)| {
            if w.bag_id() != bag.id() && !w.bag_id().is_empty() {
                return Err(Error::MissingWeights { id: bag.id().into() });
            }
            aggregate(bag, w)
        })
        .collect()
}

/// Pairwise distance matrix of the dataset's bags.
pub fn distance_matrix(dataset: &Dataset, measure: Measure<'_>) -> Result<DistanceMatrix> {
    distance_matrix_counted(dataset.bags(), measure, &mut OpCounter::default())
}

/// [`distance_matrix`] over a bag slice, recording the work done.
pub fn distance_matrix_counted(bags: &[Bag], measure: Measure<'_>, counter: &mut OpCounter) -> Result<DistanceMatrix> {
    if let Some(first) = bags.first() {
        for bag in bags {
            check_dims(first, bag)?;
        }
    }
    let n = bags.len();
    let mut upper = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    match measure {
        Measure::WeightedAverage(weights) => {
            let vectors = aggregate_all(bags, weights)?;
            counter.aggregations += n as u64;
            for i in 0..n {
                for j in (i + 1)..n {
                    upper.push(pairwise::euclidean(&vectors[i], &vectors[j]));
                    counter.vector_norms += 1;
                }
            }
        }
        Measure::Hausdorff(variant) => {
            let prepared = PreparedBags::new(bags);
            for i in 0..n {
                for j in (i + 1)..n {
                    upper.push(hausdorff_pair(&prepared, i, j, variant));
                    counter.instance_pairs += (bags[i].len() * bags[j].len()) as u64;
                }
            }
        }
    }
    DistanceMatrix::from_upper(n, &upper, measure.describe())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{maxh_onehot_weights, uniform_weights};
    use alloc::vec;

    fn bag1(id: &str, xs: &[f32]) -> Bag {
        Bag::from_instances(id, xs.iter().map(|x| [*x])).unwrap()
    }

    #[test]
    fn aggregate_examples() {
        let z = bag1("z", &[0.0, 2.0]);
        assert_eq!(aggregate(&z, &uniform_weights(&z)).unwrap(), vec![1.0]);
        let onehot = WeightVector::new("z", vec![0.0, 1.0]).unwrap();
        assert_eq!(aggregate(&z, &onehot).unwrap(), vec![2.0]);
        let z2 = Bag::from_instances("z2", [[1.0f32, 0.0], [0.0, 1.0]]).unwrap();
        let a = WeightVector::new("z2", vec![0.25, 0.75]).unwrap();
        assert_eq!(aggregate(&z2, &a).unwrap(), vec![0.25, 0.75]);
        let wrong = WeightVector::new("z", vec![1.0]).unwrap();
        assert!(matches!(aggregate(&z, &wrong), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn wa_distance_examples() {
        let zi = bag1("i", &[0.0, 2.0]);
        let zj = bag1("j", &[4.0]);
        let ui = uniform_weights(&zi);
        assert_eq!(wa_distance(&zi, &ui, &zi, &ui).unwrap(), 0.0);
        assert_eq!(wa_distance(&zi, &ui, &zj, &uniform_weights(&zj)).unwrap(), 3.0);

        let a = bag1("a", &[0.0, 1.0]);
        let b = bag1("b", &[0.0, 3.0]);
        let (wa, wb) = maxh_onehot_weights(&a, &b).unwrap();
        assert_eq!(wa_distance(&a, &wa, &b, &wb).unwrap(), 1.0);

        let two_d = Bag::from_instances("d", [[0.0f32, 0.0]]).unwrap();
        assert!(matches!(
            wa_distance(&zi, &ui, &two_d, &uniform_weights(&two_d)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn directed_examples() {
        let zi = bag1("i", &[0.0, 1.0]);
        let zj = bag1("j", &[0.0, 3.0]);
        assert_eq!(directed_hausdorff(&zi, &zj, InnerAggregation::MaxMin).unwrap(), 1.0);
        assert_eq!(directed_hausdorff(&zj, &zi, InnerAggregation::MaxMin).unwrap(), 2.0);
        assert_eq!(directed_hausdorff(&zi, &zi, InnerAggregation::MaxMin).unwrap(), 0.0);
        assert_eq!(directed_hausdorff(&zi, &zj, InnerAggregation::MeanMin).unwrap(), 0.5);
    }

    #[test]
    fn symmetric_examples() {
        let zi = bag1("i", &[0.0, 1.0]);
        let zj = bag1("j", &[0.0, 3.0]);
        assert_eq!(hausdorff_distance(&zi, &zj, HausdorffVariant::MAX).unwrap(), 2.0);
        assert_eq!(hausdorff_distance(&zi, &zj, HausdorffVariant::MAX_AVG).unwrap(), 1.5);
        assert_eq!(hausdorff_distance(&zi, &zj, HausdorffVariant::MIN_MIN).unwrap(), 0.0);
        for v in HausdorffVariant::ALL {
            assert_eq!(
                hausdorff_distance(&zi, &zj, v).unwrap(),
                hausdorff_distance(&zj, &zi, v).unwrap()
            );
        }
    }

    #[test]
    fn variant_parsing() {
        for v in HausdorffVariant::ALL {
            assert_eq!(v.to_string().parse::<HausdorffVariant>().unwrap(), v);
        }
        assert_eq!("maxh".parse::<HausdorffVariant>().unwrap(), HausdorffVariant::MAX);
        assert!("maxmin".parse::<HausdorffVariant>().is_err());
        assert!("meanmin".parse::<HausdorffVariant>().is_err());
        assert!("maxmin-median".parse::<HausdorffVariant>().is_err());
        assert!(HausdorffVariant::new(InnerAggregation::MaxMin, OuterAggregation::None).is_err());
    }

    #[test]
    fn single_bag_matrix() {
        let ds = Dataset::from_bags(vec![bag1("a", &[1.0, 2.0])]).unwrap();
        let d = distance_matrix(&ds, Measure::Hausdorff(HausdorffVariant::MAX)).unwrap();
        assert_eq!(d.values(), &[0.0]);
        let w = vec![uniform_weights(&ds.bags()[0])];
        let d = distance_matrix(&ds, Measure::WeightedAverage(&w)).unwrap();
        assert_eq!(d.values(), &[0.0]);
    }

    #[test]
    fn uniform_wa_matches_bag_means() {
        let bags = vec![bag1("a", &[0.0, 2.0]), bag1("b", &[5.0]), bag1("c", &[-1.0, 0.0, 4.0])];
        let ds = Dataset::from_bags(bags).unwrap();
        let w: Vec<_> = ds.bags().iter().map(uniform_weights).collect();
        let d = distance_matrix(&ds, Measure::WeightedAverage(&w)).unwrap();
        let means = [1.0, 5.0, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                assert!((d.get(i, j) - f64::abs(means[i] - means[j])).abs() < 1e-12);
            }
        }
        assert_eq!(d.measure(), "wa");
    }

    #[test]
    fn missing_weights_rejected() {
        let ds = Dataset::from_bags(vec![bag1("a", &[0.0]), bag1("b", &[1.0])]).unwrap();
        let w = vec![uniform_weights(&ds.bags()[0])];
        assert_eq!(
            distance_matrix(&ds, Measure::WeightedAverage(&w)).unwrap_err(),
            Error::MissingWeights { id: "b".into() }
        );
    }

    #[test]
    fn matrix_validation() {
        assert!(DistanceMatrix::new(2, vec![0.0, 1.0, 1.0, 0.0], "x").is_ok());
        assert!(DistanceMatrix::new(2, vec![0.0, 1.0, 2.0, 0.0], "x").is_err());
        assert!(DistanceMatrix::new(2, vec![0.5, 1.0, 1.0, 0.0], "x").is_err());
        assert!(DistanceMatrix::new(2, vec![0.0, -1.0, -1.0, 0.0], "x").is_err());
        let d = DistanceMatrix::from_upper(3, &[1.0, 2.0, 3.0], "x").unwrap();
        assert_eq!(d.row(2), &[2.0, 3.0, 0.0]);
        assert_eq!(d.upper(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn counter_tracks_work() {
        let bags = vec![bag1("a", &[0.0, 1.0, 2.0]), bag1("b", &[1.0, 2.0]), bag1("c", &[5.0, 6.0])];
        let mut c = OpCounter::default();
        distance_matrix_counted(&bags, Measure::Hausdorff(HausdorffVariant::MAX), &mut c).unwrap();
        assert_eq!(c.instance_pairs, 3 * 2 + 3 * 2 + 2 * 2);
        assert_eq!(c.vector_norms, 0);
        let w: Vec<_> = bags.iter().map(uniform_weights).collect();
        let mut c = OpCounter::default();
        distance_matrix_counted(&bags, Measure::WeightedAverage(&w), &mut c).unwrap();
        assert_eq!((c.instance_pairs, c.vector_norms, c.aggregations), (0, 3, 3));
    }
}
