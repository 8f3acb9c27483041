//! Bags of patch embeddings, datasets of bags, and segmentation masks.
//!
//! A [`Bag`] holds the `M x D` embedding matrix of one image in row-major
//! 32-bit storage. All numeric work elsewhere in the crate accumulates in
//! 64 bits.

use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Tolerance on instance norms for datasets flagged `unit_norm`.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-4;

/// One image represented as a set of patch embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct Bag {
    id: String,
    embeddings: Vec<f32>,
    dim: usize,
    grid: Option<(usize, usize)>,
    label: Option<String>,
}

impl Bag {
    /// Builds a bag from row-major embeddings, validating every bag invariant
    /// that does not depend on the surrounding dataset.
    pub fn new(
        id: impl Into<String>,
        embeddings: Vec<f32>,
        dim: usize,
        grid: Option<(usize, usize)>,
        label: Option<String>,
    ) -> Result<Self> {
        let id = id.into();
        if dim == 0 {
            return Err(Error::ZeroDimension { id });
        }
        if embeddings.is_empty() {
            return Err(Error::EmptyBag { id });
        }
        if embeddings.len() % dim != 0 {
            return Err(Error::RaggedEmbeddings {
                id,
                len: embeddings.len(),
                dim,
            });
        }
        if let Some(pos) = embeddings.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                id,
                instance: pos / dim,
            });
        }
        let m = embeddings.len() / dim;
        if let Some((rows, cols)) = grid {
            if rows.checked_mul(cols) != Some(m) {
                return Err(Error::GridMismatch { id, rows, cols, m });
            }
        }
        Ok(Self {
            id,
            embeddings,
            dim,
            grid,
            label,
        })
    }

    /// Convenience constructor from a list of instances.
    pub fn from_instances<I, R>(id: impl Into<String>, instances: I) -> Result<Self>
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[f32]>,
    {
        let id = id.into();
        let mut dim = None;
        let mut data = Vec::new();
        for row in instances {
            let row = row.as_ref();
            match dim {
                None => dim = Some(row.len()),
                Some(d) if d != row.len() => {
                    return Err(Error::DimensionMismatch {
                        id,
                        expected: d,
                        found: row.len(),
                    })
                }
                _ => {}
            }
            data.extend_from_slice(row);
        }
        match dim {
            None => Err(Error::EmptyBag { id }),
            Some(d) => Self::new(id, data, d, None, None),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn with_grid(self, rows: usize, cols: usize) -> Result<Self> {
        Self::new(self.id, self.embeddings, self.dim, Some((rows, cols)), self.label)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Number of instances `M`.
    pub fn len(&self) -> usize {
        self.embeddings.len() / self.dim
    }

    /// Always false; bags hold at least one instance.
    pub fn is_empty(&self) -> bool {
        self.embeddings.is_empty()
    }

    /// Embedding dimension `D`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> Option<(usize, usize)> {
        self.grid
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn embeddings(&self) -> &[f32] {
        &self.embeddings
    }

    pub fn instance(&self, m: usize) -> &[f32] {
        &self.embeddings[m * self.dim..(m + 1) * self.dim]
    }

    pub fn instances(&self) -> core::slice::ChunksExact<'_, f32> {
        self.embeddings.chunks_exact(self.dim)
    }

    fn check_unit_norm(&self) -> Result<()> {
        for (m, row) in self.instances().enumerate() {
            let sq: f64 = row.iter().map(|&v| f64::from(v) * f64::from(v)).sum();
            let norm = libm::sqrt(sq);
            if libm::fabs(norm - 1.0) > UNIT_NORM_TOLERANCE {
                return Err(Error::NotUnitNorm {
                    id: self.id.clone(),
                    instance: m,
                    norm,
                });
            }
        }
        Ok(())
    }
}

/// An ordered collection of bags to cluster, with optional labeled-normal
/// reference bags.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    bags: Vec<Bag>,
    reference_bags: Vec<Bag>,
    category: String,
    unit_norm: bool,
}

impl Dataset {
    pub fn new(
        bags: Vec<Bag>,
        reference_bags: Vec<Bag>,
        category: impl Into<String>,
        unit_norm: bool,
    ) -> Result<Self> {
        let first = bags.first().ok_or(Error::EmptyDataset)?;
        let dim = first.dim();
        for group in [&bags, &reference_bags] {
            let mut seen = BTreeSet::new();
            for bag in group.iter() {
                if bag.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        id: bag.id.clone(),
                        expected: dim,
                        found: bag.dim(),
                    });
                }
                if !seen.insert(bag.id()) {
                    return Err(Error::DuplicateId {
                        id: bag.id.clone(),
                    });
                }
                if unit_norm {
                    bag.check_unit_norm()?;
                }
            }
        }
        Ok(Self {
            bags,
            reference_bags,
            category: category.into(),
            unit_norm,
        })
    }

    /// Unlabeled dataset without reference bags.
    pub fn from_bags(bags: Vec<Bag>) -> Result<Self> {
        Self::new(bags, Vec::new(), "", false)
    }

    pub fn bags(&self) -> &[Bag] {
        &self.bags
    }

    pub fn reference_bags(&self) -> &[Bag] {
        &self.reference_bags
    }

    pub fn category(&self) -> &str {
        &self.category
    }

    pub fn unit_norm(&self) -> bool {
        self.unit_norm
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.bags[0].dim()
    }

    /// Ground-truth labels in bag order.
    pub fn labels(&self) -> Vec<Option<&str>> {
        self.bags.iter().map(Bag::label).collect()
    }

    /// The grid shared by every bag, if all bags carry the same one.
    pub fn uniform_grid(&self) -> Option<(usize, usize)> {
        let grid = self.bags[0].grid()?;
        self.bags
            .iter()
            .all(|b| b.grid() == Some(grid))
            .then_some(grid)
    }
}

/// Binary segmentation mask, `1` marks an anomalous pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    height: usize,
    width: usize,
    pixels: Vec<u8>,
}

impl Mask {
    /// `pixels` is row-major; every entry must be 0 or 1.
    pub fn new(height: usize, width: usize, pixels: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidMask("zero-sized mask"));
        }
        if pixels.len() != height * width {
            return Err(Error::LengthMismatch {
                expected: height * width,
                found: pixels.len(),
            });
        }
        if pixels.iter().any(|&p| p > 1) {
            return Err(Error::InvalidMask("mask values must be 0 or 1"));
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Self::new(height, width, alloc::vec![0; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }
}

/// Masks keyed by bag id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MaskSet {
    masks: BTreeMap<String, Mask>,
}

impl MaskSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a mask; all masks in a set must share one size.
    pub fn insert(&mut self, id: impl Into<String>, mask: Mask) -> Result<()> {
        let id = id.into();
        if let Some(size) = self.size() {
            let found = (mask.height, mask.width);
            if found != size {
                return Err(Error::MaskSizeMismatch {
                    id,
                    expected: size,
                    found,
                });
            }
        }
        self.masks.insert(id, mask);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&Mask> {
        self.masks.get(id)
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn size(&self) -> Option<(usize, usize)> {
        self.masks.values().next().map(|m| (m.height, m.width))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Mask)> {
        self.masks.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Checks that every mask id names a bag of `dataset`.
    pub fn validate_against(&self, dataset: &Dataset) -> Result<()> {
        let ids: BTreeSet<&str> = dataset.bags().iter().map(Bag::id).collect();
        for id in self.masks.keys() {
            if !ids.contains(id.as_str()) {
                return Err(Error::UnknownMask { id: id.clone() });
            }
        }
        Ok(())
    }
}

/// Area-interpolates a binary mask down to a `rows x cols` grid.
///
/// Each output cell is the mean of the mask over the cell's rectangle, with
/// fractional pixel coverage when the mask size is not a multiple of the grid.
pub fn resize_mask_to_grid(mask: &Mask, rows: usize, cols: usize) -> Result<Vec<f64>> {
    if rows == 0 || cols == 0 || rows > mask.height || cols > mask.width {
        return Err(Error::GridTooLarge {
            rows,
            cols,
            height: mask.height,
            width: mask.width,
        });
    }
    let row_cover = coverage(mask.height, rows);
    let col_cover = coverage(mask.width, cols);
    let cell_area = (mask.height as f64 / rows as f64) * (mask.width as f64 / cols as f64);

    let mut out = alloc::vec![0.0f64; rows * cols];
    for (r, row_span) in row_cover.iter().enumerate() {
        for (c, col_span) in col_cover.iter().enumerate() {
            let mut acc = 0.0;
            for &(y, wy) in row_span {
                for &(x, wx) in col_span {
                    if mask.get(y, x) != 0 {
                        acc += wy * wx;
                    }
                }
            }
            out[r * cols + c] = acc / cell_area;
        }
    }
    Ok(out)
}

/// For each of `cells` output bins over `len` pixels, the overlapping pixels
/// and their overlap lengths.
fn coverage(len: usize, cells: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = len as f64 / cells as f64;
    (0..cells)
        .map(|cell| {
            let start = cell as f64 * scale;
            let end = (cell + 1) as f64 * scale;
            let first = libm::floor(start) as usize;
            let last = (libm::ceil(end) as usize).min(len);
            (first..last)
                .filter_map(|p| {
                    let overlap = (end.min(p as f64 + 1.0) - start.max(p as f64)).max(0.0);
                    (overlap > 0.0).then_some((p, overlap))
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn bag(id: &str, rows: &[&[f32]]) -> Bag {
        Bag::from_instances(id, rows.iter().copied()).unwrap()
    }

    #[test]
    fn rejects_non_finite_and_bad_grid() {
        let err = Bag::new("x", vec![1.0, f32::NAN], 1, None, None).unwrap_err();
        assert_eq!(err, Error::NonFinite { id: "x".into(), instance: 1 });
        let err = Bag::new("x", vec![1.0; 6], 2, Some((2, 2)), None).unwrap_err();
        assert!(matches!(err, Error::GridMismatch { m: 3, .. }));
        assert!(Bag::new("x", vec![], 2, None, None).is_err());
        assert!(Bag::new("x", vec![1.0; 3], 2, None, None).is_err());
    }

    #[test]
    fn dataset_invariants() {
        assert_eq!(Dataset::from_bags(vec![]).unwrap_err(), Error::EmptyDataset);
        let a = bag("a", &[&[0.0, 1.0]]);
        let b = bag("b", &[&[0.0, 1.0, 2.0]]);
        assert!(matches!(
            Dataset::from_bags(vec![a.clone(), b]).unwrap_err(),
            Error::DimensionMismatch { expected: 2, found: 3, .. }
        ));
        assert!(matches!(
            Dataset::from_bags(vec![a.clone(), a.clone()]).unwrap_err(),
            Error::DuplicateId { .. }
        ));
        // the same id may appear once among bags and once among references
        assert!(Dataset::new(vec![a.clone()], vec![a.clone()], "c", true).is_ok());
        let off = bag("o", &[&[0.0, 2.0]]);
        assert!(matches!(
            Dataset::new(vec![off], vec![], "c", true).unwrap_err(),
            Error::NotUnitNorm { .. }
        ));
    }

    #[test]
    fn resize_constant_and_zero_masks() {
        let ones = Mask::new(4, 4, vec![1; 16]).unwrap();
        assert_eq!(resize_mask_to_grid(&ones, 2, 2).unwrap(), vec![1.0; 4]);
        let zeros = Mask::zeros(4, 4).unwrap();
        assert_eq!(resize_mask_to_grid(&zeros, 2, 2).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn resize_single_pixel_block_mean() {
        let mut px = vec![0; 16];
        px[0] = 1;
        let mask = Mask::new(4, 4, px).unwrap();
        assert_eq!(resize_mask_to_grid(&mask, 2, 2).unwrap(), vec![0.25, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn resize_rejects_oversized_grid() {
        let mask = Mask::zeros(2, 2).unwrap();
        assert!(matches!(
            resize_mask_to_grid(&mask, 3, 2),
            Err(Error::GridTooLarge { .. })
        ));
    }

    #[test]
    fn resize_preserves_mass_for_fractional_blocks() {
        let px: Vec<u8> = (0..35).map(|i| ((i * 7 + 3) % 5 == 0) as u8).collect();
        let mask = Mask::new(5, 7, px.clone()).unwrap();
        let out = resize_mask_to_grid(&mask, 2, 3).unwrap();
        let area = (5.0 / 2.0) * (7.0 / 3.0);
        let mass: f64 = out.iter().map(|v| v * area).sum();
        let expected: f64 = px.iter().map(|&p| f64::from(p)).sum();
        assert!((mass - expected).abs() < 1e-12);
        assert!(out.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn mask_set_checks_sizes_and_ids() {
        let mut set = MaskSet::new();
        set.insert("a", Mask::zeros(2, 2).unwrap()).unwrap();
        assert!(set.insert("b", Mask::zeros(3, 2).unwrap()).is_err());
        set.insert("z", Mask::zeros(2, 2).unwrap()).unwrap();
        let ds = Dataset::from_bags(vec![bag("a", &[&[1.0]])]).unwrap();
        assert_eq!(
            set.validate_against(&ds).unwrap_err(),
            Error::UnknownMask { id: "z".into() }
        );
    }
}
