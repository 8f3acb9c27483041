//! Pixel-level localization: weight maps upsampled and scored against masks.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::bag::{Bag, MaskSet};
use crate::error::{Error, Result};
use crate::weights::WeightVector;

/// Bilinear resize of a row-major `rows x cols` map to `height x width`,
/// sampling at pixel centers and clamping at the borders.
pub fn bilinear_upsample(values: &[f64], rows: usize, cols: usize, height: usize, width: usize) -> Vec<f64> {
    debug_assert_eq!(values.len(), rows * cols);
    let axis = |out: usize, inp: usize| -> Vec<(usize, usize, f64)> {
        let scale = inp as f64 / out as f64;
        (0..out)
            .map(|o| {
                let src = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, (inp - 1) as f64);
                let lo = libm::floor(src) as usize;
                let hi = (lo + 1).min(inp - 1);
                (lo, hi, src - lo as f64)
            })
            .collect()
    };
    let ys = axis(height, rows);
    let xs = axis(width, cols);
    let mut out = Vec::with_capacity(height * width);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let top = values[y0 * cols + x0] * (1.0 - fx) + values[y0 * cols + x1] * fx;
            let bottom = values[y1 * cols + x0] * (1.0 - fx) + values[y1 * cols + x1] * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    out
}

/// ROC AUC from the Mann-Whitney statistic with midranks for ties.
/// `None` when either class is absent.
pub fn roc_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    debug_assert_eq!(scores.len(), positive.len());
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(Ordering::Equal));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // ranks start..end (1-based start+1..=end) share their mean
        let midrank = (start + 1 + end) as f64 / 2.0;
        let pos_in_run = order[start..end].iter().filter(|&&i| positive[i]).count();
        rank_sum += midrank * pos_in_run as f64;
        start = end;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LocalizationReport {
    /// AUC over all pixels of all images pooled together.
    pub auc: f64,
    /// Per-image AUC; `None` for images whose mask is all one class.
    pub per_image: Vec<(String, Option<f64>)>,
    pub pixels: usize,
}

/// Upsampled weight map of one bag at mask resolution.
pub fn weight_map(bag: &Bag, weights: &WeightVector, height: usize, width: usize) -> Result<Vec<f64>> {
    let (rows, cols) = bag.grid().ok_or_else(|| Error::MissingGrid { id: bag.id().to_string() })?;
    if weights.len() != bag.len() {
        return Err(Error::LengthMismatch { expected: bag.len(), found: weights.len() });
    }
    Ok(bilinear_upsample(weights.values(), rows, cols, height, width))
}

/// Pooled pixel AUC of weight maps against binary masks.
///
/// `weights[i]` belongs to `bags[i]`; a non-empty weight id must match.
pub fn localization_auc(bags: &[Bag], weights: &[WeightVector], masks: &MaskSet) -> Result<LocalizationReport> {
    if bags.len() != weights.len() {
        return Err(Error::LengthMismatch { expected: bags.len(), found: weights.len() });
    }
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    let mut per_image = Vec::with_capacity(bags.len());
    for (bag, w) in bags.iter().zip(weights) {
        if !w.bag_id().is_empty() && w.bag_id() != bag.id() {
            return Err(Error::MissingWeights { id: bag.id().to_string() });
        }
        let mask = masks.get(bag.id()).ok_or_else(|| Error::MissingMask { id: bag.id().to_string() })?;
        let map = weight_map(bag, w, mask.height(), mask.width())?;
        let truth: Vec<bool> = mask.pixels().iter().map(|&p| p != 0).collect();
        per_image.push((bag.id().to_string(), roc_auc(&map, &truth)));
        scores.extend(map);
        labels.extend(truth);
    }
    let auc = roc_auc(&scores, &labels).ok_or(Error::UndefinedAuc)?;
    Ok(LocalizationReport {
        auc,
        per_image,
        pixels: scores.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bag::Mask;
    use alloc::vec;

    #[test]
    fn auc_examples() {
        assert_eq!(roc_auc(&[0.9, 0.1, 0.2], &[true, false, false]), Some(1.0));
        assert_eq!(roc_auc(&[0.5; 4], &[true, false, true, false]), Some(0.5));
        assert_eq!(roc_auc(&[0.1, 0.9], &[true, false]), Some(0.0));
        assert_eq!(roc_auc(&[0.1, 0.9], &[true, true]), None);
    }

    #[test]
    fn upsample_identity_and_constant() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(bilinear_upsample(&v, 2, 2, 2, 2), v.to_vec());
        assert!(bilinear_upsample(&[0.25; 4], 2, 2, 5, 7).iter().all(|&x| x == 0.25));
        // 1x2 -> 1x4: centers at -0.25, 0.25, 0.75, 1.25 in source coordinates
        assert_eq!(bilinear_upsample(&[0.0, 1.0], 1, 2, 1, 4), vec![0.0, 0.25, 0.75, 1.0]);
    }

    #[test]
    fn grid_example() {
        let bag = Bag::new("x", vec![0.0f32; 4], 1, Some((2, 2)), None).unwrap();
        let w = WeightVector::new("x", vec![0.7, 0.1, 0.1, 0.1]).unwrap();
        let mut masks = MaskSet::new();
        masks.insert("x", Mask::new(2, 2, vec![1, 0, 0, 0]).unwrap()).unwrap();
        let r = localization_auc(&[bag], &[w], &masks).unwrap();
        assert_eq!(r.auc, 1.0);
        assert_eq!(r.per_image, vec![("x".into(), Some(1.0))]);
    }

    #[test]
    fn missing_inputs() {
        let bag = Bag::new("x", vec![0.0f32; 4], 1, None, None).unwrap();
        let w = WeightVector::uniform("x", 4);
        let mut masks = MaskSet::new();
        assert_eq!(
            localization_auc(&[bag.clone()], &[w.clone()], &masks).unwrap_err(),
            Error::MissingMask { id: "x".into() }
        );
        masks.insert("x", Mask::new(2, 2, vec![1, 0, 0, 0]).unwrap()).unwrap();
        assert_eq!(
            localization_auc(&[bag], &[w], &masks).unwrap_err(),
            Error::MissingGrid { id: "x".into() }
        );
    }
}
