//! Planted-defect datasets for testing the pipeline without real images.
//!
//! Every bag lives on a near-square patch grid. Most instances are noisy
//! copies of vectors from a small background pool shared by all bags. A
//! contiguous block of `defect_instances` cells is replaced by noisy copies
//! of the bag's defect center, one center per defect type. Reference bags
//! contain background only. Masks mark the defect cells at `mask_scale`
//! pixels per cell.

use std::path::{Path, PathBuf};

use mibag_core::{Bag, Dataset, Mask, MaskSet};
use rand::RngExt;
use rand_distr::StandardNormal;
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::{save_dataset, save_masks};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    /// Number of bags.
    pub n: usize,
    /// Instances per bag.
    pub m: usize,
    /// Embedding dimension.
    pub d: usize,
    /// Number of defect types.
    pub k_true: usize,
    pub defect_instances: usize,
    /// Standard deviation of the per-coordinate Gaussian noise.
    pub noise: f64,
    pub references: usize,
    pub pool_size: usize,
    pub mask_scale: usize,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            n: 60,
            m: 64,
            d: 16,
            k_true: 3,
            defect_instances: 4,
            noise: 0.05,
            references: 10,
            pool_size: 16,
            mask_scale: 4,
            seed: 0,
        }
    }
}

impl SynthParams {
    fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.n == 0 || self.m == 0 || self.d == 0 {
            return fail("synth sizes N, M and D must be positive");
        }
        if self.k_true == 0 {
            return fail("synth needs at least one defect type");
        }
        if self.defect_instances > self.m {
            return fail("defect_instances must not exceed M");
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return fail("noise must be finite and nonnegative");
        }
        if self.pool_size == 0 {
            return fail("pool_size must be positive");
        }
        if self.mask_scale == 0 {
            return fail("mask_scale must be positive");
        }
        Ok(())
    }
}

/// A generated dataset with its defect masks.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub dataset: Dataset,
    pub masks: MaskSet,
}

/// Grid `rows x cols` with `rows <= cols` and `rows` the largest divisor of
/// `m` not above its square root.
pub fn grid_shape(m: usize) -> (usize, usize) {
    let mut rows = 1;
    let mut r = 1;
    while r * r <= m {
        if m % r == 0 {
            rows = r;
        }
        r += 1;
    }
    (rows, m / rows)
}

fn gaussian(rng: &mut Pcg64, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut v {
        *x /= norm;
    }
    v
}

fn unit_vector(rng: &mut Pcg64, d: usize) -> Vec<f64> {
    loop {
        let v = gaussian(rng, d);
        if v.iter().any(|&x| x != 0.0) {
            return normalized(v);
        }
    }
}

fn perturb(rng: &mut Pcg64, center: &[f64], noise: f64) -> Vec<f64> {
    if noise == 0.0 {
        return center.to_vec();
    }
    let v: Vec<f64> = center.iter().map(|c| c + noise * rng.sample::<f64, _>(StandardNormal)).collect();
    if v.iter().all(|&x| x == 0.0) {
        return center.to_vec();
    }
    normalized(v)
}

/// Cells of the defect block: the first `count` cells, row-major, of a
/// square-ish block placed at a random offset.
fn defect_cells(rng: &mut Pcg64, rows: usize, cols: usize, count: usize) -> Vec<usize> {
    if count == 0 {
        return Vec::new();
    }
    let mut block_rows = 1;
    while block_rows * block_rows < count {
        block_rows += 1;
    }
    let block_rows = block_rows.min(rows);
    let block_cols = count.div_ceil(block_rows);
    let top = rng.random_range(0..=rows - block_rows);
    let left = rng.random_range(0..=cols - block_cols);
    (0..count)
        .map(|i| (top + i / block_cols) * cols + left + i % block_cols)
        .collect()
}

fn to_bag(id: String, instances: &[Vec<f64>], grid: (usize, usize), label: Option<String>) -> Result<Bag> {
    let d = instances[0].len();
    let values = instances.iter().flatten().map(|&x| x as f32).collect();
    Ok(Bag::new(id, values, d, Some(grid), label)?)
}

/// Generates the dataset in memory. The same parameters always give the
/// same bags.
pub fn generate(params: &SynthParams) -> Result<Synthetic> {
    params.validate()?;
    let mut rng = Pcg64::new(u128::from(params.seed), 0);
    let (rows, cols) = grid_shape(params.m);
    let pool: Vec<Vec<f64>> = (0..params.pool_size).map(|_| unit_vector(&mut rng, params.d)).collect();
    let centers: Vec<Vec<f64>> = (0..params.k_true).map(|_| unit_vector(&mut rng, params.d)).collect();

    let background = |rng: &mut Pcg64| -> Vec<f64> {
        let base = &pool[rng.random_range(0..pool.len())];
        perturb(rng, base, params.noise)
    };

    let mut bags = Vec::with_capacity(params.n);
    let mut masks = MaskSet::new();
    for i in 0..params.n {
        let kind = i % params.k_true;
        let cells = defect_cells(&mut rng, rows, cols, params.defect_instances);
        let mut is_defect = vec![false; params.m];
        for &c in &cells {
            is_defect[c] = true;
        }
        let instances: Vec<Vec<f64>> = is_defect
            .iter()
            .map(|&defect| {
                if defect {
                    perturb(&mut rng, &centers[kind], params.noise)
                } else {
                    background(&mut rng)
                }
            })
            .collect();
        let id = format!("bag{i:04}");
        bags.push(to_bag(id.clone(), &instances, (rows, cols), Some(format!("type{kind}")))?);

        let (h, w) = (rows * params.mask_scale, cols * params.mask_scale);
        let pixels = (0..h * w)
            .map(|p| {
                let cell = (p / w / params.mask_scale) * cols + (p % w) / params.mask_scale;
                u8::from(is_defect[cell])
            })
            .collect();
        masks.insert(id, Mask::new(h, w, pixels)?)?;
    }

    let reference = (0..params.references)
        .map(|i| {
            let instances: Vec<Vec<f64>> = (0..params.m).map(|_| background(&mut rng)).collect();
            to_bag(format!("ref{i:04}"), &instances, (rows, cols), None)
        })
        .collect::<Result<Vec<_>>>()?;

    let dataset = Dataset::new(bags, reference, "synthetic", true)?;
    Ok(Synthetic { dataset, masks })
}

/// Generates and writes a dataset under `dir`: bag files, `manifest.json`
/// and `masks/<id>.pgm`. Returns the manifest path.
pub fn write_synthetic(params: &SynthParams, dir: &Path) -> Result<PathBuf> {
    let synth = generate(params)?;
    let manifest = save_dataset(&synth.dataset, dir)?;
    save_masks(&dir.join("masks"), &synth.masks)?;
    Ok(manifest)
}
