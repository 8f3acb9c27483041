//! On-disk datasets: binary bag files, the JSON manifest and PGM masks.
//!
//! A bag file is little-endian: the magic `MIBG`, then five `u32` fields
//! (version, M, D, grid rows, grid cols with `0, 0` meaning no grid),
//! then `M * D` `f32` values in row-major order. Ids and labels live in the
//! manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use mibag_core::{Bag, Dataset, Mask, MaskSet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"MIBG";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

/// Serializes a bag's embeddings and grid.
pub fn encode_bag(bag: &Bag) -> Vec<u8> {
    let (rows, cols) = bag.grid().unwrap_or((0, 0));
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * bag.embeddings().len());
    out.extend_from_slice(MAGIC);
    for field in [VERSION as usize, bag.len(), bag.dim(), rows, cols] {
        out.extend_from_slice(&(field as u32).to_le_bytes());
    }
    for x in bag.embeddings() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

/// Parses a bag file body. `path` is only used in error messages.
pub fn decode_bag(bytes: &[u8], id: &str, label: Option<String>, path: &Path) -> Result<Bag> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(path, "truncated header"));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::format(path, "bad magic, expected MIBG"));
    }
    let field = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    let version = field(0) as u32;
    if version != VERSION {
        return Err(Error::format(path, format!("unsupported version {version}")));
    }
    let (m, d, rows, cols) = (field(1), field(2), field(3), field(4));
    let expected = m
        .checked_mul(d)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::format(path, "size overflow"))?;
    if bytes.len() != expected {
        return Err(Error::format(
            path,
            format!("expected {expected} bytes for M={m} D={d}, found {}", bytes.len()),
        ));
    }
    let grid = match (rows, cols) {
        (0, 0) => None,
        (r, c) => Some((r, c)),
    };
    let values = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Bag::new(id, values, d, grid, label)?)
}

pub fn read_bag(path: &Path, id: &str, label: Option<String>) -> Result<Bag> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_bag(&bytes, id, label, path)
}

pub fn write_bag(path: &Path, bag: &Bag) -> Result<()> {
    write_file(path, &encode_bag(bag))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    /// Path relative to the manifest's directory.
    pub file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default)]
    pub category: String,
    #[serde(default)]
    pub unit_norm: bool,
    pub bags: Vec<ManifestEntry>,
    #[serde(default)]
    pub reference_bags: Vec<ManifestEntry>,
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source })
}

/// Loads and validates a dataset; bag order follows the manifest.
pub fn load_dataset(manifest_path: &Path) -> Result<Dataset> {
    let manifest = read_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let load = |entries: &[ManifestEntry]| -> Result<Vec<Bag>> {
        entries
            .iter()
            .map(|e| read_bag(&base.join(&e.file), &e.id, e.label.clone()))
            .collect()
    };
    let bags = load(&manifest.bags)?;
    let reference = load(&manifest.reference_bags)?;
    Ok(Dataset::new(bags, reference, manifest.category, manifest.unit_norm)?)
}

/// Writes every bag under `dir` and a `manifest.json` next to them.
/// Returns the manifest path.
pub fn save_dataset(dataset: &Dataset, dir: &Path) -> Result<PathBuf> {
    let write_group = |bags: &[Bag], sub: &str| -> Result<Vec<ManifestEntry>> {
        bags.iter()
            .enumerate()
            .map(|(i, bag)| {
                let file = format!("{sub}/{i:05}.mibg");
                write_bag(&dir.join(&file), bag)?;
                Ok(ManifestEntry {
                    id: bag.id().to_string(),
                    file,
                    label: bag.label().map(str::to_string),
                })
            })
            .collect()
    };
    let manifest = Manifest {
        category: dataset.category().to_string(),
        unit_norm: dataset.unit_norm(),
        bags: write_group(dataset.bags(), "bags")?,
        reference_bags: write_group(dataset.reference_bags(), "reference")?,
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&path, json.as_bytes())?;
    Ok(path)
}

/// Parses a binary (P5) 8-bit PGM; pixels above 127 become 1.
pub fn decode_pgm(bytes: &[u8], path: &Path) -> Result<Mask> {
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(Error::format(path, "truncated PGM header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| !b.is_ascii_whitespace()) {
            pos += 1;
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(Error::format(path, "not a binary PGM (P5)"));
    }
    let mut number = |what: &str| -> Result<usize> {
        token()?
            .parse()
            .map_err(|_| Error::format(path, format!("bad PGM {what}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::format(path, "only 8-bit PGM masks are supported"));
    }
    // exactly one whitespace byte separates the header from the raster
    let start = pos + 1;
    let raster = bytes
        .get(start..start + width * height)
        .ok_or_else(|| Error::format(path, "truncated PGM raster"))?;
    let pixels = raster.iter().map(|&p| u8::from(p > 127)).collect();
    Ok(Mask::new(height, width, pixels)?)
}

pub fn encode_pgm(mask: &Mask) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width(), mask.height()).into_bytes();
    out.extend(mask.pixels().iter().map(|&p| if p != 0 { 255 } else { 0 }));
    out
}

pub fn read_pgm(path: &Path) -> Result<Mask> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes, path)
}

pub fn write_pgm(path: &Path, mask: &Mask) -> Result<()> {
    write_file(path, &encode_pgm(mask))
}

/// Mask file for a bag: `<dir>/<id>.pgm`.
pub fn mask_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.pgm"))
}

/// Reads the masks present in `dir` for the dataset's bags. Bags without a
/// mask file are skipped.
pub fn load_masks(dir: &Path, dataset: &Dataset) -> Result<MaskSet> {
    if !dir.is_dir() {
        return Err(Error::format(dir, "mask directory not found"));
    }
    let mut set = MaskSet::new();
    for bag in dataset.bags() {
        let path = mask_path(dir, bag.id());
        if path.is_file() {
            set.insert(bag.id(), read_pgm(&path)?).map_err(Error::from)?;
        }
    }
    Ok(set)
}

pub fn save_masks(dir: &Path, masks: &MaskSet) -> Result<()> {
    for (id, mask) in masks.iter() {
        write_pgm(&mask_path(dir, id), mask)?;
    }
    Ok(())
}
