//! CSV and JSON exchange files written by the pipeline stages.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading
//! a file back yields bit-identical values.

use std::fs;
use std::path::Path;

use mibag_core::cluster::ClusterAssignment;
use mibag_core::metrics::PurityCurve;
use mibag_core::{Dataset, DistanceMatrix, WeightVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::store::write_file;

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv { path: path.to_path_buf(), source }
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    csv::Writer::from_path(path).map_err(csv_err(path))
}

fn parse_f64(s: &str, path: &Path) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::format(path, format!("not a number: {s:?}")))
}

/// Square matrix with a `bag_id` header row and column.
pub fn write_distmat(path: &Path, ids: &[&str], d: &DistanceMatrix) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["bag_id".to_string()];
    header.extend(ids.iter().map(|s| s.to_string()));
    w.write_record(&header).map_err(csv_err(path))?;
    for (i, id) in ids.iter().enumerate() {
        let mut row = vec![id.to_string()];
        row.extend(d.row(i).iter().map(|x| x.to_string()));
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a distance matrix and its bag ids.
pub fn read_distmat(path: &Path) -> Result<(Vec<String>, DistanceMatrix)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let ids: Vec<String> = r.headers().map_err(csv_err(path))?.iter().skip(1).map(str::to_string).collect();
    let n = ids.len();
    let mut values = Vec::with_capacity(n * n);
    for (i, record) in r.records().enumerate() {
        let record = record.map_err(csv_err(path))?;
        if i >= n || record.len() != n + 1 || record[0] != ids[i] {
            return Err(Error::format(path, format!("row {} does not match the header", i + 1)));
        }
        for cell in record.iter().skip(1) {
            values.push(parse_f64(cell, path)?);
        }
    }
    if values.len() != n * n {
        return Err(Error::format(path, "matrix is not square"));
    }
    let measure = path.file_stem().and_then(|s| s.to_str()).unwrap_or("").to_string();
    Ok((ids, DistanceMatrix::new(n, values, measure)?))
}

/// `bag_id,label` per bag.
pub fn write_assignment(path: &Path, ids: &[&str], a: &ClusterAssignment) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["bag_id", "label"]).map_err(csv_err(path))?;
    for (id, label) in ids.iter().zip(a.labels()) {
        w.write_record([*id, &label.to_string()]).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads an assignment; K is one more than the largest label unless given.
pub fn read_assignment(path: &Path, k: Option<usize>) -> Result<(Vec<String>, ClusterAssignment)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    for record in r.records() {
        let record = record.map_err(csv_err(path))?;
        if record.len() != 2 {
            return Err(Error::format(path, "expected bag_id,label"));
        }
        ids.push(record[0].to_string());
        labels.push(
            record[1]
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::format(path, format!("bad label {:?}", &record[1])))?,
        );
    }
    let k = k.unwrap_or_else(|| labels.iter().max().map_or(1, |m| m + 1));
    Ok((ids, ClusterAssignment::new(labels, k)?))
}

/// Weights as a JSON object `{bag_id: [alpha...]}` in bag order.
pub fn write_weights(path: &Path, weights: &[WeightVector]) -> Result<()> {
    let map: serde_json::Map<String, serde_json::Value> = weights
        .iter()
        .map(|w| (w.bag_id().to_string(), serde_json::Value::from(w.values().to_vec())))
        .collect();
    write_json(path, &map)
}

/// Reads weights and orders them like the dataset's bags.
pub fn read_weights(path: &Path, dataset: &Dataset) -> Result<Vec<WeightVector>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut map: serde_json::Map<String, serde_json::Value> =
        serde_json::from_str(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
    dataset
        .bags()
        .iter()
        .map(|bag| {
            let value = map
                .remove(bag.id())
                .ok_or_else(|| mibag_core::Error::MissingWeights { id: bag.id().to_string() })?;
            let values: Vec<f64> =
                serde_json::from_value(value).map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
            if values.len() != bag.len() {
                return Err(mibag_core::Error::LengthMismatch { expected: bag.len(), found: values.len() }.into());
            }
            Ok(WeightVector::new(bag.id(), values)?)
        })
        .collect()
}

/// `K,purity` rows for plotting.
pub fn write_purity_csv(path: &Path, curve: &PurityCurve) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["K", "purity"]).map_err(csv_err(path))?;
    for (k, p) in &curve.points {
        w.write_record([k.to_string(), p.to_string()]).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source })
}
