use std::path::Path;

use mibag::core::cluster::ClusterAssignment;
use mibag::core::{Bag, Dataset, DistanceMatrix, Mask, WeightVector};
use mibag::export::{read_assignment, read_distmat, read_weights, write_assignment, write_distmat, write_weights};
use mibag::store::{decode_bag, decode_pgm, encode_bag, encode_pgm, load_dataset, read_manifest, save_dataset};
use proptest::prelude::*;

fn bag(id: &str, values: Vec<f32>, d: usize, label: Option<&str>) -> Bag {
    Bag::new(id, values, d, None, label.map(str::to_string)).unwrap()
}

#[test]
fn dataset_roundtrips_through_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let bags = vec![
        bag("x", vec![0.0, 1.0, 1.0, 0.0], 2, Some("a")),
        bag("y", vec![0.6, 0.8], 2, None).with_grid(1, 1).unwrap(),
    ];
    let refs = vec![bag("r", vec![1.0, 0.0], 2, None)];
    let data = Dataset::new(bags, refs, "demo", true).unwrap();
    let manifest = save_dataset(&data, dir.path()).unwrap();
    assert_eq!(load_dataset(&manifest).unwrap(), data);
    let m = read_manifest(&manifest).unwrap();
    assert_eq!(m.bags[0].file, "bags/00000.mibg");
    assert_eq!(m.reference_bags.len(), 1);
    assert!(m.unit_norm);
}

#[test]
fn manifest_errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let data = Dataset::from_bags(vec![bag("x", vec![3.0, 4.0], 2, None)]).unwrap();
    let manifest = save_dataset(&data, dir.path()).unwrap();
    // a unit-norm claim the bags do not satisfy
    let text = std::fs::read_to_string(&manifest).unwrap().replace("\"unit_norm\": false", "\"unit_norm\": true");
    std::fs::write(&manifest, text).unwrap();
    let err = load_dataset(&manifest).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    std::fs::remove_file(dir.path().join("bags/00000.mibg")).unwrap();
    assert_eq!(load_dataset(&manifest).unwrap_err().exit_code(), 1);
}

#[test]
fn exchange_files_roundtrip_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let values = vec![0.0, 0.1 + 0.2, 1.0 / 3.0, 0.1 + 0.2, 0.0, 2.0f64.sqrt(), 1.0 / 3.0, 2.0f64.sqrt(), 0.0];
    let d = DistanceMatrix::new(3, values, "wa").unwrap();
    let path = dir.path().join("distmat.csv");
    write_distmat(&path, &["a", "b", "c"], &d).unwrap();
    let (ids, back) = read_distmat(&path).unwrap();
    assert_eq!(ids, ["a", "b", "c"]);
    assert_eq!(back.values(), d.values());

    let a = ClusterAssignment::new(vec![1, 0, 1], 3).unwrap();
    let path = dir.path().join("assignment.csv");
    write_assignment(&path, &["a", "b", "c"], &a).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "bag_id,label\na,1\nb,0\nc,1\n");
    let (_, back) = read_assignment(&path, Some(3)).unwrap();
    assert_eq!(back.labels(), a.labels());
    assert_eq!(read_assignment(&path, None).unwrap().1.k(), 2);

    let data = Dataset::from_bags(vec![
        bag("a", vec![1.0, 2.0, 3.0], 1, None),
        bag("b", vec![1.0], 1, None),
    ])
    .unwrap();
    let w = vec![
        WeightVector::new("a", vec![0.1, 0.2, 0.7000000000000001]).unwrap(),
        WeightVector::new("b", vec![1.0]).unwrap(),
    ];
    let path = dir.path().join("w/weights.json");
    write_weights(&path, &w).unwrap();
    assert_eq!(read_weights(&path, &data).unwrap(), w);
    write_weights(&path, &w[..1]).unwrap();
    assert!(read_weights(&path, &data).is_err());
}

#[test]
fn malformed_exchange_files_fail() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    std::fs::write(&path, "bag_id,a,b\na,0,1\nb,2,0\n").unwrap();
    assert!(read_distmat(&path).is_err(), "asymmetric");
    std::fs::write(&path, "bag_id,a,b\na,0,x\nb,1,0\n").unwrap();
    assert!(read_distmat(&path).is_err(), "not a number");
    std::fs::write(&path, "bag_id,label\na,-1\n").unwrap();
    assert!(read_assignment(&path, None).is_err());
}

proptest! {
    #[test]
    fn bag_files_roundtrip(
        (m, d, values) in (1usize..6, 1usize..5).prop_flat_map(|(m, d)| {
            (Just(m), Just(d), prop::collection::vec(-1e6f32..1e6, m * d))
        }),
        grid in any::<bool>(),
    ) {
        let grid = grid.then_some((1, m));
        let b = Bag::new("id", values, d, grid, None).unwrap();
        let bytes = encode_bag(&b);
        prop_assert_eq!(bytes.len(), 24 + 4 * m * d);
        let back = decode_bag(&bytes, "id", None, Path::new("f")).unwrap();
        prop_assert_eq!(back, b);
    }

    #[test]
    fn decoding_arbitrary_bytes_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..96)) {
        let _ = decode_bag(&bytes, "id", None, Path::new("f"));
        let _ = decode_pgm(&bytes, Path::new("f"));
    }

    #[test]
    fn corrupted_headers_never_panic(flip in 0usize..24, value in any::<u8>()) {
        let b = Bag::new("id", vec![0.5; 6], 2, Some((1, 3)), None).unwrap();
        let mut bytes = encode_bag(&b);
        bytes[flip] = value;
        let _ = decode_bag(&bytes, "id", None, Path::new("f"));
    }

    #[test]
    fn masks_roundtrip(h in 1usize..8, w in 1usize..8, seed in any::<u64>()) {
        let pixels = (0..h * w).map(|i| ((seed >> (i % 64)) & 1) as u8).collect();
        let mask = Mask::new(h, w, pixels).unwrap();
        prop_assert_eq!(decode_pgm(&encode_pgm(&mask), Path::new("m")).unwrap(), mask);
    }
}
