mod common;

use std::fs;
use std::path::{Path, PathBuf};

use axes_eval::datamodel::{load_manifest, npy, pair_views, DatasetManifest, Stream, Transform};
use axes_eval::Error;
use serde_json::{json, Value};

fn tiny(dir: &Path) -> PathBuf {
    let spec = common::spec(json!({
        "n_items": 3,
        "seed": 1,
        "dims": {"timbre": 2, "structure": 3},
        "structure_frames": 2,
        "factors": [{"name": "i", "kind": {"categorical": 2}, "stream": "timbre", "label": "instrument_id"}],
        "transforms": [{
            "transform": "pitch_shift",
            "stream": "structure",
            "action": {"additive": {}},
            "params": {"values": [1.0, -1.0]},
            "views_per_item": 2
        }],
        "split": {"train": 0.34, "val": 0.33}
    }));
    axes_eval::synthworld::generate_world(&spec, dir).unwrap()
}

fn edit(manifest: &Path, f: impl FnOnce(&mut Vec<Value>)) {
    let mut lines: Vec<Value> = fs::read_to_string(manifest)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    f(&mut lines);
    let text: String = lines.iter().map(|v| format!("{v}\n")).collect();
    fs::write(manifest, text).unwrap();
}

fn validation_item(r: axes_eval::Result<impl std::fmt::Debug>) -> String {
    match r {
        Err(Error::Validation { item_id, .. }) => item_id,
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn well_formed_manifest_loads() {
    let d = tempfile::tempdir().unwrap();
    let m = tiny(d.path());
    let ds = load_manifest(&m).unwrap();
    assert_eq!(ds.records().len(), 9);
    assert_eq!(ds.embedding("item00000", Stream::Structure).unwrap().data.shape(), (2, 3));
    assert_eq!(ds.content_hash().len(), 64);

    let pairs = pair_views(&ds, Stream::Structure, Transform::PitchShift).unwrap();
    assert_eq!(pairs.len(), 6);
    for p in &pairs {
        assert_eq!(p.view.base_item_id, p.clean.item_id);
    }
    let ids: Vec<_> = pairs.iter().map(|p| p.transformed.item_id.clone()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
    assert!(matches!(pair_views(&ds, Stream::Structure, Transform::None), Err(Error::Empty(_))));
    assert!(matches!(pair_views(&ds, Stream::Structure, Transform::TimeStretch), Err(Error::Empty(_))));
}

#[test]
fn reserialization_is_byte_identical() {
    let d = tempfile::tempdir().unwrap();
    let m = tiny(d.path());
    let original = fs::read_to_string(&m).unwrap();
    let ds = load_manifest(&m).unwrap();
    assert_eq!(ds.manifest().to_canonical_string().unwrap(), original);

    // key order and whitespace in the input do not matter
    let shuffled: String = original
        .lines()
        .map(|l| {
            let v: Value = serde_json::from_str(l).unwrap();
            format!("{}\n", serde_json::to_string_pretty(&v).unwrap().replace('\n', " "))
        })
        .collect();
    assert_eq!(DatasetManifest::parse(&shuffled).unwrap().to_canonical_string().unwrap(), original);
}

#[test]
fn dangling_base_is_named() {
    let d = tempfile::tempdir().unwrap();
    let m = tiny(d.path());
    edit(&m, |l| l[2]["view"]["base_item_id"] = json!("ghost"));
    let id = validation_item(load_manifest(&m));
    assert!(id.starts_with("item00000.pitch_shift"), "{id}");
}

#[test]
fn base_in_another_split_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let m = tiny(d.path());
    edit(&m, |l| {
        let other = l.iter().skip(1).find(|r| r["split"] != l[1]["split"] && r["view"].is_null()).unwrap();
        let base = other["item_id"].clone();
        l[2]["view"]["base_item_id"] = base;
    });
    validation_item(load_manifest(&m));
}

#[test]
fn declared_dim_must_match_tensor() {
    let d = tempfile::tempdir().unwrap();
    let m = tiny(d.path());
    let path = d.path().join("tensors/item00001.structure.npy");
    let mut f = fs::File::create(&path).unwrap();
    npy::write_f32(&mut f, (2, 4), &[0.0; 8]).unwrap();
    assert_eq!(validation_item(load_manifest(&m)), "item00001");
}

#[test]
fn non_finite_tensor_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let m = tiny(d.path());
    let path = d.path().join("tensors/item00002.timbre.npy");
    let mut f = fs::File::create(&path).unwrap();
    npy::write_f32(&mut f, (1, 2), &[0.0, f64::NAN]).unwrap();
    assert_eq!(validation_item(load_manifest(&m)), "item00002");
}

#[test]
fn duplicate_ids_are_rejected() {
    let d = tempfile::tempdir().unwrap();
    let m = tiny(d.path());
    edit(&m, |l| {
        let dup = l[1].clone();
        l.push(dup);
    });
    assert_eq!(validation_item(load_manifest(&m)), "item00000");
}

#[test]
fn clean_records_must_have_zero_params() {
    let d = tempfile::tempdir().unwrap();
    let m = tiny(d.path());
    edit(&m, |l| {
        l[1]["view"] = json!({"base_item_id": "item00000", "transform": "none", "param_raw": 1.0, "param_norm": 0.0});
    });
    assert_eq!(validation_item(load_manifest(&m)), "item00000");
}

#[test]
fn param_norm_must_follow_header_constants() {
    let d = tempfile::tempdir().unwrap();
    let m = tiny(d.path());
    edit(&m, |l| l[2]["view"]["param_norm"] = json!(0.5));
    validation_item(load_manifest(&m));
}

#[test]
fn malformed_lines_report_line_numbers() {
    let d = tempfile::tempdir().unwrap();
    let m = tiny(d.path());
    let original = fs::read_to_string(&m).unwrap();
    fs::write(&m, format!("{original}{{not json\n")).unwrap();
    match load_manifest(&m) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 11),
        other => panic!("{other:?}"),
    }
    fs::write(&m, &original).unwrap();
    edit(&m, |l| l[3]["surprise"] = json!(1));
    assert!(matches!(load_manifest(&m), Err(Error::Parse { line: 4, .. })));
}

#[test]
fn missing_tensor_file_is_an_error() {
    let d = tempfile::tempdir().unwrap();
    let m = tiny(d.path());
    fs::remove_file(d.path().join("tensors/item00001.timbre.npy")).unwrap();
    assert!(load_manifest(&m).is_err());
}

#[test]
fn content_hash_covers_tensor_files() {
    let d = tempfile::tempdir().unwrap();
    let m = tiny(d.path());
    let before = load_manifest(&m).unwrap().content_hash().to_string();
    assert_eq!(load_manifest(&m).unwrap().content_hash(), before);
    let mut f = fs::File::create(d.path().join("tensors/item00002.timbre.npy")).unwrap();
    npy::write_f32(&mut f, (1, 2), &[0.25, 0.5]).unwrap();
    drop(f);
    assert_ne!(load_manifest(&m).unwrap().content_hash(), before);
}
