mod common;

use std::fs;

use axes_eval::axes::TaskStream;
use axes_eval::datamodel::{load_manifest, pair_views, Split, Stream, Transform};
use axes_eval::synthworld::{generate_world, world_oracle, OracleQuery, WORLD_SPEC_FILE};
use axes_eval::Error;
use serde_json::json;

fn additive_world(n: usize, noise: f64) -> serde_json::Value {
    let mut w = common::planted(n, 4, noise, 7);
    w["transforms"] = json!([{
        "transform": "pitch_shift",
        "stream": "structure",
        "action": {"additive": {}},
        "params": {"values": [-2.0, -1.0, 1.0, 2.0]},
        "views_per_item": 2
    }]);
    w
}

#[test]
fn generated_world_loads_and_counts_match() {
    let dir = tempfile::tempdir().unwrap();
    let spec = common::spec(additive_world(60, 0.1));
    let ds = common::build(&spec, dir.path());
    assert_eq!(ds.records().len(), 60 + 120);
    let clean: usize = [Split::Train, Split::Val, Split::Test]
        .iter()
        .map(|&s| ds.clean_records(s).len())
        .sum();
    assert_eq!(clean, 60);
    assert_eq!(ds.clean_records(Split::Train).len(), 42);
    assert_eq!(ds.clean_records(Split::Val).len(), 9);
    assert_eq!(ds.header().streams[&Stream::Structure].frames, 4);
    assert_eq!(ds.header().vocab.instrument_classes, 4);
    assert!(dir.path().join(WORLD_SPEC_FILE).exists());
    let pairs = pair_views(&ds, Stream::Structure, Transform::PitchShift).unwrap();
    assert_eq!(pairs.len(), 120);
    for p in &pairs {
        assert!([-1.0, -0.5, 0.5, 1.0].contains(&p.param_norm()));
        let base = ds.record(&p.view.base_item_id).unwrap();
        assert_eq!(base.split, p.split);
    }
}

#[test]
fn regeneration_is_byte_identical() {
    let spec = common::spec(additive_world(30, 0.2));
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    generate_world(&spec, a.path()).unwrap();
    generate_world(&spec, b.path()).unwrap();
    let mut names: Vec<_> = fs::read_dir(a.path().join("tensors"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 90 * 2);
    for name in names {
        let rel = std::path::Path::new("tensors").join(name);
        assert_eq!(fs::read(a.path().join(&rel)).unwrap(), fs::read(b.path().join(&rel)).unwrap());
    }
    for f in ["manifest.jsonl", WORLD_SPEC_FILE] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
    }
}

#[test]
fn untouched_stream_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let ds = common::build(&common::spec(additive_world(20, 0.3)), dir.path());
    for p in pair_views(&ds, Stream::Timbre, Transform::PitchShift).unwrap() {
        let clean = ds.record(&p.view.base_item_id).unwrap();
        let view = ds.record(&p.transformed.item_id).unwrap();
        let bytes = |r: &axes_eval::datamodel::ManifestRecord| fs::read(dir.path().join(&r.tensors[&Stream::Timbre])).unwrap();
        assert_eq!(bytes(clean), bytes(view));
    }
}

#[test]
fn different_seed_changes_world() {
    let mut w = additive_world(20, 0.3);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    generate_world(&common::spec(w.clone()), a.path()).unwrap();
    w["seed"] = json!(8);
    generate_world(&common::spec(w), b.path()).unwrap();
    let rel = "tensors/item00000.timbre.npy";
    assert_ne!(fs::read(a.path().join(rel)).unwrap(), fs::read(b.path().join(rel)).unwrap());
}

#[test]
fn invalid_specs_are_config_errors() {
    let mut w = common::planted(50, 4, 0.0, 1);
    w["factors"][0]["leakage"] = json!(1.5);
    assert!(matches!(
        axes_eval::synthworld::FactorWorldSpec::from_json(&w.to_string()),
        Err(Error::Config(_))
    ));
    let mut w = common::planted(50, 4, 0.0, 1);
    w["dims"]["timbre"] = json!(3);
    assert!(matches!(
        axes_eval::synthworld::FactorWorldSpec::from_json(&w.to_string()),
        Err(Error::Config(_))
    ));
    let mut w = common::planted(50, 4, 0.0, 1);
    w["mystery"] = json!(1);
    assert!(axes_eval::synthworld::FactorWorldSpec::from_json(&w.to_string()).is_err());
}

#[test]
fn multipitch_world_has_aligned_rolls() {
    let mut w = common::planted(12, 4, 0.0, 3);
    w["multipitch"] = json!({"label_frames": 10, "pitches": [60, 64, 67], "density": 0.5});
    w["tracks"] = json!(3);
    w["dims"]["structure"] = json!(20);
    let dir = tempfile::tempdir().unwrap();
    let ds = common::build(&common::spec(w), dir.path());
    let rec = &ds.clean_records(Split::Train)[0];
    assert!(rec.labels.group_id.starts_with("track"));
    let emb = ds.embedding(&rec.item_id, Stream::Structure).unwrap();
    let roll = ds.aligned_pianoroll(&rec.item_id, emb.frames()).unwrap();
    for t in 0..emb.frames() {
        for (j, p) in [60, 64, 67].into_iter().enumerate() {
            assert_eq!(roll.get(t, p), emb.data[(t, j)] == 1.0);
        }
    }
}

#[test]
fn oracle_examples() {
    let noiseless = common::spec(common::planted(100, 4, 0.0, 1));
    let acc = world_oracle(
        &noiseless,
        &OracleQuery::BayesAccuracy { factor: "instrument".into(), input: TaskStream::Timbre },
    )
    .unwrap();
    assert_eq!(acc.value, 1.0);
    // the structure stream carries nothing about the instrument
    let acc = world_oracle(
        &noiseless,
        &OracleQuery::BayesAccuracy { factor: "instrument".into(), input: TaskStream::Structure },
    )
    .unwrap();
    assert_eq!(acc.value, 0.25);

    let spec = common::spec(additive_world(50, 0.0));
    let inv = world_oracle(
        &spec,
        &OracleQuery::ExpectedInvariance { stream: Stream::Timbre, transform: Transform::PitchShift },
    )
    .unwrap();
    assert_eq!(inv.value, 1.0);
    let err = world_oracle(
        &spec,
        &OracleQuery::ExpectedInvariance { stream: Stream::Timbre, transform: Transform::TimeStretch },
    );
    assert!(matches!(err, Err(Error::UnsupportedQuery(_))));
}

#[test]
fn oracle_orthogonal_unit_case() {
    // z is a unit one-hot in dims 0..2, u = e2 is orthogonal to it, p = 1
    let spec = common::spec(json!({
        "n_items": 10,
        "seed": 0,
        "dims": {"timbre": 3, "structure": 2},
        "filler_std": 0.0,
        "factors": [
            {"name": "instrument", "kind": {"categorical": 2}, "stream": "timbre", "label": "instrument_id"}
        ],
        "transforms": [{
            "transform": "pitch_shift",
            "stream": "timbre",
            "action": {"additive": {"direction": [0.0, 0.0, 1.0]}},
            "params": {"values": [1.0]},
            "range": [-1.0, 1.0]
        }]
    }));
    let inv = world_oracle(
        &spec,
        &OracleQuery::ExpectedInvariance { stream: Stream::Timbre, transform: Transform::PitchShift },
    )
    .unwrap();
    assert!((inv.value - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
}

#[test]
fn monte_carlo_oracle_matches_closed_form_for_two_classes() {
    // scalar two-class code g*c + N(0, s^2): Bayes accuracy is Phi(g / (2 s))
    let spec = common::spec(json!({
        "n_items": 10,
        "seed": 5,
        "dims": {"timbre": 1, "structure": 1},
        "noise_std": 1.0,
        "factors": [
            {"name": "f", "kind": {"categorical": 2}, "stream": "timbre", "encoding": "scalar", "gain": 2.0}
        ]
    }));
    let acc = world_oracle(&spec, &OracleQuery::BayesAccuracy { factor: "f".into(), input: TaskStream::Timbre }).unwrap();
    let phi_1 = 0.841_344_746_068_542_9;
    assert!((acc.value - phi_1).abs() < 4.0 * acc.std_error, "{acc:?}");
}

#[test]
fn loaded_world_passes_validation_again() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate_world(&common::spec(additive_world(15, 0.1)), dir.path()).unwrap();
    let ds = load_manifest(&manifest).unwrap();
    ds.manifest().validate_structure().unwrap();
}
