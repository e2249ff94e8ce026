#![allow(dead_code)]

use std::path::Path;

use axes_eval::datamodel::{load_manifest, Dataset};
use axes_eval::synthworld::{generate_world, FactorWorldSpec};
use serde_json::{json, Value};

pub fn spec(value: Value) -> FactorWorldSpec {
    FactorWorldSpec::from_json(&value.to_string()).expect("valid world spec")
}

pub fn build(spec: &FactorWorldSpec, dir: &Path) -> Dataset {
    let manifest = generate_world(spec, dir).expect("world generates");
    load_manifest(manifest).expect("world loads")
}

/// Timbre carries a `classes`-way instrument factor, structure a 12-way pitch
/// factor; both one-hot with per-dim noise `noise`.
pub fn planted(n: usize, classes: usize, noise: f64, seed: u64) -> Value {
    json!({
        "n_items": n,
        "seed": seed,
        "dims": {"timbre": classes + 4, "structure": 16},
        "structure_frames": 4,
        "noise_std": noise,
        "factors": [
            {"name": "instrument", "kind": {"categorical": classes}, "stream": "timbre", "label": "instrument_id"},
            {"name": "pitch", "kind": {"categorical": 12}, "stream": "structure", "label": "pitch_class"}
        ]
    })
}

/// Brute-force track F1: for every distinct track, count confusions over all
/// of its items' binary cells and take `2tp / (2tp + fp + fn)` (0 when the
/// track has no positives at all); then average over tracks.
pub fn f1_track_oracle(pred: &[Vec<u8>], truth: &[Vec<u8>], tracks: &[usize]) -> f64 {
    let mut distinct: Vec<usize> = tracks.to_vec();
    distinct.sort();
    distinct.dedup();
    let mut total = 0.0;
    for &track in &distinct {
        let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
        for i in (0..pred.len()).filter(|&i| tracks[i] == track) {
            for (p, t) in pred[i].iter().zip(&truth[i]) {
                match (p, t) {
                    (1, 1) => tp += 1.0,
                    (1, 0) => fp += 1.0,
                    (0, 1) => fn_ += 1.0,
                    _ => {}
                }
            }
        }
        let denom = 2.0 * tp + fp + fn_;
        total += if denom == 0.0 { 0.0 } else { 2.0 * tp / denom };
    }
    total / distinct.len() as f64
}
