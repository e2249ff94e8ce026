mod common;

use std::fs;
use std::path::Path;

use axes_eval::runner::{read_results, run, RunConfig, RESULTS_FILE};
use axes_eval::Error;
use serde_json::{json, Value};

fn world(dir: &Path, seed: u64) -> String {
    let mut w = common::planted(200, 4, 0.3, seed);
    w["transforms"] = json!([{
        "transform": "pitch_shift",
        "stream": "structure",
        "action": {"additive": {}},
        "params": {"values": [-2.0, 2.0]}
    }]);
    let ds = common::build(&common::spec(w), dir);
    ds.root().join("manifest.jsonl").display().to_string()
}

fn config(manifest: &str, out: &Path, extra: Value) -> RunConfig {
    let mut v = json!({
        "datasets": {"model_a": manifest},
        "tasks": [{"name": "S.Instr", "stream": "timbre", "target": "instrument_class"}],
        "axes": ["informativeness"],
        "seeds": [0],
        "output_dir": out,
    });
    for (k, x) in extra.as_object().unwrap() {
        v[k] = x.clone();
    }
    RunConfig::from_json(&v.to_string()).unwrap()
}

#[test]
fn one_cell_grid_writes_one_line() {
    let d = tempfile::tempdir().unwrap();
    let m = world(&d.path().join("w"), 1);
    let cfg = config(&m, &d.path().join("out"), json!({}));
    let summary = run(&cfg).unwrap();
    assert_eq!(summary.exit_code(), 0);
    let text = fs::read_to_string(d.path().join("out").join(RESULTS_FILE)).unwrap();
    assert_eq!(text.lines().count(), 1);
    let r = &read_results(&summary.results_path).unwrap()[0];
    assert_eq!(r.model, "model_a");
    assert_eq!(r.config_fingerprint.len(), 64);
    assert!(!d.path().join("out/results.partial.jsonl").exists());
}

fn full_grid(m: &str, out: &Path, workers: usize) -> RunConfig {
    config(
        m,
        out,
        json!({
            "tasks": [
                {"name": "S.Instr", "stream": "timbre", "target": "instrument_class"},
                {"name": "S.Notes", "stream": "structure", "target": "pitch_class"}
            ],
            "axes": ["informativeness", "disentanglement_delta", "p_equivariance",
                     "r_equivariance", "invariance", "mig"],
            "transforms": [
                {"stream": "structure", "transform": "pitch_shift"},
                {"stream": "timbre", "transform": "pitch_shift", "axes": ["invariance"]}
            ],
            "mig_factors": ["instrument_class", "pitch_class"],
            "seeds": [0, 1],
            "workers": workers,
        }),
    )
}

#[test]
fn reruns_and_worker_counts_are_byte_identical() {
    let d = tempfile::tempdir().unwrap();
    let m = world(&d.path().join("w"), 2);
    let a = run(&full_grid(&m, &d.path().join("a"), 1)).unwrap();
    let b = run(&full_grid(&m, &d.path().join("b"), 4)).unwrap();
    assert_eq!(a.exit_code(), 0, "{:?}", a.failed);
    // 2 tasks x 2 task axes, P and R on structure, invariance on both streams,
    // mig on both streams; times 2 seeds
    assert_eq!(a.cells, (4 + 2 + 2 + 2) * 2);
    assert_eq!(a.computed, a.cells);
    let fa = fs::read(&a.results_path).unwrap();
    assert_eq!(fa, fs::read(&b.results_path).unwrap());

    // rerun into the same directory reuses everything
    let again = run(&full_grid(&m, &d.path().join("a"), 2)).unwrap();
    assert_eq!(again.reused, again.cells);
    assert_eq!(fa, fs::read(&again.results_path).unwrap());

    let lines: Vec<String> = String::from_utf8(fa.clone()).unwrap().lines().map(String::from).collect();
    let rs = read_results(&a.results_path).unwrap();
    let keys: Vec<_> = rs.iter().map(|r| r.sort_key()).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert_eq!(lines.len(), rs.len());
}

#[test]
fn resumed_run_equals_fresh_run() {
    let d = tempfile::tempdir().unwrap();
    let m = world(&d.path().join("w"), 3);
    let fresh = run(&full_grid(&m, &d.path().join("fresh"), 2)).unwrap();
    let fresh_bytes = fs::read(&fresh.results_path).unwrap();

    // an interrupted run left a few appended results and a torn last line
    let out = d.path().join("resumed");
    fs::create_dir_all(&out).unwrap();
    let text = String::from_utf8(fresh_bytes.clone()).unwrap();
    let mut partial: String = text.lines().step_by(3).map(|l| format!("{l}\n")).collect();
    partial.push_str("{\"axis\": \"inform");
    fs::write(out.join("results.partial.jsonl"), partial).unwrap();
    let resumed = run(&full_grid(&m, &out, 2)).unwrap();
    assert!(resumed.reused > 0 && resumed.computed > 0);
    assert_eq!(fs::read(&resumed.results_path).unwrap(), fresh_bytes);
}

#[test]
fn changed_settings_invalidate_cached_cells() {
    let d = tempfile::tempdir().unwrap();
    let m = world(&d.path().join("w"), 4);
    let out = d.path().join("out");
    run(&config(&m, &out, json!({}))).unwrap();
    let changed = config(&m, &out, json!({"probe": {"learning_rate": 0.002}}));
    let s = run(&changed).unwrap();
    assert_eq!((s.computed, s.reused), (1, 0));
}

#[test]
fn missing_pianorolls_skip_the_cell() {
    let d = tempfile::tempdir().unwrap();
    let m = world(&d.path().join("w"), 5);
    let cfg = config(
        &m,
        &d.path().join("out"),
        json!({"tasks": [
            {"name": "S.Instr", "stream": "timbre", "target": "instrument_class"},
            {"name": "MPE", "stream": "structure", "target": "multipitch"}
        ]}),
    );
    let s = run(&cfg).unwrap();
    assert_eq!(s.exit_code(), 2);
    assert_eq!(s.skipped.len(), 1);
    assert_eq!(read_results(&s.results_path).unwrap().len(), 1);
}

#[test]
fn variants_are_recorded() {
    let d = tempfile::tempdir().unwrap();
    let m = world(&d.path().join("w"), 6);
    let cfg = config(
        &m,
        &d.path().join("out"),
        json!({"datasets": {"base": m, "ablated": m}, "variants": {"ablated": "base"}}),
    );
    let rs = read_results(run(&cfg).unwrap().results_path).unwrap();
    let ablated = rs.iter().find(|r| r.model == "ablated").unwrap();
    assert_eq!(ablated.variant_of.as_deref(), Some("base"));
}

#[test]
fn bad_configs_are_rejected_before_training() {
    let base = json!({
        "datasets": {"m": "x/manifest.jsonl"},
        "tasks": [{"name": "t", "stream": "timbre", "target": "pitch_class"}],
        "axes": ["informativeness"],
        "seeds": [0],
        "output_dir": "out",
    });
    RunConfig::from_json(&base.to_string()).unwrap();
    let with = |k: &str, v: Value| {
        let mut c = base.clone();
        c[k] = v;
        RunConfig::from_json(&c.to_string())
    };
    assert!(with("unknown_key", json!(1)).is_err());
    assert!(matches!(with("seeds", json!([])), Err(Error::Config(_))));
    assert!(matches!(with("axes", json!([])), Err(Error::Config(_))));
    assert!(matches!(with("axes", json!(["invariance"])), Err(Error::Config(_))));
    assert!(matches!(with("axes", json!(["mig"])), Err(Error::Config(_))));
    assert!(matches!(
        with("tasks", json!([{"name": "t", "stream": "timbre", "target": "pitch_class", "metric": "mse"}])),
        Err(Error::Config(_))
    ));

    // a missing dataset aborts the run with nothing written
    let d = tempfile::tempdir().unwrap();
    let mut c = base.clone();
    c["output_dir"] = json!(d.path().join("out"));
    let cfg = RunConfig::from_json(&c.to_string()).unwrap();
    assert!(matches!(run(&cfg), Err(Error::Io { .. })));
    assert!(!d.path().join("out").exists());
}
