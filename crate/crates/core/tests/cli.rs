use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_poroscale"));
    c.env("RUST_LOG", "warn");
    c
}

fn run(args: &[&str], out: &Path, config: Option<&Path>) -> i32 {
    let mut c = bin();
    c.args(args).arg("--out").arg(out);
    if let Some(cfg) = config {
        c.arg("--config").arg(cfg);
    }
    let o = c.output().unwrap();
    if !o.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&o.stderr));
    }
    o.status.code().expect("exited normally")
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("run_manifest.json")).unwrap()).unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const TINY_CELLS: &str = "[cells]\nresolution = 0.03125\nn_phi = 12\nn_nu = 12\nphi_range = [0.2, 0.4]\nnu_range = [0.2, 0.4]\n";

#[test]
fn gen_cells_small_grid_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "[cells]\nresolution = 0.03125\nn_phi = 2\nn_nu = 2\nphi_range = [0.2, 0.4]\nnu_range = [0.2, 0.4]\n",
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run(&["gen-cells"], &a, Some(&cfg)), 0);
    assert_eq!(run(&["gen-cells"], &b, Some(&cfg)), 0);
    let text = std::fs::read_to_string(a.join("cells.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 4);
    assert_eq!(text, std::fs::read_to_string(b.join("cells.csv")).unwrap());
    let m = manifest(&a);
    assert_eq!(m["command"], "gen-cells");
    assert_eq!(m["status"], "ok");
    assert_eq!(m["config"]["cells"]["n_phi"], 2);
    assert_eq!(m["config"]["seed"], 42);
    assert!(m.get("timestamp").is_none());
    let outputs: Vec<&str> = m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert!(outputs.iter().any(|o| o.ends_with("cells.csv")));
}

#[test]
fn hyper_verification_passes_at_default_and_gates_on_few_increments() {
    let dir = tempfile::tempdir().unwrap();
    let ok = dir.path().join("ok");
    assert_eq!(run(&["verify-hyper"], &ok, None), 0);
    let r: Value =
        serde_json::from_str(&std::fs::read_to_string(ok.join("hyper_report.json")).unwrap())
            .unwrap();
    assert_eq!(r["passed"], true);
    assert_eq!(r["points"].as_array().unwrap().len(), 4);
    assert!(ok.join("hyper.csv").exists());

    let few = dir.path().join("few");
    assert_eq!(run(&["verify-hyper", "--increments", "10"], &few, None), 2);
    let m = manifest(&few);
    assert_eq!(m["status"], "gate_failed");
    assert_eq!(m["overrides"]["increments"], 10);
    assert_eq!(
        m["config"]["hyper"]["increments"],
        serde_json::json!([1, 10])
    );
}

#[test]
fn errors_exit_one_and_still_write_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("missing");
    assert_eq!(run(&["consolidate"], &out, None), 1);
    let m = manifest(&out);
    assert_eq!(m["status"], "error");
    assert!(m["message"]
        .as_str()
        .unwrap()
        .contains("surrogate bundle missing"));

    let bad = write_config(dir.path(), "bad.toml", "[loading]\nmagnitud = 3e6\n");
    let out = dir.path().join("bad");
    assert_eq!(run(&["consolidate", "--linear"], &out, Some(&bad)), 1);
    let m = manifest(&out);
    assert_eq!(m["status"], "error");
    assert!(m["config"].is_null());

    let o = bin().arg("no-such-command").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn linear_consolidation_writes_series_and_echoes_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "lin.toml",
        "[geometry]\nelements = 10\n[solver]\nend_time = 1000.0\nsamples = 10\nsnapshot_times = [10.0, 100.0]\n[cells]\nresolution = 0.0625\n",
    );
    let out = dir.path().join("lin");
    assert_eq!(
        run(
            &["consolidate", "--linear", "--increments", "4"],
            &out,
            Some(&cfg)
        ),
        0
    );
    let m = manifest(&out);
    assert_eq!(m["config"]["mode"], "linear");
    assert_eq!(m["config"]["loading"]["ramp_increments"], 4);
    assert_eq!(m["config"]["geometry"]["elements"], 10);
    assert_eq!(m["overrides"]["linear"], true);
    for f in ["series", "nodal", "points"] {
        assert!(
            out.join(format!("consolidation_linear_{f}.csv")).exists(),
            "{f}"
        );
    }
    assert!(!out.join("consolidation_remodelled_series.csv").exists());
    let s: Value = serde_json::from_str(
        &std::fs::read_to_string(out.join("consolidation_summary.json")).unwrap(),
    )
    .unwrap();
    let run0 = &s["runs"][0];
    assert_eq!(run0["linear"], true);
    assert!(run0["mass_balance_relative"].as_f64().unwrap() < 0.01);
}

#[test]
fn undertrained_bundle_is_saved_but_gated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "t.toml",
        &format!(
            "{TINY_CELLS}[train]\nmax_epochs = 20\npatience = 20\nvalidation_fraction = 0.1\n"
        ),
    );
    let out = dir.path().join("t");
    assert_eq!(run(&["gen-cells"], &out, Some(&cfg)), 0);
    assert_eq!(run(&["train"], &out, Some(&cfg)), 2);
    assert_eq!(manifest(&out)["status"], "gate_failed");
    let first = std::fs::read(out.join("bundle.json")).unwrap();
    assert!(out.join("train_report.json").exists());
    assert_eq!(run(&["train"], &out, Some(&cfg)), 2);
    assert_eq!(
        first,
        std::fs::read(out.join("bundle.json")).unwrap(),
        "training is not deterministic"
    );

    assert_eq!(run(&["verify-ann"], &out, Some(&cfg)), 2);
    let r: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("ann_report.json")).unwrap())
            .unwrap();
    assert_eq!(r["passed"], false);
    for o in r["outputs"].as_array().unwrap() {
        let (a, b) = (
            o["recorded_validation_error"].as_f64().unwrap(),
            o["recomputed_validation_error"].as_f64().unwrap(),
        );
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
    }
}
