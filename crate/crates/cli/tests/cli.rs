use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn clothforge(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_clothforge"));
    cmd.args(args).env_remove("CLOTHFORGE_SEED");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, out: &str, towels: u64, extra: Value) -> PathBuf {
    let mut cfg = json!({
        "master_seed": 11,
        "counts": {"towel": towels, "tshirt": 0, "shorts": 0},
        "max_edge": 0.03,
        "scene": {"camera": {"width": 128, "height": 64, "focal_length": 80.0}},
        "output_dir": out,
    });
    if let (Some(c), Some(e)) = (cfg.as_object_mut(), extra.as_object()) {
        for (k, v) in e {
            c.insert(k.clone(), v.clone());
        }
    }
    let p = dir.join(format!("{out}.json"));
    fs::write(&p, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn generate_ten_towels_twice() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run", 10, json!({}));
    let cfg = cfg.to_str().unwrap();
    let o = clothforge(&["generate", "--config", cfg, "--stage", "all"], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("run");
    let pngs = fs::read_dir(out.join("towel/images")).unwrap().count();
    assert_eq!(pngs, 10);
    let ann = fs::read(out.join("towel/annotations.json")).unwrap();
    let v: Value = serde_json::from_slice(&ann).unwrap();
    assert_eq!(v["images"].as_array().unwrap().len(), 10);
    assert_eq!(v["annotations"].as_array().unwrap().len(), 10);
    let manifest = fs::read(out.join("manifest.json")).unwrap();

    let o = clothforge(&["generate", "--config", cfg, "--workers", "1"], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(out.join("towel/annotations.json")).unwrap(), ann);
    assert_eq!(fs::read(out.join("manifest.json")).unwrap(), manifest);
}

#[test]
fn deform_before_meshes_is_stage_order_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run", 2, json!({}));
    let o = clothforge(&["generate", "--config", cfg.to_str().unwrap(), "--stage", "deform"], &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("meshes"));
}

#[test]
fn invalid_config_reports_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run", 1, json!({"deform": {"fold_radius": [0.2, 0.1]}}));
    let o = clothforge(&["generate", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/deform/fold_radius"), "{}", stderr(&o));

    let cfg = write_config(dir.path(), "run2", 1, json!({"counts": {"towel": "many"}}));
    let o = clothforge(&["generate", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/counts/towel"), "{}", stderr(&o));
}

#[test]
fn missing_config_is_io_error() {
    let o = clothforge(&["generate", "--config", "/nonexistent/cfg.json"], &[]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn seed_override_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run", 1, json!({"deform": {"undeformed": true}}));
    let cfg = cfg.to_str().unwrap();
    let o = clothforge(&["generate", "--config", cfg], &[("CLOTHFORGE_SEED", "0x2a")]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: Value = serde_json::from_slice(&fs::read(dir.path().join("run/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["master_seed"], 42);
    let o = clothforge(&["generate", "--config", cfg], &[("CLOTHFORGE_SEED", "nope")]);
    assert_eq!(o.status.code(), Some(2));
}

/// COCO results built from ground truth with score 1.
fn gt_as_predictions(gt: &Value) -> Value {
    Value::Array(
        gt["annotations"]
            .as_array()
            .unwrap()
            .iter()
            .map(|a| {
                json!({
                    "image_id": a["image_id"],
                    "category_id": a["category_id"],
                    "keypoints": a["keypoints"],
                    "score": 1.0,
                })
            })
            .collect(),
    )
}

#[test]
fn evaluate_against_itself_and_empty() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run", 3, json!({"deform": {"undeformed": true}}));
    assert!(clothforge(&["generate", "--config", cfg.to_str().unwrap()], &[]).status.success());
    let gt_path = dir.path().join("run/towel/annotations.json");
    let gt: Value = serde_json::from_slice(&fs::read(&gt_path).unwrap()).unwrap();
    let gt_s = gt_path.to_str().unwrap();

    let pred = dir.path().join("pred.json");
    fs::write(&pred, gt_as_predictions(&gt).to_string()).unwrap();
    let report = dir.path().join("report.json");
    let o = clothforge(
        &["evaluate", "--gt", gt_s, "--pred", pred.to_str().unwrap(), "--out", report.to_str().unwrap()],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let r: Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert_eq!(r["map"], 1.0);
    assert_eq!(r["akd"], 0.0);
    assert_eq!(r["categories"][0]["ap"], json!([1.0, 1.0, 1.0]));

    fs::write(&pred, "[]").unwrap();
    let o = clothforge(
        &["evaluate", "--gt", gt_s, "--pred", pred.to_str().unwrap(), "--out", report.to_str().unwrap()],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let r: Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert_eq!(r["map"], 0.0);
    assert_eq!(r["akd_defined"], false);
    assert_eq!(r["akd"], Value::Null);
}

#[test]
fn malformed_predictions_are_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    let gt = dir.path().join("gt.json");
    fs::write(&gt, r#"{"images": [], "annotations": [], "categories": []}"#).unwrap();
    let pred = dir.path().join("pred.json");
    fs::write(&pred, "[{\"image_id\": 1,\n \"score\": \"high\"}]").unwrap();
    let out = dir.path().join("r.json");
    let o = clothforge(
        &["evaluate", "--gt", gt.to_str().unwrap(), "--pred", pred.to_str().unwrap(), "--out", out.to_str().unwrap()],
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("pred.json:2:"), "{e}");
    assert!(!out.exists());
}
