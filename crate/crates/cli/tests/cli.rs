//! End-to-end command tests: generate -> train -> evaluate -> report on a
//! small filtered catalog, plus the documented exit codes.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_xtsc-bench"))
}

fn scratch(label: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("xtsc_cli_{label}_{}", std::process::id()));
    std::fs::remove_dir_all(&dir).ok();
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path) -> PathBuf {
    let path = dir.join("config.json");
    let config = serde_json::json!({
        "seed": 11,
        "data_root": dir.join("data"),
        "types": ["gaussian_middle_uni"],
        "models": ["lstm"],
        "explainers": ["saliency", "occlusion"],
        "metrics": ["complexity", "racc"],
        "workers": 2,
        "train_instances": 100,
        "test_instances": 6
    });
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

#[test]
fn full_pipeline_round_trip() {
    let dir = scratch("pipeline");
    let config = write_config(&dir);
    let data = dir.join("data");

    // generate: respects the type filter, writes manifests.
    let out = bin().args(["generate", "--config"]).arg(&config).output().unwrap();
    assert!(out.status.success(), "generate failed: {}", String::from_utf8_lossy(&out.stderr));
    let catalog_dir = data.join("catalog");
    assert!(catalog_dir.join("catalog_manifest.json").exists());
    assert!(catalog_dir.join("run_manifest.json").exists());
    assert!(catalog_dir.join("gaussian_middle_uni/manifest.json").exists());
    assert!(catalog_dir.join("gaussian_middle_uni/train.csv").exists());

    // Re-running without --force refuses to clobber (exit 4) and with
    // --force reproduces the identical tree.
    let out = bin().args(["generate", "--config"]).arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
    let before = std::fs::read(catalog_dir.join("gaussian_middle_uni/train.csv")).unwrap();
    let out = bin().args(["generate", "--force", "--config"]).arg(&config).output().unwrap();
    assert!(out.status.success());
    let after = std::fs::read(catalog_dir.join("gaussian_middle_uni/train.csv")).unwrap();
    assert_eq!(before, after);

    // Evaluating before training reports the missing capability (exit 2).
    let out = bin().args(["evaluate", "--config"]).arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    // train: writes checkpoints plus accuracy.csv; rerun resumes.
    let out = bin().args(["train", "--config"]).arg(&config).output().unwrap();
    assert!(out.status.success(), "train failed: {}", String::from_utf8_lossy(&out.stderr));
    let models = data.join("models");
    let ckpt = models.join("gaussian_middle_uni/gated_recurrent");
    assert!(ckpt.join("model.json").exists());
    assert!(ckpt.join("params.bin").exists());
    let accuracy_csv = std::fs::read_to_string(models.join("accuracy.csv")).unwrap();
    let mut lines = accuracy_csv.lines();
    assert_eq!(lines.next(), Some("dataset,architecture,train_acc,test_acc,epochs_run"));
    let row = lines.next().unwrap();
    assert!(row.starts_with("gaussian_middle_uni,gated_recurrent,"), "{row}");

    let params_before = std::fs::read(ckpt.join("params.bin")).unwrap();
    let out = bin().args(["train", "--config"]).arg(&config).output().unwrap();
    assert!(out.status.success());
    let params_after = std::fs::read(ckpt.join("params.bin")).unwrap();
    assert_eq!(params_before, params_after, "resume must not retrain");

    // evaluate: emits the report set.
    let report_dir = dir.join("report");
    let out = bin()
        .args(["evaluate", "--config"])
        .arg(&config)
        .args(["--out"])
        .arg(&report_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "evaluate failed: {}", String::from_utf8_lossy(&out.stderr));
    for file in ["records.csv", "stats.csv", "stats.json", "run_manifest.json"] {
        assert!(report_dir.join(file).exists(), "missing {file}");
    }
    assert!(report_dir.join("boxplot_complexity.svg").exists());
    let records = std::fs::read_to_string(report_dir.join("records.csv")).unwrap();
    // 1 dataset x 1 model x 2 explainers x 6 instances x 2 metrics.
    assert_eq!(records.lines().count(), 1 + 24);
    let manifest = std::fs::read_to_string(report_dir.join("run_manifest.json")).unwrap();
    assert!(manifest.contains("resolved_config"));

    // Restricting explainers/metrics restricts the records.
    let narrow_dir = dir.join("report_narrow");
    let out = bin()
        .args(["evaluate", "--config"])
        .arg(&config)
        .args(["--explainers", "saliency", "--metrics", "complexity", "--out"])
        .arg(&narrow_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let records = std::fs::read_to_string(narrow_dir.join("records.csv")).unwrap();
    assert_eq!(records.lines().count(), 1 + 6);
    assert!(records.lines().skip(1).all(|l| l.starts_with("complexity,") && l.contains(",saliency,")));

    // report: re-renders stats from records.csv.
    let rerender = dir.join("rerender");
    let out = bin()
        .args(["report", "--records"])
        .arg(report_dir.join("records.csv"))
        .args(["--out"])
        .arg(&rerender)
        .output()
        .unwrap();
    assert!(out.status.success(), "report failed: {}", String::from_utf8_lossy(&out.stderr));
    let original = std::fs::read(report_dir.join("stats.csv")).unwrap();
    let rerendered = std::fs::read(rerender.join("stats.csv")).unwrap();
    assert_eq!(original, rerendered);

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn custom_data_with_attribution_files_scores_without_a_model() {
    let dir = scratch("custom");
    let config = dir.join("config.json");
    std::fs::write(
        &config,
        serde_json::to_string(&serde_json::json!({
            "seed": 21,
            "data_root": dir.join("data"),
            "types": ["gaussian_middle_uni"],
            "train_instances": 6,
            "test_instances": 3
        }))
        .unwrap(),
    )
    .unwrap();
    let out = bin().args(["generate", "--config"]).arg(&config).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dataset_dir = dir.join("data/catalog/gaussian_middle_uni");

    // Hand-written external attribution for test instance 1.
    let attrs = dir.join("attrs");
    std::fs::create_dir_all(&attrs).unwrap();
    let scores: Vec<f64> = (0..50).map(|i| (i as f64) / 50.0).collect();
    std::fs::write(
        attrs.join("inst1.attr.json"),
        serde_json::to_string(&serde_json::json!({
            "format_version": "1.0",
            "explainer": "external_tool",
            "kind": "attribution",
            "target_class": 1,
            "n_features": 1,
            "t_steps": 50,
            "instance_index": 1,
            "scores": scores
        }))
        .unwrap(),
    )
    .unwrap();

    let report = dir.join("report");
    let out = bin()
        .args(["evaluate", "--config"])
        .arg(&config)
        .args(["--custom-data"])
        .arg(&dataset_dir)
        .args(["--attributions"])
        .arg(&attrs)
        .args(["--metrics", "complexity,racc", "--out"])
        .arg(&report)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let records = std::fs::read_to_string(report.join("records.csv")).unwrap();
    let rows: Vec<&str> = records.lines().skip(1).collect();
    assert_eq!(rows.len(), 2, "{records}");
    assert!(rows.iter().all(|r| r.contains(",external_tool,1,")));

    // Metrics that need a live model are refused without one.
    let out = bin()
        .args(["evaluate", "--config"])
        .arg(&config)
        .args(["--custom-data"])
        .arg(&dataset_dir)
        .args(["--attributions"])
        .arg(&attrs)
        .args(["--metrics", "faithfulness"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = scratch("config_err");
    // Unknown explainer name.
    let out = bin()
        .args(["evaluate", "--explainers", "mystery", "--seed", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Unreadable config file.
    let out = bin()
        .args(["generate", "--config"])
        .arg(dir.join("missing.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Unknown config field.
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{\"data_rot\": \"x\"}").unwrap();
    let out = bin().args(["generate", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn empty_selection_exits_with_code_three() {
    let dir = scratch("empty_sel");
    let config = dir.join("config.json");
    std::fs::write(
        &config,
        serde_json::to_string(&serde_json::json!({
            "seed": 3,
            "data_root": dir.join("data"),
            "types": ["gaussian_rare_time_uni"],
            "train_instances": 4,
            "test_instances": 2
        }))
        .unwrap(),
    )
    .unwrap();
    let out = bin().args(["generate", "--config"]).arg(&config).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // Filter that matches nothing.
    let out = bin()
        .args(["train", "--types", "no_such_dataset", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn missing_catalog_is_an_io_error() {
    let dir = scratch("nocat");
    let out = bin()
        .args(["train", "--seed", "1"])
        .env("XTSC_BENCH_HOME", dir.join("void"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::remove_dir_all(&dir).ok();
}
