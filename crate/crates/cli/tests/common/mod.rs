#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const TEMPLATE: &str = "{instruction}\n{output}";

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn golden() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Runs the binary in `dir` and returns its output.
pub fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corposcope"))
        .args(args)
        .current_dir(dir)
        .env_remove("CORPOSCOPE_THREADS")
        .output()
        .expect("binary runs")
}

/// Runs the binary and fails the test on a non-zero exit.
pub fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "corposcope {} exited {:?}: {}",
        args.join(" "),
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn read(path: impl AsRef<Path>) -> String {
    let path = path.as_ref();
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn json(path: impl AsRef<Path>) -> serde_json::Value {
    serde_json::from_str(&read(path)).unwrap()
}

/// Copies the fixture datasets into `dir` so runs use relative paths.
pub fn stage(dir: &Path) {
    for lang in ["ar", "zh"] {
        let dst = dir.join("data").join(lang);
        std::fs::create_dir_all(&dst).unwrap();
        for entry in std::fs::read_dir(fixtures().join(lang)).unwrap() {
            let p = entry.unwrap().path();
            std::fs::copy(&p, dst.join(p.file_name().unwrap())).unwrap();
        }
    }
    for f in ["scores.csv", "subset_scores.csv"] {
        std::fs::copy(fixtures().join(f), dir.join(f)).unwrap();
    }
}

pub fn datasets(dir: &Path, lang: &str) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir.join("data").join(lang))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|n| format!("data/{lang}/{n}"))
        .collect()
}

/// profile -> pca for both fixture languages, correlate and report for `ar`.
pub fn fixture_pipeline(dir: &Path, extra: &[&str]) {
    stage(dir);
    for lang in ["ar", "zh"] {
        let mut args = vec![
            "profile",
            "--lang",
            lang,
            "--text-template",
            TEMPLATE,
            "--id-field",
            "id",
            "--per-sample",
            "--hdd-draw",
            "5",
            "--kmeans-k",
            "3",
            "--out",
        ];
        let out = format!("profiles/{lang}");
        args.push(&out);
        let inputs = datasets(dir, lang);
        for i in &inputs {
            args.push("--input");
            args.push(i);
        }
        args.extend_from_slice(extra);
        ok(dir, &args);
        let model = format!("pca/{lang}/model.json");
        let mut args = vec!["pca", "--profiles", &out, "--lang", lang, "--out", &model];
        args.extend_from_slice(extra);
        ok(dir, &args);
    }
    let mut args = vec![
        "correlate",
        "--pca",
        "pca/ar/model.json",
        "--scores",
        "scores.csv",
        "--svg",
        "--out",
        "corr",
    ];
    args.extend_from_slice(extra);
    ok(dir, &args);
    let mut args = vec![
        "report",
        "--pca",
        "pca/zh/model.json",
        "--pca",
        "pca/ar/model.json",
        "--heatmap",
        "corr/heatmap.json",
        "--out",
        "report/report.md",
    ];
    args.extend_from_slice(extra);
    ok(dir, &args);
}
