//! End-to-end checks of the command-line surface: pipeline plumbing, config
//! overrides and exit codes.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pmlda"))
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pmlda-cli-{}-{name}", std::process::id()));
    std::fs::remove_dir_all(&dir).ok();
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_pgm(path: &Path, height: usize, width: usize, f: impl Fn(usize, usize) -> u8) {
    let mut bytes = format!("P5\n{width} {height}\n255\n").into_bytes();
    for r in 0..height {
        for c in 0..width {
            bytes.push(f(r, c));
        }
    }
    std::fs::write(path, bytes).unwrap();
}

#[test]
fn full_pipeline_runs_and_scores() {
    let dir = workdir("pipeline");
    let img = dir.join("img.pgm");
    // Two vertical bands with different textures.
    write_pgm(&img, 18, 18, |r, c| {
        if c < 9 {
            40
        } else if (r + c) % 2 == 0 {
            210
        } else {
            150
        }
    });
    let mask = dir.join("mask.csv");
    let mut mask_text = String::new();
    for _ in 0..18 {
        let row: Vec<&str> = (0..18).map(|c| if c >= 9 { "1" } else { "0" }).collect();
        mask_text.push_str(&row.join(","));
        mask_text.push('\n');
    }
    std::fs::write(&mask, mask_text).unwrap();

    let corpus = dir.join("corpus.csv");
    let layout = dir.join("layout.csv");
    let status = bin()
        .args(["features", "--image"])
        .arg(&img)
        .args(["--extractor", "intensity-entropy", "--entropy-window", "5"])
        .args(["--window", "6", "--stride", "6", "--out"])
        .arg(&corpus)
        .arg("--layout-out")
        .arg(&layout)
        .status()
        .unwrap();
    assert!(status.success());

    let trace = dir.join("trace.csv");
    let state = dir.join("state.txt");
    let memb = dir.join("memb.csv");
    let status = bin()
        .args(["fit", "--corpus"])
        .arg(&corpus)
        .args(["--alpha", "1,1", "--sweeps", "150", "--seed", "5", "--trace"])
        .arg(&trace)
        .arg("--state")
        .arg(&state)
        .arg("--memberships")
        .arg(&memb)
        .status()
        .unwrap();
    assert!(status.success());

    let status = bin()
        .args(["segment", "--memberships"])
        .arg(&memb)
        .arg("--layout")
        .arg(&layout)
        .arg("--out-prefix")
        .arg(dir.join("seg").to_str().unwrap())
        .status()
        .unwrap();
    assert!(status.success());
    for suffix in ["topic0.csv", "topic0.pgm", "topic1.csv", "crisp.pgm", "transition.pgm"] {
        assert!(dir.join(format!("seg.{suffix}")).exists(), "missing seg.{suffix}");
    }

    // One of the two topic maps must detect the right band nearly perfectly.
    let mut best_auc = 0.0f64;
    for topic in 0..2 {
        let out = bin()
            .args(["eval-roc", "--scores"])
            .arg(dir.join(format!("seg.topic{topic}.csv")))
            .arg("--truth")
            .arg(&mask)
            .arg("--roc")
            .arg(dir.join(format!("roc{topic}.csv")))
            .output()
            .unwrap();
        assert!(out.status.success());
        let stdout = String::from_utf8(out.stdout).unwrap();
        let auc: f64 = stdout.trim().strip_prefix("auc = ").unwrap().parse().unwrap();
        best_auc = best_auc.max(auc);
    }
    assert!(best_auc > 0.95, "best AUC {best_auc}");

    let roc_text = std::fs::read_to_string(dir.join("roc0.csv")).unwrap();
    assert!(roc_text.starts_with("threshold,fpr,tpr\n"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn fcm_baseline_produces_compatible_memberships() {
    let dir = workdir("fcm");
    let corpus = dir.join("corpus.csv");
    let truth = dir.join("truth.csv");
    let status = bin()
        .args(["generate", "--means", "-4,-4;6,6", "--docs", "3", "--words", "40"])
        .args(["--seed", "11", "--out"])
        .arg(&corpus)
        .arg("--truth")
        .arg(&truth)
        .status()
        .unwrap();
    assert!(status.success());

    let memb = dir.join("fcm.csv");
    let status = bin()
        .args(["fcm", "--corpus"])
        .arg(&corpus)
        .args(["--clusters", "2", "--memberships"])
        .arg(&memb)
        .status()
        .unwrap();
    assert!(status.success());

    let text = std::fs::read_to_string(&memb).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("doc_id,word_index,z0,z1"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 120);
    for row in rows {
        let fields: Vec<f64> = row.split(',').skip(2).map(|v| v.parse().unwrap()).collect();
        assert!((fields.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_file_is_used_and_flags_override() {
    let dir = workdir("config");
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "alpha = 1,1\nlambda = 1\nt = 30\nseed = 9\n").unwrap();
    let corpus = dir.join("corpus.csv");
    let truth = dir.join("truth.csv");
    assert!(bin()
        .args(["generate", "--means", "0,0;4,4", "--docs", "2", "--words", "15", "--out"])
        .arg(&corpus)
        .arg("--truth")
        .arg(&truth)
        .status()
        .unwrap()
        .success());

    let trace = dir.join("trace.csv");
    assert!(bin()
        .args(["fit", "--corpus"])
        .arg(&corpus)
        .arg("--config")
        .arg(&cfg)
        .args(["--sweeps", "12"])
        .arg("--trace")
        .arg(&trace)
        .arg("--state")
        .arg(dir.join("state.txt"))
        .arg("--memberships")
        .arg(dir.join("memb.csv"))
        .status()
        .unwrap()
        .success());
    // The flag override wins over t = 30 in the file.
    let lines = std::fs::read_to_string(&trace).unwrap().lines().count();
    assert_eq!(lines, 13, "12 sweeps plus the header");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn input_errors_exit_with_one() {
    let dir = workdir("errors");
    // Missing corpus file.
    let status = bin()
        .args(["fit", "--corpus"])
        .arg(dir.join("nope.csv"))
        .arg("--trace")
        .arg(dir.join("t.csv"))
        .arg("--state")
        .arg(dir.join("s.txt"))
        .arg("--memberships")
        .arg(dir.join("m.csv"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // Unknown extractor.
    let status = bin()
        .args(["features", "--image"])
        .arg(dir.join("img.pgm"))
        .args(["--extractor", "bogus", "--out"])
        .arg(dir.join("c.csv"))
        .arg("--layout-out")
        .arg(dir.join("l.csv"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // Bad usage.
    let status = bin().args(["fit"]).status().unwrap();
    assert_eq!(status.code(), Some(1));

    // Help is success.
    let status = bin().args(["--help"]).status().unwrap();
    assert_eq!(status.code(), Some(0));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn single_class_truth_is_a_numerical_input_error() {
    let dir = workdir("roc-degenerate");
    let scores = dir.join("scores.csv");
    std::fs::write(&scores, "0.5,0.25\n0.75,0.5\n").unwrap();
    let mask = dir.join("mask.csv");
    std::fs::write(&mask, "1,1\n1,1\n").unwrap();
    let status = bin()
        .args(["eval-roc", "--scores"])
        .arg(&scores)
        .arg("--truth")
        .arg(&mask)
        .arg("--roc")
        .arg(dir.join("roc.csv"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    std::fs::remove_dir_all(&dir).ok();
}
