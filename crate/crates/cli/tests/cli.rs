use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn emseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emseg")).args(args).output().unwrap()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn segment_without_image_source_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = emseg(&["segment", "--init", "circle:64,64,50", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("image source"));
    assert_eq!(emseg(&["segment", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(emseg(&[]).status.code(), Some(1));
}

#[test]
fn segment_bimodal_scene_with_auto_truth() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = emseg(&["segment", "--scene", "bimodal", "--init", "circle:64,64,50", "--model", "ems", "--truth", "auto", "--snapshot-every", "50", "--out", d]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path());
    assert!(s["dice"].as_f64().unwrap() >= 0.95);
    assert_eq!(s["termination"], "converged");
    assert_eq!(s["config"]["params"]["model"]["kind"], "ems");
    assert!(s["config"]["params"]["stop_window"].is_u64());
    assert!(s["rng"].as_str().unwrap().contains("ChaCha8"));
    for f in ["mask.pgm", "overlay.pgm", "energy.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    assert!(dir.path().join("snapshots/iter_00050.pgm").exists());
}

#[test]
fn segment_ms_triple_junction_records_low_dice() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = emseg(&["segment", "--scene", "triple_junction", "--init", "circle:64,64,55", "--model", "ms", "--truth", "auto", "--out", d]);
    assert_eq!(out.status.code(), Some(0));
    assert!(summary(dir.path())["dice"].as_f64().unwrap() < 0.8);
}

#[test]
fn vanishing_front_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("flat.pgm");
    let mut bytes = b"P5\n32 32\n255\n".to_vec();
    bytes.extend(std::iter::repeat_n(128u8, 32 * 32));
    fs::write(&img, bytes).unwrap();
    let out = emseg(&["segment", "--image", img.to_str().unwrap(), "--init", "circle:16,16,6", "--lambda", "0.2", "--out", dir.path().join("run").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(summary(&dir.path().join("run"))["termination"], "front_vanished");
}

#[test]
fn replaying_a_summary_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let out = emseg(&["segment", "--scene", "four_region", "--noise", "gaussian:0.05:3", "--init", "rect:12,36,58,92", "--presmooth", "1", "--out", a.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let out = emseg(&["segment", "--config", a.join("summary.json").to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["mask.pgm", "overlay.pgm", "energy.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let (mut sa, mut sb) = (summary(&a), summary(&b));
    sa["config"]["out"] = serde_json::Value::Null;
    sb["config"]["out"] = serde_json::Value::Null;
    assert_eq!(sa, sb);
}

#[test]
fn toml_config_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "init = \"circle:64,64,50\"\ntruth = \"auto\"\n[scene]\nwidth = 128\nheight = 128\nkind = \"bimodal_disk\"\ncx = 64\ncy = 64\nr = 30\ninside = 1\noutside = 0\n[params]\nmax_iters = 5\n").unwrap();
    let run = dir.path().join("run");
    let out = emseg(&["segment", "--config", cfg.to_str().unwrap(), "--max-iters", "3", "--out", run.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&run);
    assert_eq!(s["iterations"], 3);
    assert_eq!(s["termination"], "max_iters");
    fs::write(&cfg, "init = \"circle:64,64,50\"\nbogus = 1\n").unwrap();
    let out = emseg(&["segment", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn synth_writes_truth_masks_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let tj = dir.path().join("tj");
    let out = emseg(&["synth", "--kind", "triple_junction", "--size", "128x128", "--out", tj.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    for f in ["scene.pgm", "truth_square.pgm", "truth_black.pgm", "truth_white.pgm"] {
        assert!(tj.join(f).exists(), "{f}");
    }
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = emseg(&["synth", "--kind", "bimodal", "--noise", "saltpepper:0.02:7", "--out", d.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(fs::read(a.join("scene.pgm")).unwrap(), fs::read(b.join("scene.pgm")).unwrap());
    let out = emseg(&["synth", "--kind", "bimodal", "--size", "2x2", "--out", dir.path().join("c").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_suites_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    for suite in ["stencils", "lemma1", "gateaux"] {
        let out = emseg(&["verify", "--suite", suite, "--report", report.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{suite}: {}", String::from_utf8_lossy(&out.stdout));
        let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
        assert_eq!(r["all_pass"], true);
    }
    assert_eq!(emseg(&["verify", "--suite", "nope"]).status.code(), Some(1));
}

#[test]
fn metrics_prints_scores() {
    let dir = tempfile::tempdir().unwrap();
    let out = emseg(&["synth", "--kind", "four_region", "--size", "64x48", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let p = |f: &str| dir.path().join(f).to_str().unwrap().to_string();
    let out = emseg(&["metrics", &p("truth_black.pgm"), &p("truth_black.pgm")]);
    let s: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(s["dice"], 1.0);
    let out = emseg(&["metrics", &p("truth_black.pgm"), &p("truth_white.pgm")]);
    let s: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(s["dice"], 0.0);
    assert_eq!(emseg(&["metrics", &p("truth_black.pgm"), &p("missing.pgm")]).status.code(), Some(1));
}
