use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use csca::imageio::{read_pnm, save_disparity, save_image};
use csca::{ColorImage, DisparityMap};
use serde_json::Value;
use tempfile::TempDir;

const W: usize = 48;
const H: usize = 32;
const D: usize = 3;

fn csca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csca"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn texture(x: usize, y: usize) -> [f32; 3] {
    let v = ((x * 7919 + y * 104729) ^ (x * y * 31)) % 251;
    let f = v as f32 / 250.0;
    [f, (f * 0.7 + 0.1).min(1.0), 1.0 - f]
}

/// Writes a pair whose right view is the left shifted by `D` pixels.
fn write_pair(dir: &Path) -> [PathBuf; 3] {
    let left = ColorImage::from_fn(W, H, |x, y| texture(x + D, y)).unwrap();
    let right = ColorImage::from_fn(W, H, |x, y| texture(x + 2 * D, y)).unwrap();
    let gt = DisparityMap::new(W, H, vec![D as f32; W * H]).unwrap();
    let paths = [dir.join("left.ppm"), dir.join("right.ppm"), dir.join("gt.pgm")];
    save_image(&left, &paths[0]).unwrap();
    save_image(&right, &paths[1]).unwrap();
    save_disparity(&gt, 4.0, &paths[2]).unwrap();
    paths
}

fn pair_args(paths: &[PathBuf; 3]) -> Vec<String> {
    vec![
        "--left".into(),
        paths[0].display().to_string(),
        "--right".into(),
        paths[1].display().to_string(),
        "--gt".into(),
        paths[2].display().to_string(),
        "--max-disparity".into(),
        "8".into(),
        "--gt-scale".into(),
        "4".into(),
    ]
}

fn json_lines(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).expect("stdout is JSON lines"))
        .collect()
}

fn run_with(dir: &TempDir, extra: &[&str]) -> Output {
    let paths = write_pair(dir.path());
    let mut args: Vec<String> = vec!["run".into()];
    args.extend(pair_args(&paths));
    args.extend(extra.iter().map(|s| s.to_string()));
    csca(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn run_prints_one_report() {
    let dir = TempDir::new().unwrap();
    let out = run_with(&dir, &["--method", "box"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = json_lines(&out);
    assert_eq!(lines.len(), 1);
    let r = &lines[0];
    for key in ["name", "method", "cross_scale", "error_rate", "avg_err", "threshold", "evaluated_pixels", "runtime_ms"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    assert_eq!(r["method"], "S+BOX");
    assert_eq!(r["threshold"], 1.0);
    assert_eq!(r["evaluated_pixels"], (W * H) as u64);
}

#[test]
fn run_writes_disparity() {
    let dir = TempDir::new().unwrap();
    let disp = dir.path().join("out.pgm");
    let out = run_with(&dir, &["--method", "nl", "--out-disp", disp.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let pnm = read_pnm(&disp).unwrap();
    assert_eq!((pnm.width, pnm.height, pnm.channels), (W, H, 1));
    // interior pixels recover the shift, stored at gt_scale 4
    assert_eq!(pnm.pixels[(H / 2) * W + W / 2], (D * 4) as u8);
}

#[test]
fn lambda_zero_equals_single_scale() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.pgm");
    let b = dir.path().join("b.pgm");
    assert!(run_with(&dir, &["--lambda", "0", "--out-disp", a.to_str().unwrap()]).status.success());
    assert!(run_with(&dir, &["--cross-scale", "false", "--out-disp", b.to_str().unwrap()]).status.success());
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "method = box\nlambda = -1\n").unwrap();
    let out = run_with(&dir, &["--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lambda >= 0"));

    let out = run_with(&dir, &["--config", cfg.to_str().unwrap(), "--lambda", "1.0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json_lines(&out)[0]["method"], "S+BOX");
}

#[test]
fn bad_config_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "colour = red\n").unwrap();
    let out = run_with(&dir, &["--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key"));

    let out = run_with(&dir, &["--scales", "many"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run_with(&dir, &["--set", "gf_eps"]);
    assert_eq!(out.status.code(), Some(2));
}

fn write_manifest(dir: &Path, names: &[&str], broken: Option<&str>) -> PathBuf {
    write_pair(dir);
    let mut text = String::from("# test manifest\n");
    for name in names {
        let left = if Some(*name) == broken { "missing.ppm" } else { "left.ppm" };
        text.push_str(&format!("{name} {left} right.ppm gt.pgm - 8 4\n"));
    }
    let path = dir.join("manifest.txt");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn bench_counts_lines() {
    let dir = TempDir::new().unwrap();
    let manifest = write_manifest(dir.path(), &["a", "b", "c", "d"], None);
    let out = csca(&["bench", "--manifest", manifest.to_str().unwrap(), "--method", "box"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = json_lines(&out);
    assert_eq!(lines.len(), 10);
    let summaries: Vec<_> = lines.iter().filter(|l| l.get("summary").is_some()).collect();
    assert_eq!(summaries.len(), 2);
    let labels: Vec<_> = summaries.iter().map(|s| s["method"].as_str().unwrap()).collect();
    assert_eq!(labels, ["BOX", "S+BOX"]);
    assert!(summaries.iter().all(|s| s["entries"] == 4));
}

#[test]
fn bench_continues_past_failures() {
    let dir = TempDir::new().unwrap();
    let manifest = write_manifest(dir.path(), &["a", "bad", "c"], Some("bad"));
    let out = csca(&[
        "bench",
        "--manifest",
        manifest.to_str().unwrap(),
        "--method",
        "box,nl",
        "--cross-scale",
        "on",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let lines = json_lines(&out);
    let reports = lines.iter().filter(|l| l.get("summary").is_none()).count();
    assert_eq!(reports, 4);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bad") && stderr.contains("missing.ppm"), "{stderr}");
}

#[test]
fn bench_writes_disparities() {
    let dir = TempDir::new().unwrap();
    let manifest = write_manifest(dir.path(), &["a"], None);
    let out_dir = dir.path().join("disp");
    let out = csca(&[
        "bench",
        "--manifest",
        manifest.to_str().unwrap(),
        "--method",
        "st",
        "--out-disp",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("a_ST.pgm").is_file());
    assert!(out_dir.join("a_SST.pgm").is_file());
}

#[test]
fn sweep_emits_row_per_lambda() {
    let dir = TempDir::new().unwrap();
    let manifest = write_manifest(dir.path(), &["a", "b"], None);
    let out = csca(&[
        "sweep-lambda",
        "--manifest",
        manifest.to_str().unwrap(),
        "--lambdas",
        "0,0.3,1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = json_lines(&out);
    let rows: Vec<_> = lines.iter().filter(|l| l.get("summary").is_some()).collect();
    assert_eq!(lines.len() - rows.len(), 6);
    let lambdas: Vec<f64> = rows.iter().map(|r| r["lambda"].as_f64().unwrap()).collect();
    assert_eq!(lambdas, [0.0, 0.3, 1.0]);
    assert!(rows.iter().all(|r| r["method"] == "S+BOX"));
}

#[test]
fn help_lists_config_keys() {
    let out = csca(&["run", "--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("lambda") && text.contains("st_k") && text.contains("default 0.3"), "{text}");
}
