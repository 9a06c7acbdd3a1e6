//! Command-line behaviour, run in process except where the environment matters.

use std::path::{Path, PathBuf};
use std::process::Command;

use wakeradar::cli::{run, DETECTOR_CONFIG_ENV};

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn wakeradar(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("wakeradar").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// One-frame copy of the reference scene.
fn one_frame_scene(dir: &Path, frames: u32) -> PathBuf {
    let text = std::fs::read_to_string(scenario_path("reference.toml")).unwrap();
    let text = text.replace("n_frames = 10", &format!("n_frames = {frames}"));
    let path = dir.join("scene.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn simulate(dir: &Path, frames: u32) -> PathBuf {
    let scene = one_frame_scene(dir, frames);
    let iq = dir.join("scene.wviq");
    let (code, out, err) = wakeradar(&["simulate", path_str(&scene), "-o", path_str(&iq)]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains(&format!("wrote {frames} frames of 512 x 2048")), "{out}");
    iq
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(wakeradar(&[]).0, 1);
    assert_eq!(wakeradar(&["frobnicate"]).0, 1);
    assert_eq!(wakeradar(&["budget"]).0, 1);
    let (code, out, _) = wakeradar(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("simulate"));
}

#[test]
fn budget_prints_reference_resolutions() {
    let (code, out, err) = wakeradar(&["budget", path_str(&scenario_path("reference.toml"))]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("range_resolution_m    30.0"), "{out}");
    assert!(out.contains("velocity_resolution   0.083 m/s"), "{out}");
    assert!(out.contains("unambiguous_velocity  84.59 m/s"), "{out}");
}

#[test]
fn budget_range_grows_with_rcs_to_the_quarter() {
    let file = scenario_path("reference.toml");
    let range = |rcs: &str| -> f64 {
        let (code, out, _) = wakeradar(&["budget", path_str(&file), "--rcs", rcs]);
        assert_eq!(code, 0);
        let line = out.lines().find(|l| l.starts_with("detection_range_m")).unwrap();
        line.split_whitespace().nth(1).unwrap().parse().unwrap()
    };
    let ratio = range("16") / range("1");
    assert!((ratio - 2.0).abs() < 1e-3, "{ratio}");
}

#[test]
fn malformed_inputs_exit_2_and_domain_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    assert_eq!(wakeradar(&["budget", path_str(&missing)]).0, 2);

    let bad = dir.path().join("bad.wviq");
    std::fs::write(&bad, b"NOPE and some more bytes to pass the header length check").unwrap();
    let out = dir.path().join("out.csv");
    let (code, _, err) = wakeradar(&["detect", path_str(&bad), "-o", path_str(&out)]);
    assert_eq!(code, 2);
    assert!(err.contains("at byte 0"), "{err}");

    let text = std::fs::read_to_string(scenario_path("reference.toml")).unwrap();
    let unknown = dir.path().join("unknown.toml");
    std::fs::write(&unknown, text.replace("seed = 1", "seed = 1\nsead = 2")).unwrap();
    let (code, _, err) = wakeradar(&["simulate", path_str(&unknown), "-o", path_str(&out)]);
    assert_eq!(code, 2);
    assert!(err.contains("sead"), "{err}");

    let (code, _, _) = wakeradar(&["budget", path_str(&scenario_path("reference.toml")), "--rcs=-1"]);
    assert_eq!(code, 3);
}

#[test]
fn simulate_detect_process_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let iq = simulate(dir.path(), 1);
    assert_eq!(std::fs::metadata(&iq).unwrap().len(), 42 + 512 * 2048 * 8);

    let csv = dir.path().join("d.csv");
    let (code, _, err) = wakeradar(&["detect", path_str(&iq), "-o", path_str(&csv)]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("frame,bin,range_m,class,snr_db,dscr_db,velocity_mps,stage"));
    let aircraft: Vec<&str> = lines.filter(|l| l.split(',').nth(3) == Some("aircraft")).collect();
    assert_eq!(aircraft.len(), 1, "{aircraft:?}");
    assert!(aircraft[0].starts_with("0,286,"), "{}", aircraft[0]);

    let json = dir.path().join("d.json");
    let (code, _, _) = wakeradar(&["detect", path_str(&iq), "-o", path_str(&json), "--format", "json"]);
    assert_eq!(code, 0);
    let rows: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), text.lines().count() - 1);

    let pgm = dir.path().join("map.pgm");
    let (code, _, err) = wakeradar(&["process", path_str(&iq), "-o", path_str(&pgm), "--max-doppler-pixels", "512"]);
    assert_eq!(code, 0, "{err}");
    let bytes = std::fs::read(&pgm).unwrap();
    assert!(bytes.starts_with(b"P5\n512 512\n255\n"));

    let sg = dir.path().join("sg.pgm");
    let (code, out, err) = wakeradar(&["analyze", path_str(&iq), "--bin", "286", "--spectrogram", path_str(&sg)]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("class aircraft"), "{out}");
    assert!(out.contains("jem: body"), "{out}");
    assert!(sg.exists());

    let (code, out, _) = wakeradar(&["analyze", path_str(&iq), "--bin", "240"]);
    assert_eq!(code, 0);
    assert!(out.contains("class wake"), "{out}");
    // 1379 m behind a 34.32 m wingspan
    assert!(out.contains("r_wv 40.182 -> old"), "{out}");

    assert_eq!(wakeradar(&["analyze", path_str(&iq), "--bin", "9999"]).0, 3);
}

#[test]
fn track_reports_every_frame() {
    let dir = tempfile::tempdir().unwrap();
    let iq = simulate(dir.path(), 4);
    let log = dir.path().join("track.jsonl");
    let (code, out, err) = wakeradar(&["track", path_str(&iq), "-o", path_str(&log)]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.lines().filter(|l| l.starts_with("frame")).count(), 4, "{out}");
    let frames: Vec<serde_json::Value> = std::fs::read_to_string(&log)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(frames.len(), 4);
    assert_eq!(frames[3]["status"], "confirmed");
    // the receding aircraft unfolds to its true speed
    let v = frames[3]["aircraft_velocity"].as_f64().unwrap();
    assert!((v + 140.1).abs() < 1.0, "{v}");
}

#[test]
fn detector_config_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("det.toml");
    std::fs::write(&bad, "dscr_treshold = 3.0\n").unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_wakeradar"))
        .args(["detect", "nonexistent.wviq", "-o", "x.csv"])
        .env(DETECTOR_CONFIG_ENV, &bad)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&status.stderr).contains("dscr_treshold"));
}
