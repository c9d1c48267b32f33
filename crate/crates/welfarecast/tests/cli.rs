//! The binary's exit codes, error line and artifact contract.

use std::path::Path;
use std::process::{Command, Output};

use welfarecast::formats::write_scenario;
use welfarecast::pipeline::RUN_ARTIFACTS;
use welfarecast_core::synth::{generate_scenario, ScenarioConfig};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_welfarecast"));
    c.env("RUST_LOG", "warn");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn small_scenario(dir: &Path) {
    let cfg = ScenarioConfig {
        n_eas: 30,
        households_per_ea: 3,
        dhs_clusters: 5,
        seed: 2,
        ..ScenarioConfig::default()
    };
    write_scenario(dir, &generate_scenario(&cfg).unwrap()).unwrap();
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn version_and_help() {
    let o = run(&["--version"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("welfarecast "));
    let o = run(&["--help"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("Exit codes") && text.contains("22 MissingBlock") && text.contains("features.csv"));
    assert_eq!(code(&run(&["frobnicate"])), 2);
}

#[test]
fn synth_then_run_writes_all_artifacts() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("scenario.cfg");
    std::fs::write(&cfg, "# tiny\nn_eas = 30\nhouseholds_per_ea = 3\ndhs_clusters = 5\n").unwrap();
    let data = d.path().join("data");
    let o = run(&["synth", "--config", p(&cfg), "--seed", "4", "--out", p(&data)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let out = d.path().join("out");
    let o = run(&["run", "--data", p(&data), "--seed", "4", "--folds", "3", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for a in RUN_ARTIFACTS {
        assert!(out.join(a).is_file(), "{a} missing");
    }
    let leftovers: Vec<_> = std::fs::read_dir(d.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with(".welfarecast"))
        .collect();
    assert!(leftovers.is_empty());

    // The trained model predicts a grid from weather-only cell features.
    let model_dir = d.path().join("model");
    let o = run(&["train", "--data", p(&data), "--features", "weather", "--folds", "3", "--out", p(&model_dir)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let feats = d.path().join("grid");
    std::fs::create_dir(&feats).unwrap();
    let w = std::fs::read_to_string(out.join("weather_features.csv")).unwrap();
    let mut body = String::from("lat,lon,period");
    body.push_str(&w.lines().next().unwrap()["ea_id,wave,visit".len()..]);
    body.push('\n');
    for (i, line) in w.lines().skip(1).take(5).enumerate() {
        let values = line.splitn(4, ',').nth(3).unwrap();
        body.push_str(&format!("9.{}5,7.05,2010,{values}\n", i));
    }
    std::fs::write(feats.join("weather_features.csv"), body).unwrap();
    let raster = d.path().join("raster.csv");
    let o = run(&[
        "predict-grid",
        "--model",
        p(&model_dir.join("model.json")),
        "--bbox",
        "9,7,10,8",
        "--cell",
        "0.1",
        "--period",
        "2010,2012",
        "--features-dir",
        p(&feats),
        "--out",
        p(&raster),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&raster).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 200);
    let filled = rows.iter().filter(|r| !r.ends_with(',')).count();
    assert_eq!(filled, 5);

    let perf = d.path().join("eval.csv");
    let o = run(&["evaluate", "--model", p(&model_dir.join("model.json")), "--data", p(&data), "--out", p(&perf)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&perf).unwrap().lines().count(), 2);

    // Mismatched model layout.
    let o = run(&["predict-grid", "--model", p(&model_dir.join("model.json")), "--bbox", "10,7,9,8", "--period", "2010", "--features-dir", p(&feats), "--out", p(&raster)]);
    assert_eq!(code(&o), 28, "{}", stderr(&o));
}

#[test]
fn missing_weather_file_is_missing_block() {
    let d = tempfile::tempdir().unwrap();
    small_scenario(d.path());
    std::fs::remove_file(d.path().join("weather.csv")).unwrap();
    let out = d.path().join("out");
    let o = run(&["run", "--data", p(d.path()), "--features", "ms,nl,weather", "--out", p(&out)]);
    assert_eq!(code(&o), 22);
    let err = stderr(&o);
    let line = err.lines().last().unwrap();
    assert!(line.starts_with("error code=22 kind=MissingBlock message=\""), "{line}");
    assert!(!out.exists(), "partial artifacts promoted");

    // Without the weather block the same data runs.
    let o = run(&["run", "--data", p(d.path()), "--features", "ms,nl", "--folds", "3", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn error_kinds_map_to_exit_codes() {
    let d = tempfile::tempdir().unwrap();
    small_scenario(d.path());

    let cfg = d.path().join("bad.cfg");
    std::fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(code(&run(&["run", "--config", p(&cfg)])), 3);

    let o = bin()
        .env("WELFARECAST_THREADS", "0")
        .args(["run", "--data", p(d.path())])
        .output()
        .unwrap();
    assert_eq!(code(&o), 3);

    let o = run(&["synth", "--config", p(&cfg), "--out", p(&d.path().join("s"))]);
    assert_eq!(code(&o), 3);
    std::fs::write(&cfg, "asset_share = 0.9\n").unwrap();
    let o = run(&["synth", "--config", p(&cfg), "--out", p(&d.path().join("s"))]);
    assert_eq!(code(&o), 30);

    let hh = d.path().join("households.csv");
    let mut text = std::fs::read_to_string(&hh).unwrap();
    text.push_str("ghost-h01,nowhere,1,PP,100,2\n");
    std::fs::write(&hh, &text).unwrap();
    let o = run(&["run", "--data", p(d.path())]);
    assert_eq!(code(&o), 7, "{}", stderr(&o));
    assert!(stderr(&o).contains("ghost-h01"));

    let lines: Vec<&str> = text.lines().collect();
    std::fs::write(&hh, lines[..lines.len() - 1].join("\n") + "\n").unwrap();
    let feats = d.path().join("features.csv");
    let f = std::fs::read_to_string(&feats).unwrap();
    let header = f.lines().next().unwrap().rsplit_once(',').unwrap().0.to_owned();
    let body: Vec<String> = f.lines().skip(1).map(|l| l.rsplit_once(',').unwrap().0.to_owned()).collect();
    std::fs::write(&feats, format!("{header}\n{}\n", body.join("\n"))).unwrap();
    let o = run(&["run", "--data", p(d.path())]);
    assert_eq!(code(&o), 9, "{}", stderr(&o));

    let o = run(&["run", "--data", p(&d.path().join("absent"))]);
    assert_eq!(code(&o), 3);
}

#[test]
fn composite_subcommand() {
    let d = tempfile::tempdir().unwrap();
    let px = 255 * 255;
    let plane: Vec<u8> = (0..px).flat_map(|i| ((i / 255) as f32).to_le_bytes()).collect();
    std::fs::write(d.path().join("b.f32"), &plane).unwrap();
    std::fs::write(d.path().join("m.u8"), vec![0u8; px]).unwrap();
    let manifest = r#"{"width":255,"height":255,"bands":["RED"],
        "observations":[{"date":"2011-05-01","band_files":["b.f32"],"mask_file":"m.u8"}]}"#;
    std::fs::write(d.path().join("stack.json"), manifest).unwrap();
    let out = d.path().join("comp");
    let o = run(&["composite", "--stack", p(&d.path().join("stack.json")), "--end-date", "2012-01-01", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let t = welfarecast::tiles::read_composite(&out.join("composite.json")).unwrap();
    assert_eq!((t.width, t.pixel(0, 0, 0)), (224, 15.0));

    let bad = r#"{"width":255,"height":255,"bands":["RED","NIR"],
        "observations":[{"date":"2011-05-01","band_files":["b.f32"],"mask_file":"m.u8"}]}"#;
    std::fs::write(d.path().join("bad.json"), bad).unwrap();
    let o = run(&["composite", "--stack", p(&d.path().join("bad.json")), "--end-date", "2012-01-01", "--out", p(&out)]);
    assert_eq!(code(&o), 20, "{}", stderr(&o));
    let empty = r#"{"width":255,"height":255,"bands":["RED"],"observations":[]}"#;
    std::fs::write(d.path().join("empty.json"), empty).unwrap();
    let o = run(&["composite", "--stack", p(&d.path().join("empty.json")), "--end-date", "2012-01-01", "--out", p(&out)]);
    assert_eq!(code(&o), 27, "{}", stderr(&o));
}
