//! End-to-end behaviour of generated scenarios through the pipeline.

use std::path::Path;

use welfarecast::config::RunConfig;
use welfarecast::formats::write_scenario;
use welfarecast::pipeline::{design_matrix, holdout_reports, load_inputs, targets, weather_features, Inputs};
use welfarecast_core::regress::FeatureSet;
use welfarecast_core::synth::{generate_scenario, ScenarioConfig};
use welfarecast_core::welfare::TargetKind;

fn materialize(dir: &Path, cfg: &ScenarioConfig) -> (RunConfig, Inputs) {
    let s = generate_scenario(cfg).unwrap();
    write_scenario(dir, &s).unwrap();
    let mut run = RunConfig::for_data_dir(dir);
    run.seed = cfg.seed;
    let inputs = load_inputs(&run).unwrap();
    (run, inputs)
}

/// Held-out R² for (ms+nl, ms+nl+weather).
fn image_and_full(run: &RunConfig, inputs: &Inputs, kind: TargetKind) -> (f64, f64) {
    let w = weather_features(&inputs.bundle, inputs.weather.as_ref().unwrap(), run.min_days_per_window).unwrap();
    let t = targets(&inputs.bundle, kind).unwrap();
    let (dm, y) = design_matrix(&t, inputs.images.as_ref(), Some(&w), FeatureSet::ALL).unwrap();
    let r = holdout_reports(&dm, &y, kind, FeatureSet::ALL, run).unwrap();
    assert_eq!(r[0].feature_set, "ms+nl");
    assert_eq!(r[1].feature_set, "ms+nl+weather");
    (r[0].r2_sse, r[1].r2_sse)
}

#[test]
fn generated_files_pass_ingest_and_reproduce() {
    let cfg = ScenarioConfig {
        n_eas: 12,
        households_per_ea: 3,
        dhs_clusters: 4,
        seed: 5,
        ..ScenarioConfig::default()
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (_, inputs) = materialize(a.path(), &cfg);
    assert_eq!(inputs.bundle.visits.len(), 12 * 8);
    assert_eq!(inputs.bundle.households.len(), 12 * 8 * 3);
    assert_eq!(inputs.images.as_ref().unwrap().len(), 12 * 8);
    materialize(b.path(), &cfg);
    for f in ["visits.csv", "households.csv", "assets.csv", "weather.csv", "features.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn no_weather_signal_means_no_weather_gain() {
    let mut gains = Vec::new();
    for seed in 0..10 {
        let cfg = ScenarioConfig {
            asset_share: 0.45,
            weather_share: 0.0,
            noise_share: 0.55,
            seed,
            ..ScenarioConfig::default()
        };
        let d = tempfile::tempdir().unwrap();
        let (run, inputs) = materialize(d.path(), &cfg);
        let (img, full) = image_and_full(&run, &inputs, TargetKind::LogPcConsumption);
        gains.push(full - img);
    }
    let mean = gains.iter().sum::<f64>() / gains.len() as f64;
    assert!(mean.abs() < 0.03, "mean gain {mean} over {gains:?}");
}

#[test]
fn pure_noise_is_unpredictable() {
    let cfg = ScenarioConfig {
        asset_share: 0.0,
        weather_share: 0.0,
        noise_share: 1.0,
        seed: 3,
        ..ScenarioConfig::default()
    };
    let d = tempfile::tempdir().unwrap();
    let (run, inputs) = materialize(d.path(), &cfg);
    let (img, full) = image_and_full(&run, &inputs, TargetKind::LogPcConsumption);
    assert!(img < 0.05 && full < 0.05, "{img} {full}");
}

#[test]
fn dominant_wealth_makes_assets_predictable() {
    let cfg = ScenarioConfig {
        asset_share: 0.8,
        weather_share: 0.1,
        noise_share: 0.1,
        seed: 8,
        ..ScenarioConfig::default()
    };
    let d = tempfile::tempdir().unwrap();
    let (run, inputs) = materialize(d.path(), &cfg);
    let (img, _) = image_and_full(&run, &inputs, TargetKind::AssetIndex);
    assert!(img > 0.5, "{img}");
}
