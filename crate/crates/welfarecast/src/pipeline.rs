//! End-to-end stages: targets, weather features, design matrices, training,
//! held-out evaluation, diagnostics and gridded prediction.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use welfarecast_core::diagnose::{ecdf, performance_table, r_squared, wss_tss_ratio, EvaluationReport};
use welfarecast_core::gridmap::{predict_grid, CellFeatures, GridSpec, RasterLayer};
use welfarecast_core::linalg::Matrix;
use welfarecast_core::regress::{
    cv_fold_scores, fuse_features, group_holdout, group_kfold, predict, ridge_fit, select_lambda, CvResult,
    DesignMatrix, FeatureSet,
};
use welfarecast_core::weather::{build_weather_features, nearest_cell_id, WeatherFeatureVector, WeatherTable};
use welfarecast_core::welfare::{
    aggregate_asset_index, build_pooled_asset_matrix, fit_asset_index, log_consumption_targets, TargetKind,
    WelfareTarget,
};
use welfarecast_core::{Error as CoreError, ImageFeatureRecord, Source, Visit, VisitKey, IMAGE_FEATURES};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::formats::{self, ModelFile, TrainMetadata};
use crate::ingest::{self, feature_columns, CsvTable, SurveyBundle};

/// Label of the only model family in the performance table.
pub const MODEL_LABEL: &str = "ridge";

/// Everything read from disk for one run.
#[derive(Debug, Clone, Default)]
pub struct Inputs {
    pub bundle: SurveyBundle,
    pub weather: Option<WeatherTable>,
    pub images: Option<BTreeMap<VisitKey, ImageFeatureRecord>>,
}

fn optional_file(p: &Option<PathBuf>) -> Option<&Path> {
    p.as_deref().filter(|p| p.is_file())
}

pub fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    let bundle = ingest::load_survey_bundle(&cfg.visits_file, &cfg.households_file, &cfg.assets_file)?;
    let weather = optional_file(&cfg.weather_file).map(ingest::load_weather).transpose()?;
    let images = optional_file(&cfg.features_file)
        .map(|p| {
            ingest::load_image_features(p).map(|rs| rs.into_iter().map(|r| (r.key.clone(), r)).collect())
        })
        .transpose()?;
    info!(
        "loaded {} visits, {} households, {} asset rows, weather: {}, image features: {}",
        bundle.visits.len(),
        bundle.households.len(),
        bundle.assets.len(),
        weather.as_ref().map_or(0, WeatherTable::len),
        images.as_ref().map_or(0, BTreeMap::len)
    );
    Ok(Inputs { bundle, weather, images })
}

/// Asset-index targets: the index is fitted on GHS and DHS households
/// together, then GHS cluster means are attached to the post-planting visit
/// of the wave whose visit year matches the survey year.
pub fn asset_targets(bundle: &SurveyBundle) -> Result<Vec<WelfareTarget>> {
    let (matrix, names) = build_pooled_asset_matrix(&bundle.assets).map_err(Error::stage("asset index"))?;
    let model = fit_asset_index(&matrix, &names).map_err(Error::stage("asset index"))?;
    info!(
        "asset index over {} assets explains {:.3} of variance",
        names.len(),
        model.explained_variance_ratio
    );
    let ghs: Vec<_> = bundle.assets.iter().filter(|a| a.source == Source::Ghs).cloned().collect();
    let clusters = aggregate_asset_index(&model, &ghs).map_err(Error::stage("asset index"))?;
    let mut out = Vec::with_capacity(clusters.len());
    for (c, value) in clusters {
        let visit = bundle.visits.iter().find(|v| {
            v.key.ea_id == c.ea_id && v.key.visit == Visit::PostPlanting && v.end_date.year() == c.survey_year
        });
        match visit {
            Some(v) => out.push(WelfareTarget {
                key: v.key.clone(),
                kind: TargetKind::AssetIndex,
                value,
            }),
            None => warn!("no post-planting visit of {} in {}; asset cluster skipped", c.ea_id, c.survey_year),
        }
    }
    out.sort_by(|a, b| a.key.cmp(&b.key));
    Ok(out)
}

pub fn targets(bundle: &SurveyBundle, kind: TargetKind) -> Result<Vec<WelfareTarget>> {
    match kind {
        TargetKind::AssetIndex => asset_targets(bundle),
        TargetKind::LogPcConsumption => {
            log_consumption_targets(&bundle.households).map_err(Error::stage("consumption targets"))
        }
    }
}

/// Weather features of every visit, read at the cell nearest its location.
pub fn weather_features(
    bundle: &SurveyBundle,
    table: &WeatherTable,
    min_days: usize,
) -> Result<BTreeMap<VisitKey, WeatherFeatureVector>> {
    bundle
        .visits
        .iter()
        .map(|v| {
            let cell = nearest_cell_id(v.lat, v.lon);
            build_weather_features(table, &cell, v.end_date, min_days)
                .map(|f| (v.key.clone(), f))
                .map_err(Error::stage(format!("weather features for {} (cell {cell})", v.key)))
        })
        .collect()
}

/// Design matrix and target vector for `set`. Observations lacking an
/// enabled block are dropped; an enabled block with no source at all is an
/// error.
pub fn design_matrix(
    targets: &[WelfareTarget],
    images: Option<&BTreeMap<VisitKey, ImageFeatureRecord>>,
    weather: Option<&BTreeMap<VisitKey, WeatherFeatureVector>>,
    set: FeatureSet,
) -> Result<(DesignMatrix, Vec<f64>)> {
    if set.ms && images.is_none() {
        return Err(CoreError::MissingBlock("ms").into());
    }
    if set.nl && images.is_none() {
        return Err(CoreError::MissingBlock("nl").into());
    }
    if set.weather && weather.is_none() {
        return Err(CoreError::MissingBlock("weather").into());
    }
    let (mut keys, mut values, mut y) = (Vec::new(), Vec::new(), Vec::new());
    let mut dropped = 0usize;
    for t in targets {
        let img = images.and_then(|m| m.get(&t.key));
        let w = weather.and_then(|m| m.get(&t.key));
        match fuse_features(img, w, set) {
            Ok(row) => {
                values.extend(row);
                keys.push(t.key.clone());
                y.push(t.value);
            }
            Err(CoreError::MissingBlock(_)) => dropped += 1,
            Err(e) => return Err(e.into()),
        }
    }
    if dropped > 0 {
        warn!("{dropped} observations lack a {set} block and were dropped");
    }
    let n = keys.len();
    let x = Matrix::from_vec(n, set.len(), values).map_err(Error::stage("design matrix"))?;
    let dm = DesignMatrix::new(keys, set.column_names(), x).map_err(Error::stage("design matrix"))?;
    Ok((dm, y))
}

/// Group k-fold selection of λ with folds evaluated in parallel.
pub fn cross_validate(
    dm: &DesignMatrix,
    y: &[f64],
    grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<CvResult> {
    let assignment = group_kfold(&dm.groups(), folds, seed)?;
    let scores = (0..folds)
        .into_par_iter()
        .map(|f| cv_fold_scores(&dm.x, &dm.columns, y, &assignment, f, grid))
        .collect::<welfarecast_core::Result<Vec<_>>>()
        .map_err(Error::stage("cross-validation"))?;
    Ok(select_lambda(grid, &scores)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trained {
    pub model: ModelFile,
    pub cv: CvResult,
}

/// Cross-validates λ, then refits on every row.
pub fn train(
    dm: &DesignMatrix,
    y: &[f64],
    target: TargetKind,
    set: FeatureSet,
    grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<Trained> {
    let cv = cross_validate(dm, y, grid, folds, seed)?;
    info!("{target} / {set}: lambda = {} from {} rows", cv.lambda, dm.rows());
    let model = ridge_fit(&dm.x, &dm.columns, y, cv.lambda).map_err(Error::stage("ridge fit"))?;
    let n_groups = dm.groups().into_iter().collect::<std::collections::BTreeSet<_>>().len();
    let train_metadata = TrainMetadata {
        target,
        feature_set: set.to_string(),
        n_train: dm.rows(),
        n_groups,
        folds,
        seed,
        lambda_grid: grid.to_vec(),
        cv_mean_r2: cv.mean_r2.iter().map(|&(_, m)| m.is_finite().then_some(m)).collect(),
    };
    Ok(Trained {
        model: ModelFile { model, train_metadata },
        cv,
    })
}

fn subset(dm: &DesignMatrix, y: &[f64], rows: &[usize], cols: usize) -> Result<(DesignMatrix, Vec<f64>)> {
    let mut values = Vec::with_capacity(rows.len() * cols);
    for &r in rows {
        values.extend_from_slice(&dm.x.row(r)[..cols]);
    }
    let x = Matrix::from_vec(rows.len(), cols, values)?;
    let keys = rows.iter().map(|&r| dm.keys[r].clone()).collect();
    let dm = DesignMatrix::new(keys, dm.columns[..cols].to_vec(), x)?;
    Ok((dm, rows.iter().map(|&r| y[r]).collect()))
}

/// Held-out R² for `set` and, when it includes weather alongside image
/// blocks, for the same set without weather. Both use the rows that have
/// every block of `set` and the same enumeration-area split.
pub fn holdout_reports(
    dm: &DesignMatrix,
    y: &[f64],
    target: TargetKind,
    set: FeatureSet,
    cfg: &RunConfig,
) -> Result<Vec<EvaluationReport>> {
    let (train_rows, test_rows) =
        group_holdout(&dm.groups(), cfg.test_fraction, cfg.seed).map_err(Error::stage("hold-out split"))?;
    let mut sets = vec![set];
    if set.weather && set.uses_image() {
        sets.insert(0, set.without_weather());
    }
    let mut out = Vec::new();
    for s in sets {
        let (tr, ytr) = subset(dm, y, &train_rows, s.len())?;
        let (te, yte) = subset(dm, y, &test_rows, s.len())?;
        let fit = train(&tr, &ytr, target, s, &cfg.lambda_grid, cfg.folds, cfg.seed.wrapping_add(1))?;
        let pred = predict(&fit.model.model, &te.x, &te.columns)?;
        let r2 = r_squared(&yte, &pred).map_err(Error::stage(format!("held-out R² for {target} / {s}")))?;
        info!("{target} / {s}: held-out R² = {:.4} (n = {})", r2.r2_sse, r2.n);
        out.push(EvaluationReport::new(MODEL_LABEL, target, s.to_string(), r2));
    }
    Ok(out)
}

/// Performance table for both targets under the configured feature set and
/// its weather-free counterpart.
pub fn performance(
    inputs: &Inputs,
    weather: Option<&BTreeMap<VisitKey, WeatherFeatureVector>>,
    cfg: &RunConfig,
) -> Result<Vec<EvaluationReport>> {
    let mut reports = Vec::new();
    for kind in [TargetKind::AssetIndex, TargetKind::LogPcConsumption] {
        let t = targets(&inputs.bundle, kind)?;
        let (dm, y) = design_matrix(&t, inputs.images.as_ref(), weather, cfg.features)?;
        reports.extend(holdout_reports(&dm, &y, kind, cfg.features, cfg)?);
    }
    Ok(performance_table(&reports))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// `(feature_name, WSS/TSS)` for every image feature, then one row per
    /// target kind named `target:<kind>`.
    pub wss_tss: Vec<(String, Option<f64>)>,
    /// ECDF of the image-feature ratios.
    pub ecdf: Vec<(f64, f64)>,
}

impl Diagnostics {
    pub fn target_ratio(&self, kind: TargetKind) -> Option<f64> {
        let name = format!("target:{}", kind.label());
        self.wss_tss.iter().find(|(n, _)| *n == name).and_then(|(_, r)| *r)
    }
}

fn single_column_ratio(targets: &[WelfareTarget]) -> Result<Option<f64>> {
    let groups: Vec<&str> = targets.iter().map(|t| t.key.ea_id.as_str()).collect();
    let x = Matrix::from_vec(targets.len(), 1, targets.iter().map(|t| t.value).collect())?;
    Ok(wss_tss_ratio(&x, &groups).map_err(Error::stage("target WSS/TSS"))?[0])
}

/// Within-EA over total sum of squares of the image features and of both
/// targets, grouped by enumeration area.
pub fn diagnostics(inputs: &Inputs) -> Result<Diagnostics> {
    let images = inputs.images.as_ref().ok_or(CoreError::MissingBlock("ms"))?;
    let groups: Vec<&str> = images.keys().map(|k| k.ea_id.as_str()).collect();
    let mut values = Vec::with_capacity(images.len() * IMAGE_FEATURES);
    for r in images.values() {
        values.extend_from_slice(&r.ms_features);
        values.extend_from_slice(&r.nl_features);
    }
    let x = Matrix::from_vec(images.len(), IMAGE_FEATURES, values)?;
    let ratios = wss_tss_ratio(&x, &groups).map_err(Error::stage("feature WSS/TSS"))?;
    let finite: Vec<f64> = ratios.iter().flatten().copied().collect();
    let ecdf = ecdf(&finite).map_err(Error::stage("ratio ECDF"))?;
    let mut wss_tss: Vec<(String, Option<f64>)> = ingest::image_feature_columns().into_iter().zip(ratios).collect();
    for kind in [TargetKind::AssetIndex, TargetKind::LogPcConsumption] {
        let t = targets(&inputs.bundle, kind)?;
        wss_tss.push((format!("target:{}", kind.label()), single_column_ratio(&t)?));
    }
    Ok(Diagnostics { wss_tss, ecdf })
}

/// Names of the files `run` writes, in writing order.
pub const RUN_ARTIFACTS: [&str; 7] = [
    "targets.csv",
    "weather_features.csv",
    "model.json",
    "cv_table.csv",
    "performance.csv",
    "wss_tss.csv",
    "ecdf.csv",
];

/// Stages outputs in a temporary directory beside the destination and
/// moves them into place only once all of them have been written.
pub struct Staging {
    dir: tempfile::TempDir,
    dest: PathBuf,
}

impl Staging {
    pub fn new(dest: &Path) -> Result<Staging> {
        let parent = match dest.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        std::fs::create_dir_all(&parent).map_err(|e| Error::io(&parent, e))?;
        let dir = tempfile::Builder::new()
            .prefix(".welfarecast-")
            .tempdir_in(&parent)
            .map_err(|e| Error::io(&parent, e))?;
        Ok(Staging {
            dir,
            dest: dest.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    /// Moves every staged file into the destination directory.
    pub fn promote_dir(self) -> Result<()> {
        std::fs::create_dir_all(&self.dest).map_err(|e| Error::io(&self.dest, e))?;
        let entries = std::fs::read_dir(self.dir.path()).map_err(|e| Error::io(self.dir.path(), e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(self.dir.path(), e))?;
            let to = self.dest.join(entry.file_name());
            std::fs::rename(entry.path(), &to).map_err(|e| Error::io(&to, e))?;
        }
        Ok(())
    }

    /// Moves the single staged file `name` to the destination path.
    pub fn promote_file(self, name: &str) -> Result<()> {
        std::fs::rename(self.path(name), &self.dest).map_err(|e| Error::io(&self.dest, e))
    }
}

fn run_weather(inputs: &Inputs, cfg: &RunConfig) -> Result<Option<BTreeMap<VisitKey, WeatherFeatureVector>>> {
    inputs
        .weather
        .as_ref()
        .map(|t| weather_features(&inputs.bundle, t, cfg.min_days_per_window))
        .transpose()
}

/// The full pipeline. All seven artifacts appear in `cfg.out_dir` or none
/// do.
pub fn run_pipeline(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    let inputs = load_inputs(cfg)?;
    let weather = run_weather(&inputs, cfg)?;
    let stage = Staging::new(&cfg.out_dir)?;

    let t = targets(&inputs.bundle, cfg.target)?;
    formats::write_targets(&stage.path("targets.csv"), &t)?;
    formats::write_weather_features(&stage.path("weather_features.csv"), weather.as_ref().unwrap_or(&BTreeMap::new()))?;

    let (dm, y) = design_matrix(&t, inputs.images.as_ref(), weather.as_ref(), cfg.features)?;
    let fit = train(&dm, &y, cfg.target, cfg.features, &cfg.lambda_grid, cfg.folds, cfg.seed)?;
    formats::write_model(&stage.path("model.json"), &fit.model)?;
    formats::write_cv_table(&stage.path("cv_table.csv"), &fit.cv.table)?;

    let reports = performance(&inputs, weather.as_ref(), cfg)?;
    formats::write_performance(&stage.path("performance.csv"), &reports)?;

    let d = diagnostics(&inputs)?;
    formats::write_wss_tss(&stage.path("wss_tss.csv"), &d.wss_tss)?;
    formats::write_ecdf(&stage.path("ecdf.csv"), &d.ecdf)?;

    stage.promote_dir()?;
    info!("wrote {} artifacts to {}", RUN_ARTIFACTS.len(), cfg.out_dir.display());
    Ok(())
}

/// Loads inputs and trains the configured model; returns the fit together
/// with the training rows.
pub fn train_from_config(cfg: &RunConfig) -> Result<Trained> {
    cfg.validate()?;
    let inputs = load_inputs(cfg)?;
    let weather = if cfg.features.weather { run_weather(&inputs, cfg)? } else { None };
    let t = targets(&inputs.bundle, cfg.target)?;
    let (dm, y) = design_matrix(&t, inputs.images.as_ref(), weather.as_ref(), cfg.features)?;
    train(&dm, &y, cfg.target, cfg.features, &cfg.lambda_grid, cfg.folds, cfg.seed)
}

/// Scores a saved model on every usable observation of the configured data.
pub fn evaluate_model(model: &ModelFile, cfg: &RunConfig) -> Result<EvaluationReport> {
    cfg.validate()?;
    let set = FeatureSet::from_columns(&model.model.feature_names).ok_or_else(|| {
        CoreError::ConfigMismatch("model features match no ms/nl/weather block layout".into())
    })?;
    let inputs = load_inputs(cfg)?;
    let weather = if set.weather { run_weather(&inputs, cfg)? } else { None };
    let target = model.train_metadata.target;
    let t = targets(&inputs.bundle, target)?;
    let (dm, y) = design_matrix(&t, inputs.images.as_ref(), weather.as_ref(), set)?;
    let pred = predict(&model.model, &dm.x, &dm.columns)?;
    let r2 = r_squared(&y, &pred).map_err(Error::stage("evaluation"))?;
    Ok(EvaluationReport::new(MODEL_LABEL, target, set.to_string(), r2))
}

/// Per-cell inputs for gridded prediction, read from `image_features.csv`
/// (`lat,lon,period,f0001..f1024`) and `weather_features.csv`
/// (`lat,lon,period,w01..w48`) in `dir`. Each row is assigned to the cell
/// containing its point; when several rows share a cell the one nearest the
/// centroid wins.
pub fn load_grid_features(
    dir: &Path,
    spec: &GridSpec,
    period: &str,
) -> Result<BTreeMap<(usize, usize), CellFeatures>> {
    let mut best: BTreeMap<(usize, usize), (CellFeatures, [f64; 2])> = BTreeMap::new();
    let dist = |cell: (usize, usize), lat: f64, lon: f64| {
        let (clat, clon) = spec.cell(cell.0, cell.1).centroid();
        (lat - clat).powi(2) + (lon - clon).powi(2)
    };

    let img_path = dir.join("image_features.csv");
    if img_path.is_file() {
        let mut t = CsvTable::open(&img_path)?;
        let c = t.columns(&["lat", "lon", "period"], false)?;
        let fcols = feature_columns(&t, &c)?;
        t.for_each(|row| {
            if row.str(c[2])? != period {
                return Ok(());
            }
            let (lat, lon) = (row.float(c[0])?, row.float(c[1])?);
            let Some(cell) = spec.locate(lat, lon) else { return Ok(()) };
            let values = fcols.iter().map(|&i| row.float(i)).collect::<Result<Vec<f64>>>()?;
            let key = VisitKey::new(format!("cell_{}_{}", cell.0, cell.1), 1, Visit::PostPlanting);
            let rec = ImageFeatureRecord::from_row(key, values).map_err(|e| row.value_error(e.to_string()))?;
            let d = dist(cell, lat, lon);
            let slot = best.entry(cell).or_insert_with(|| (CellFeatures::default(), [f64::INFINITY; 2]));
            if d < slot.1[0] {
                slot.0.image = Some(rec);
                slot.1[0] = d;
            }
            Ok(())
        })?;
    }

    let w_path = dir.join("weather_features.csv");
    if w_path.is_file() {
        let mut t = CsvTable::open(&w_path)?;
        let mut names: Vec<String> = ["lat", "lon", "period"].map(String::from).to_vec();
        names.extend(WeatherFeatureVector::column_names());
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let c = t.columns(&names, true)?;
        t.for_each(|row| {
            if row.str(c[2])? != period {
                return Ok(());
            }
            let (lat, lon) = (row.float(c[0])?, row.float(c[1])?);
            let Some(cell) = spec.locate(lat, lon) else { return Ok(()) };
            let mut v = [0.0; 48];
            for (slot, &i) in v.iter_mut().zip(&c[3..]) {
                *slot = row.float(i)?;
            }
            let d = dist(cell, lat, lon);
            let slot = best.entry(cell).or_insert_with(|| (CellFeatures::default(), [f64::INFINITY; 2]));
            if d < slot.1[1] {
                slot.0.weather = Some(WeatherFeatureVector(v));
                slot.1[1] = d;
            }
            Ok(())
        })?;
    }
    Ok(best.into_iter().map(|(k, (f, _))| (k, f)).collect())
}

/// One raster layer per period.
pub fn grid_layers(model: &ModelFile, dir: &Path, spec: &GridSpec, periods: &[String]) -> Result<Vec<RasterLayer>> {
    periods
        .iter()
        .map(|p| {
            let features = load_grid_features(dir, spec, p)?;
            let layer = predict_grid(&model.model, &features, spec, p, Some(model.train_metadata.target))?;
            let filled = layer.values.iter().filter(|v| v.is_some()).count();
            info!("period {p}: {filled} of {} cells predicted", layer.values.len());
            Ok(layer)
        })
        .collect()
}
