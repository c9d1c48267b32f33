//! Writers and readers for every file the pipeline produces.
//!
//! Floats are written in Rust's shortest round-trip notation, so reading a
//! file back reproduces the in-memory values bit for bit. Missing values
//! (NaN, masked cells) are empty fields.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};
use welfarecast_core::diagnose::EvaluationReport;
use welfarecast_core::gridmap::RasterLayer;
use welfarecast_core::regress::{CvCell, RidgeModel};
use welfarecast_core::synth::Scenario;
use welfarecast_core::weather::WeatherFeatureVector;
use welfarecast_core::welfare::{TargetKind, WelfareTarget};
use welfarecast_core::{ImageFeatureRecord, VisitKey};

use crate::error::{Error, Result};
use crate::ingest::{image_feature_columns, CsvTable};

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:?}")
    } else {
        String::new()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

struct CsvOut {
    file: String,
    w: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    fn create(path: &Path) -> Result<CsvOut> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(CsvOut {
            file: path.display().to_string(),
            w: csv::WriterBuilder::new().from_writer(BufWriter::new(f)),
        })
    }

    fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w.write_record(fields).map_err(|source| Error::Csv {
            file: self.file.clone(),
            source,
        })
    }

    fn finish(mut self) -> Result<()> {
        self.w.flush().map_err(|e| Error::io(&self.file, e))
    }
}

fn key_fields(k: &VisitKey) -> [String; 3] {
    [k.ea_id.clone(), k.wave.to_string(), k.visit.code().to_owned()]
}

pub fn write_targets(path: &Path, targets: &[WelfareTarget]) -> Result<()> {
    let mut out = CsvOut::create(path)?;
    out.row(["ea_id", "wave", "visit", "kind", "value"])?;
    for t in targets {
        let [e, w, v] = key_fields(&t.key);
        out.row([e, w, v, t.kind.label().to_owned(), fmt_f64(t.value)])?;
    }
    out.finish()
}

pub fn read_targets(path: &Path) -> Result<Vec<WelfareTarget>> {
    let mut t = CsvTable::open(path)?;
    let c = t.columns(&["ea_id", "wave", "visit", "kind", "value"], true)?;
    let mut out = Vec::new();
    t.for_each(|row| {
        let kind: TargetKind = row.parse(c[3])?;
        out.push(WelfareTarget {
            key: row.key(c[0], c[1], c[2])?,
            kind,
            value: row.float(c[4])?,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn write_weather_features(path: &Path, rows: &BTreeMap<VisitKey, WeatherFeatureVector>) -> Result<()> {
    let mut out = CsvOut::create(path)?;
    let mut header = vec!["ea_id".to_owned(), "wave".into(), "visit".into()];
    header.extend(WeatherFeatureVector::column_names());
    out.row(&header)?;
    for (k, v) in rows {
        let mut fields = key_fields(k).to_vec();
        fields.extend(v.values().iter().map(|x| fmt_f64(*x)));
        out.row(&fields)?;
    }
    out.finish()
}

pub fn read_weather_features(path: &Path) -> Result<BTreeMap<VisitKey, WeatherFeatureVector>> {
    let mut t = CsvTable::open(path)?;
    let mut cols: Vec<String> = ["ea_id", "wave", "visit"].map(String::from).to_vec();
    cols.extend(WeatherFeatureVector::column_names());
    let names: Vec<&str> = cols.iter().map(String::as_str).collect();
    let c = t.columns(&names, true)?;
    let mut out = BTreeMap::new();
    t.for_each(|row| {
        let mut v = [0.0; 48];
        for (slot, &i) in v.iter_mut().zip(&c[3..]) {
            *slot = row.float(i)?;
        }
        out.insert(row.key(c[0], c[1], c[2])?, WeatherFeatureVector(v));
        Ok(())
    })?;
    Ok(out)
}

pub fn write_image_features(path: &Path, rows: &[ImageFeatureRecord]) -> Result<()> {
    let mut out = CsvOut::create(path)?;
    let mut header = vec!["ea_id".to_owned(), "wave".into(), "visit".into()];
    header.extend(image_feature_columns());
    out.row(&header)?;
    for r in rows {
        let mut fields = key_fields(&r.key).to_vec();
        fields.extend(r.ms_features.iter().chain(&r.nl_features).map(|x| fmt_f64(*x)));
        out.row(&fields)?;
    }
    out.finish()
}

/// Writes the five input tables of a synthetic scenario into `dir`.
pub fn write_scenario(dir: &Path, s: &Scenario) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut out = CsvOut::create(&dir.join("visits.csv"))?;
    out.row(crate::ingest::VISITS_COLUMNS)?;
    for v in &s.visits {
        let [e, w, vv] = key_fields(&v.key);
        out.row([e, w, vv, v.end_date.to_string(), fmt_f64(v.lat), fmt_f64(v.lon)])?;
    }
    out.finish()?;

    let mut out = CsvOut::create(&dir.join("households.csv"))?;
    out.row(crate::ingest::HOUSEHOLDS_COLUMNS)?;
    for h in &s.households {
        let [e, w, v] = key_fields(&h.key);
        out.row([
            h.hh_id.clone(),
            e,
            w,
            v,
            fmt_f64(h.total_expenditure),
            h.household_size.to_string(),
        ])?;
    }
    out.finish()?;

    let names: BTreeSet<&String> = s.assets.iter().flat_map(|a| a.ownership.keys()).collect();
    let mut out = CsvOut::create(&dir.join("assets.csv"))?;
    let mut header: Vec<String> = crate::ingest::ASSETS_KEY_COLUMNS.map(String::from).to_vec();
    header.extend(names.iter().map(|n| n.to_string()));
    out.row(&header)?;
    for a in &s.assets {
        let mut fields = vec![
            a.hh_id.clone(),
            a.source.to_string(),
            a.survey_year.to_string(),
            a.ea_id.clone(),
        ];
        fields.extend(names.iter().map(|n| a.ownership.get(*n).map(u8::to_string).unwrap_or_default()));
        out.row(&fields)?;
    }
    out.finish()?;

    let mut out = CsvOut::create(&dir.join("weather.csv"))?;
    out.row(crate::ingest::WEATHER_COLUMNS)?;
    for (cell, r) in &s.weather {
        out.row([cell.clone(), r.date.to_string(), fmt_f64(r.precip_total), fmt_f64(r.temp_mean)])?;
    }
    out.finish()?;

    write_image_features(&dir.join("features.csv"), &s.features)
}

/// Training provenance stored with a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMetadata {
    pub target: TargetKind,
    pub feature_set: String,
    pub n_train: usize,
    pub n_groups: usize,
    pub folds: usize,
    pub seed: u64,
    pub lambda_grid: Vec<f64>,
    /// Mean held-out R² for each grid value.
    pub cv_mean_r2: Vec<Option<f64>>,
}

/// On-disk model: the ridge fit plus its training metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(flatten)]
    pub model: RidgeModel,
    pub train_metadata: TrainMetadata,
}

pub fn write_model(path: &Path, m: &ModelFile) -> Result<()> {
    let text = serde_json::to_string_pretty(m).map_err(|source| Error::Json {
        file: path.display().to_string(),
        source,
    })?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let m: ModelFile = serde_json::from_str(&text).map_err(|source| Error::Json {
        file: path.display().to_string(),
        source,
    })?;
    let n = m.model.feature_names.len();
    if [m.model.means.len(), m.model.stdevs.len(), m.model.coefficients.len()] != [n; 3] {
        return Err(Error::Schema {
            file: path.display().to_string(),
            message: format!("model vectors do not all have {n} entries"),
        });
    }
    Ok(m)
}

pub fn write_cv_table(path: &Path, table: &[CvCell]) -> Result<()> {
    let mut out = CsvOut::create(path)?;
    out.row(["lambda", "fold", "r2"])?;
    for c in table {
        out.row([fmt_f64(c.lambda), c.fold.to_string(), fmt_f64(c.r2)])?;
    }
    out.finish()
}

pub const PERFORMANCE_COLUMNS: [&str; 6] = ["model", "target", "feature_set", "r2_sse", "r2_pearson", "n"];

pub fn write_performance(path: &Path, reports: &[EvaluationReport]) -> Result<()> {
    let mut out = CsvOut::create(path)?;
    out.row(PERFORMANCE_COLUMNS)?;
    for r in reports {
        out.row([
            r.model.clone(),
            r.target.label().to_owned(),
            r.feature_set.clone(),
            fmt_f64(r.r2_sse),
            fmt_f64(r.r2_pearson),
            r.n.to_string(),
        ])?;
    }
    out.finish()
}

pub fn read_performance(path: &Path) -> Result<Vec<EvaluationReport>> {
    let mut t = CsvTable::open(path)?;
    let c = t.columns(&PERFORMANCE_COLUMNS, true)?;
    let mut out = Vec::new();
    t.for_each(|row| {
        out.push(EvaluationReport {
            model: row.str(c[0])?.to_owned(),
            target: row.parse(c[1])?,
            feature_set: row.str(c[2])?.to_owned(),
            r2_sse: row.float(c[3])?,
            r2_pearson: row.float(c[4])?,
            n: row.parse(c[5])?,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn write_wss_tss(path: &Path, rows: &[(String, Option<f64>)]) -> Result<()> {
    let mut out = CsvOut::create(path)?;
    out.row(["feature_name", "ratio"])?;
    for (name, ratio) in rows {
        out.row([name.clone(), fmt_opt(*ratio)])?;
    }
    out.finish()
}

pub fn write_ecdf(path: &Path, steps: &[(f64, f64)]) -> Result<()> {
    let mut out = CsvOut::create(path)?;
    out.row(["value", "fraction"])?;
    for (v, f) in steps {
        out.row([fmt_f64(*v), fmt_f64(*f)])?;
    }
    out.finish()
}

/// One exported raster cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterRow {
    pub lon_min: f64,
    pub lat_min: f64,
    pub period: String,
    pub value: Option<f64>,
}

/// `lon_min,lat_min,period,value`, one row per cell and layer, each layer
/// row-major from `(lat_min, lon_min)`; missing cells keep an empty value.
pub fn export_raster(path: &Path, layers: &[RasterLayer]) -> Result<()> {
    let mut out = CsvOut::create(path)?;
    out.row(["lon_min", "lat_min", "period", "value"])?;
    for layer in layers {
        let cols = layer.spec.n_cols();
        for (i, v) in layer.values.iter().enumerate() {
            let cell = layer.spec.cell(i / cols, i % cols);
            out.row([fmt_f64(cell.lon_min), fmt_f64(cell.lat_min), layer.period.clone(), fmt_opt(*v)])?;
        }
    }
    out.finish()
}

pub fn import_raster(path: &Path) -> Result<Vec<RasterRow>> {
    let mut t = CsvTable::open(path)?;
    let c = t.columns(&["lon_min", "lat_min", "period", "value"], true)?;
    let mut out = Vec::new();
    t.for_each(|row| {
        out.push(RasterRow {
            lon_min: row.float(c[0])?,
            lat_min: row.float(c[1])?,
            period: row.str(c[2])?.to_owned(),
            value: match row.raw(c[3]) {
                "" => None,
                _ => Some(row.float(c[3])?),
            },
        });
        Ok(())
    })?;
    Ok(out)
}
