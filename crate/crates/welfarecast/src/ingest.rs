//! CSV ingestion and validation of survey, weather and image-feature files.
//!
//! All files are UTF-8, comma separated, with a header row. An empty field
//! is a missing value and is rejected for every required column; in
//! `assets.csv` an empty asset cell means the survey did not ask about that
//! asset.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::path::Path;
use std::str::FromStr;

use welfarecast_core::weather::WeatherTable;
use welfarecast_core::{
    AssetInventory, DailyWeatherRecord, Date, EnumerationAreaVisit, HouseholdConsumptionRecord,
    ImageFeatureRecord, Source, VisitKey, IMAGE_FEATURES,
};

use crate::error::{Error, Result};

pub const VISITS_COLUMNS: [&str; 6] = ["ea_id", "wave", "visit", "end_date", "lat", "lon"];
pub const HOUSEHOLDS_COLUMNS: [&str; 6] = [
    "hh_id",
    "ea_id",
    "wave",
    "visit",
    "total_expenditure",
    "household_size",
];
pub const ASSETS_KEY_COLUMNS: [&str; 4] = ["hh_id", "source", "survey_year", "ea_id"];
pub const WEATHER_COLUMNS: [&str; 4] = ["cell_id", "date", "precip_total_mm", "temp_mean_c"];
pub const FEATURE_KEY_COLUMNS: [&str; 3] = ["ea_id", "wave", "visit"];

/// Validated survey tables, each sorted by its key so that loading is
/// insensitive to file row order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SurveyBundle {
    pub visits: Vec<EnumerationAreaVisit>,
    pub households: Vec<HouseholdConsumptionRecord>,
    pub assets: Vec<AssetInventory>,
}

impl SurveyBundle {
    pub fn visit(&self, key: &VisitKey) -> Option<&EnumerationAreaVisit> {
        self.visits
            .binary_search_by(|v| v.key.cmp(key))
            .ok()
            .map(|i| &self.visits[i])
    }
}

pub(crate) struct CsvTable {
    pub file: String,
    pub header: Vec<String>,
    reader: csv::Reader<File>,
}

impl CsvTable {
    pub fn open(path: &Path) -> Result<CsvTable> {
        let file = path.display().to_string();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(f);
        let header = reader
            .headers()
            .map_err(|source| Error::Csv {
                file: file.clone(),
                source,
            })?
            .iter()
            .map(str::to_owned)
            .collect::<Vec<_>>();
        if header.iter().all(String::is_empty) {
            return Err(Error::Schema {
                file,
                message: "missing header row".into(),
            });
        }
        Ok(CsvTable { file, header, reader })
    }

    /// Column positions of `required`; with `exact`, any other column is a
    /// schema error too.
    pub fn columns(&self, required: &[&str], exact: bool) -> Result<Vec<usize>> {
        let schema = |message: String| Error::Schema {
            file: self.file.clone(),
            message,
        };
        let mut seen = BTreeSet::new();
        for h in &self.header {
            if !seen.insert(h.as_str()) {
                return Err(schema(format!("duplicate column `{h}`")));
            }
        }
        let idx = required
            .iter()
            .map(|c| {
                self.header
                    .iter()
                    .position(|h| h == c)
                    .ok_or_else(|| schema(format!("missing column `{c}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if exact {
            if let Some(extra) = self.header.iter().find(|h| !required.contains(&h.as_str())) {
                return Err(schema(format!("unexpected column `{extra}`")));
            }
        }
        Ok(idx)
    }

    pub fn for_each<F>(&mut self, mut f: F) -> Result<()>
    where
        F: FnMut(&Row<'_>) -> Result<()>,
    {
        let mut rec = csv::StringRecord::new();
        loop {
            match self.reader.read_record(&mut rec) {
                Ok(false) => return Ok(()),
                Ok(true) => {
                    let line = rec.position().map_or(0, |p| p.line());
                    f(&Row {
                        file: &self.file,
                        header: &self.header,
                        line,
                        rec: &rec,
                    })?
                }
                Err(source) => {
                    return Err(Error::Csv {
                        file: self.file.clone(),
                        source,
                    })
                }
            }
        }
    }
}

pub(crate) struct Row<'a> {
    pub file: &'a str,
    header: &'a [String],
    pub line: u64,
    rec: &'a csv::StringRecord,
}

impl Row<'_> {
    pub fn value_error(&self, message: impl Into<String>) -> Error {
        Error::Value {
            file: self.file.into(),
            line: self.line,
            message: message.into(),
        }
    }

    pub fn raw(&self, i: usize) -> &str {
        self.rec.get(i).unwrap_or("")
    }

    pub fn str(&self, i: usize) -> Result<&str> {
        let v = self.raw(i);
        if v.is_empty() {
            Err(self.value_error(format!("missing value for `{}`", self.header[i])))
        } else {
            Ok(v)
        }
    }

    pub fn parse<T: FromStr>(&self, i: usize) -> Result<T> {
        let v = self.str(i)?;
        v.parse()
            .map_err(|_| self.value_error(format!("cannot parse `{v}` in `{}`", self.header[i])))
    }

    /// Parses a finite float.
    pub fn float(&self, i: usize) -> Result<f64> {
        let v: f64 = self.parse(i)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite {
                file: self.file.into(),
                line: self.line,
                column: self.header[i].clone(),
            })
        }
    }

    pub fn key(&self, ea: usize, wave: usize, visit: usize) -> Result<VisitKey> {
        Ok(VisitKey::new(self.str(ea)?, self.parse(wave)?, self.parse(visit)?))
    }

    pub fn check(&self, r: welfarecast_core::Result<()>) -> Result<()> {
        r.map_err(|e| self.value_error(e.to_string()))
    }
}

pub fn load_visits(path: &Path) -> Result<Vec<EnumerationAreaVisit>> {
    let mut t = CsvTable::open(path)?;
    let c = t.columns(&VISITS_COLUMNS, true)?;
    let mut out: BTreeMap<VisitKey, EnumerationAreaVisit> = BTreeMap::new();
    t.for_each(|row| {
        let v = EnumerationAreaVisit {
            key: row.key(c[0], c[1], c[2])?,
            end_date: row.parse::<Date>(c[3])?,
            lat: row.float(c[4])?,
            lon: row.float(c[5])?,
        };
        row.check(v.validate())?;
        if out.contains_key(&v.key) {
            return Err(row.value_error(format!("duplicate visit {}", v.key)));
        }
        out.insert(v.key.clone(), v);
        Ok(())
    })?;
    Ok(out.into_values().collect())
}

fn load_households(path: &Path, visits: &BTreeSet<&VisitKey>) -> Result<Vec<HouseholdConsumptionRecord>> {
    let mut t = CsvTable::open(path)?;
    let c = t.columns(&HOUSEHOLDS_COLUMNS, true)?;
    let mut out = BTreeMap::new();
    t.for_each(|row| {
        let hh_id = row.str(c[0])?.to_owned();
        let key = row.key(c[1], c[2], c[3])?;
        if !visits.contains(&key) {
            return Err(Error::Referential {
                file: row.file.into(),
                line: row.line,
                hh_id,
                message: format!("visit {key} is not in the visits file"),
            });
        }
        let rec = HouseholdConsumptionRecord {
            hh_id,
            key,
            total_expenditure: row.float(c[4])?,
            household_size: row.parse(c[5])?,
        };
        row.check(rec.validate())?;
        let k = (rec.key.clone(), rec.hh_id.clone());
        if out.insert(k, rec).is_some() {
            return Err(row.value_error("duplicate household record for visit"));
        }
        Ok(())
    })?;
    Ok(out.into_values().collect())
}

fn load_assets(path: &Path, ghs_eas: &BTreeSet<&str>) -> Result<Vec<AssetInventory>> {
    let mut t = CsvTable::open(path)?;
    let c = t.columns(&ASSETS_KEY_COLUMNS, false)?;
    let asset_cols: Vec<(usize, String)> = t
        .header
        .iter()
        .enumerate()
        .filter(|(i, _)| !c.contains(i))
        .map(|(i, h)| (i, h.clone()))
        .collect();
    if asset_cols.is_empty() {
        return Err(Error::Schema {
            file: t.file.clone(),
            message: "no asset columns".into(),
        });
    }
    let mut out = BTreeMap::new();
    t.for_each(|row| {
        let hh_id = row.str(c[0])?.to_owned();
        let source: Source = row.parse(c[1])?;
        let ea_id = row.str(c[3])?.to_owned();
        if source == Source::Ghs && !ghs_eas.contains(ea_id.as_str()) {
            return Err(Error::Referential {
                file: row.file.into(),
                line: row.line,
                hh_id,
                message: format!("enumeration area {ea_id} is not in the visits file"),
            });
        }
        let mut ownership = BTreeMap::new();
        for (i, name) in &asset_cols {
            match row.raw(*i) {
                "" => {}
                "0" => {
                    ownership.insert(name.clone(), 0);
                }
                "1" => {
                    ownership.insert(name.clone(), 1);
                }
                other => {
                    return Err(row.value_error(format!("asset `{name}` = `{other}` is not binary")));
                }
            }
        }
        let inv = AssetInventory {
            hh_id,
            source,
            survey_year: row.parse(c[2])?,
            ea_id,
            ownership,
        };
        let k = (inv.source, inv.survey_year, inv.ea_id.clone(), inv.hh_id.clone());
        if out.insert(k, inv).is_some() {
            return Err(row.value_error("duplicate asset inventory"));
        }
        Ok(())
    })?;
    Ok(out.into_values().collect())
}

/// Loads and cross-checks `visits.csv`, `households.csv` and `assets.csv`.
pub fn load_survey_bundle(visits_file: &Path, households_file: &Path, assets_file: &Path) -> Result<SurveyBundle> {
    let visits = load_visits(visits_file)?;
    let keys: BTreeSet<&VisitKey> = visits.iter().map(|v| &v.key).collect();
    let households = load_households(households_file, &keys)?;
    let eas: BTreeSet<&str> = visits.iter().map(|v| v.key.ea_id.as_str()).collect();
    let assets = load_assets(assets_file, &eas)?;
    Ok(SurveyBundle {
        visits,
        households,
        assets,
    })
}

pub fn load_weather(path: &Path) -> Result<WeatherTable> {
    let mut t = CsvTable::open(path)?;
    let c = t.columns(&WEATHER_COLUMNS, true)?;
    let mut records = Vec::new();
    t.for_each(|row| {
        let rec = DailyWeatherRecord {
            date: row.parse(c[1])?,
            precip_total: row.float(c[2])?,
            temp_mean: row.float(c[3])?,
        };
        row.check(rec.validate())?;
        records.push((row.str(c[0])?.to_owned(), rec));
        Ok(())
    })?;
    let file = t.file.clone();
    WeatherTable::from_records(records).map_err(|e| match e {
        welfarecast_core::Error::DuplicateDate { cell, date } => Error::DuplicateDate {
            file,
            cell,
            date: date.to_string(),
        },
        other => Error::Core(other),
    })
}

/// Column names `f0001..f1024`.
pub fn image_feature_columns() -> Vec<String> {
    (1..=IMAGE_FEATURES).map(|i| format!("f{i:04}")).collect()
}

/// Feature columns of a header given its key columns: every `f####`
/// column, checked to be exactly `f0001..f1024` in order.
pub(crate) fn feature_columns(t: &CsvTable, keys: &[usize]) -> Result<Vec<usize>> {
    let cols: Vec<usize> = (0..t.header.len()).filter(|i| !keys.contains(i)).collect();
    if cols.len() != IMAGE_FEATURES {
        return Err(Error::Dimension {
            file: t.file.clone(),
            expected: IMAGE_FEATURES,
            got: cols.len(),
        });
    }
    for (expect, &i) in image_feature_columns().iter().zip(&cols) {
        if &t.header[i] != expect {
            return Err(Error::Schema {
                file: t.file.clone(),
                message: format!("feature column `{}` where `{expect}` was expected", t.header[i]),
            });
        }
    }
    Ok(cols)
}

pub fn load_image_features(path: &Path) -> Result<Vec<ImageFeatureRecord>> {
    let mut t = CsvTable::open(path)?;
    let c = t.columns(&FEATURE_KEY_COLUMNS, false)?;
    let fcols = feature_columns(&t, &c)?;
    let mut out = BTreeMap::new();
    t.for_each(|row| {
        let key = row.key(c[0], c[1], c[2])?;
        let values = fcols.iter().map(|&i| row.float(i)).collect::<Result<Vec<f64>>>()?;
        let rec = ImageFeatureRecord::from_row(key.clone(), values).map_err(|e| row.value_error(e.to_string()))?;
        if out.insert(key.clone(), rec).is_some() {
            return Err(row.value_error(format!("duplicate feature row for {key}")));
        }
        Ok(())
    })?;
    Ok(out.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    const ASSETS: &str = "hh_id,source,survey_year,ea_id,tv\n";

    #[test]
    fn empty_households_file() {
        let d = tempfile::tempdir().unwrap();
        let v = write(d.path(), "v.csv", "ea_id,wave,visit,end_date,lat,lon\nE1,1,PP,2010-10-01,9.1,7.2\n");
        let h = write(d.path(), "h.csv", "hh_id,ea_id,wave,visit,total_expenditure,household_size\n");
        let a = write(d.path(), "a.csv", ASSETS);
        let b = load_survey_bundle(&v, &h, &a).unwrap();
        assert_eq!((b.visits.len(), b.households.len()), (1, 0));
    }

    #[test]
    fn one_visit_one_household() {
        let d = tempfile::tempdir().unwrap();
        let v = write(d.path(), "v.csv", "ea_id,wave,visit,end_date,lat,lon\nE1,1,PP,2010-10-01,9.1,7.2\n");
        let h = write(
            d.path(),
            "h.csv",
            "hh_id,ea_id,wave,visit,total_expenditure,household_size\nH1,E1,1,PP,1200.5,4\n",
        );
        let a = write(d.path(), "a.csv", ASSETS);
        let b = load_survey_bundle(&v, &h, &a).unwrap();
        assert_eq!((b.visits.len(), b.households.len()), (1, 1));
        assert_eq!(b.households[0].per_capita(), 300.125);
    }

    #[test]
    fn orphan_household_names_hh_id() {
        let d = tempfile::tempdir().unwrap();
        let v = write(d.path(), "v.csv", "ea_id,wave,visit,end_date,lat,lon\nE1,1,PP,2010-10-01,9.1,7.2\n");
        let h = write(
            d.path(),
            "h.csv",
            "hh_id,ea_id,wave,visit,total_expenditure,household_size\nH9,E7,1,PP,10,1\n",
        );
        let a = write(d.path(), "a.csv", ASSETS);
        match load_survey_bundle(&v, &h, &a) {
            Err(Error::Referential { hh_id, .. }) => assert_eq!(hh_id, "H9"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schema_and_value_errors() {
        let d = tempfile::tempdir().unwrap();
        let v = write(d.path(), "v.csv", "ea_id,wave,visit,date,lat,lon\n");
        assert!(matches!(load_visits(&v), Err(Error::Schema { .. })));
        let v = write(d.path(), "v.csv", "ea_id,wave,visit,end_date,lat,lon\nE1,1,PP,2010-10-01,,7.2\n");
        assert!(matches!(load_visits(&v), Err(Error::Value { .. })));
        let v = write(d.path(), "v.csv", "ea_id,wave,visit,end_date,lat,lon\nE1,1,PP,2010-10-01,9.1,7.2\n");
        let h = write(
            d.path(),
            "h.csv",
            "hh_id,ea_id,wave,visit,total_expenditure,household_size\nH1,E1,1,PP,10,0\n",
        );
        let a = write(d.path(), "a.csv", ASSETS);
        assert!(matches!(load_survey_bundle(&v, &h, &a), Err(Error::Value { .. })));
        let h = write(d.path(), "h.csv", "hh_id,ea_id,wave,visit,total_expenditure,household_size\n");
        let a = write(d.path(), "a.csv", "hh_id,source,survey_year,ea_id,tv\nH1,GHS,2010,E1,2\n");
        assert!(matches!(load_survey_bundle(&v, &h, &a), Err(Error::Value { .. })));
    }

    #[test]
    fn weather_examples() {
        let d = tempfile::tempdir().unwrap();
        let hdr = "cell_id,date,precip_total_mm,temp_mean_c\n";
        let p = write(d.path(), "w.csv", &format!("{hdr}c,2012-01-02,0.5,26\nc,2012-01-01,0,25\n"));
        let t = load_weather(&p).unwrap();
        let s = t.series("c").unwrap();
        assert_eq!(s.len(), 2);
        assert!(s[0].date < s[1].date);
        let p = write(d.path(), "w.csv", &format!("{hdr}c,2012-01-01,0.5,26\nc,2012-01-01,0,25\n"));
        assert!(matches!(load_weather(&p), Err(Error::DuplicateDate { .. })));
        let p = write(d.path(), "w.csv", &format!("{hdr}c,2012-01-01,-1.0,26\n"));
        assert!(matches!(load_weather(&p), Err(Error::Value { .. })));
    }

    #[test]
    fn feature_width_checked() {
        let d = tempfile::tempdir().unwrap();
        let cols = image_feature_columns();
        let mut body = format!("ea_id,wave,visit,{}\n", cols[..1023].join(","));
        body.push_str(&format!("E1,1,PP,{}\n", vec!["0"; 1023].join(",")));
        let p = write(d.path(), "f.csv", &body);
        assert!(matches!(
            load_image_features(&p),
            Err(Error::Dimension { expected: 1024, got: 1023, .. })
        ));
        let mut body = format!("ea_id,wave,visit,{}\n", cols.join(","));
        body.push_str(&format!("E1,1,PP,{}\n", vec!["0"; 1024].join(",")));
        let p = write(d.path(), "f.csv", &body);
        let recs = load_image_features(&p).unwrap();
        assert_eq!(recs[0].ms_features, vec![0.0; 512]);
        assert_eq!(recs[0].nl_features, vec![0.0; 512]);
        let mut body = format!("ea_id,wave,visit,{}\n", cols.join(","));
        body.push_str(&format!("E1,1,PP,inf,{}\n", vec!["0"; 1023].join(",")));
        let p = write(d.path(), "f.csv", &body);
        assert!(matches!(load_image_features(&p), Err(Error::NonFinite { .. })));
    }
}
