//! Flat `key = value` configuration files for runs and synthetic scenarios.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are
//! errors. Relative paths resolve against the config file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use welfarecast_core::regress::{default_lambda_grid, FeatureSet, DEFAULT_FOLDS};
use welfarecast_core::synth::ScenarioConfig;
use welfarecast_core::weather::DEFAULT_MIN_DAYS_PER_WINDOW;
use welfarecast_core::welfare::TargetKind;

use crate::error::{Error, Result};

/// Parsed `key = value` pairs.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    values: BTreeMap<String, String>,
    base: PathBuf,
}

impl KeyValues {
    pub fn parse(text: &str, base: &Path) -> Result<KeyValues> {
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            let k = k.trim().to_owned();
            if values.insert(k.clone(), v.trim().to_owned()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{k}`", n + 1)));
            }
        }
        Ok(KeyValues {
            values,
            base: base.to_path_buf(),
        })
    }

    pub fn read(path: &Path) -> Result<KeyValues> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        KeyValues::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.values.remove(key)
    }

    fn take_parsed<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        self.take(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
            })
            .transpose()
    }

    fn take_path(&mut self, key: &str) -> Option<PathBuf> {
        self.take(key).map(|v| self.base.join(v))
    }

    fn finish(self) -> Result<()> {
        match self.values.keys().next() {
            Some(k) => Err(Error::Config(format!("unknown key `{k}`"))),
            None => Ok(()),
        }
    }
}

/// Input paths, model settings and the output directory of a pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub visits_file: PathBuf,
    pub households_file: PathBuf,
    pub assets_file: PathBuf,
    pub weather_file: Option<PathBuf>,
    pub features_file: Option<PathBuf>,
    pub target: TargetKind,
    pub features: FeatureSet,
    pub folds: usize,
    pub seed: u64,
    pub lambda_grid: Vec<f64>,
    pub min_days_per_window: usize,
    /// Share of enumeration areas held out for the performance table.
    pub test_fraction: f64,
    pub out_dir: PathBuf,
}

impl RunConfig {
    /// Defaults with the standard file names inside `data_dir`.
    pub fn for_data_dir(data_dir: &Path) -> RunConfig {
        RunConfig {
            visits_file: data_dir.join("visits.csv"),
            households_file: data_dir.join("households.csv"),
            assets_file: data_dir.join("assets.csv"),
            weather_file: Some(data_dir.join("weather.csv")),
            features_file: Some(data_dir.join("features.csv")),
            target: TargetKind::LogPcConsumption,
            features: FeatureSet::ALL,
            folds: DEFAULT_FOLDS,
            seed: 0,
            lambda_grid: default_lambda_grid(),
            min_days_per_window: DEFAULT_MIN_DAYS_PER_WINDOW,
            test_fraction: 0.2,
            out_dir: PathBuf::from("out"),
        }
    }

    pub fn from_key_values(mut kv: KeyValues) -> Result<RunConfig> {
        let data_dir = kv.take_path("data_dir").unwrap_or_else(|| kv.base.clone());
        let mut c = RunConfig::for_data_dir(&data_dir);
        if let Some(p) = kv.take_path("visits_file") {
            c.visits_file = p;
        }
        if let Some(p) = kv.take_path("households_file") {
            c.households_file = p;
        }
        if let Some(p) = kv.take_path("assets_file") {
            c.assets_file = p;
        }
        if let Some(p) = kv.take_path("weather_file") {
            c.weather_file = Some(p);
        }
        if let Some(p) = kv.take_path("features_file") {
            c.features_file = Some(p);
        }
        if let Some(t) = kv.take_parsed("target")? {
            c.target = t;
        }
        if let Some(f) = kv.take_parsed("features")? {
            c.features = f;
        }
        if let Some(f) = kv.take_parsed("folds")? {
            c.folds = f;
        }
        if let Some(s) = kv.take_parsed("seed")? {
            c.seed = s;
        }
        if let Some(g) = kv.take("lambda_grid") {
            c.lambda_grid = parse_lambda_grid(&g)?;
        }
        if let Some(m) = kv.take_parsed("min_days_per_window")? {
            c.min_days_per_window = m;
        }
        if let Some(t) = kv.take_parsed("test_fraction")? {
            c.test_fraction = t;
        }
        if let Some(o) = kv.take_path("out_dir") {
            c.out_dir = o;
        }
        kv.finish()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::Config("feature set is empty".into()));
        }
        if self.folds < 2 {
            return Err(Error::Config(format!("folds must be >= 2, got {}", self.folds)));
        }
        if self.lambda_grid.is_empty() || self.lambda_grid.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::Config("lambda grid must be nonempty and >= 0".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!("test_fraction {} outside (0, 1)", self.test_fraction)));
        }
        for p in [&self.visits_file, &self.households_file, &self.assets_file] {
            if !p.is_file() {
                return Err(Error::Config(format!("input file {} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

/// `default`, or a comma-separated list of non-negative values.
pub fn parse_lambda_grid(s: &str) -> Result<Vec<f64>> {
    if s.trim() == "default" {
        return Ok(default_lambda_grid());
    }
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad lambda `{v}`")))
        })
        .collect()
}

pub fn scenario_from_key_values(mut kv: KeyValues) -> Result<ScenarioConfig> {
    let mut c = ScenarioConfig::default();
    macro_rules! set {
        ($($field:ident),*) => {
            $(if let Some(v) = kv.take_parsed(stringify!($field))? { c.$field = v; })*
        };
    }
    set!(
        n_eas,
        households_per_ea,
        waves,
        visits_per_wave,
        asset_share,
        weather_share,
        noise_share,
        image_noise,
        weather_nonlinearity,
        dhs_clusters,
        jitter_km,
        seed
    );
    kv.finish()?;
    c.validate()?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_config_parses_and_resolves() {
        let kv = KeyValues::parse(
            "# run\ndata_dir = data\ntarget = asset\nfeatures = ms,nl\nfolds=3\nseed = 9\nlambda_grid = 0.1, 1,10\n",
            Path::new("/cfg"),
        )
        .unwrap();
        let c = RunConfig::from_key_values(kv).unwrap();
        assert_eq!(c.visits_file, Path::new("/cfg/data/visits.csv"));
        assert_eq!(c.target, TargetKind::AssetIndex);
        assert_eq!(c.features, FeatureSet::MS_NL);
        assert_eq!((c.folds, c.seed), (3, 9));
        assert_eq!(c.lambda_grid, vec![0.1, 1.0, 10.0]);
    }

    #[test]
    fn unknown_and_duplicate_keys() {
        let kv = KeyValues::parse("colour = red\n", Path::new(".")).unwrap();
        assert!(matches!(RunConfig::from_key_values(kv), Err(Error::Config(_))));
        assert!(KeyValues::parse("a=1\na=2\n", Path::new(".")).is_err());
        assert!(KeyValues::parse("no equals\n", Path::new(".")).is_err());
    }

    #[test]
    fn scenario_keys() {
        let kv = KeyValues::parse("n_eas = 12\nweather_share = 0\nseed = 3\n", Path::new(".")).unwrap();
        let c = scenario_from_key_values(kv).unwrap();
        assert_eq!((c.n_eas, c.weather_share, c.seed), (12, 0.0, 3));
        let kv = KeyValues::parse("asset_share = 0.9\n", Path::new(".")).unwrap();
        assert!(scenario_from_key_values(kv).is_err());
    }
}
