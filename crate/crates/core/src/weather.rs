//! Monthly quintile features from daily precipitation and temperature.
//!
//! A "month" is a fixed 30-day window counted back from the survey end date;
//! window 1 is the most recent. Each of the six windows contributes the
//! 20/40/60/80 % empirical quantiles (R-7 rule) of the daily values of each
//! variable, giving 2 × 6 × 4 = 48 values laid out variable-major:
//! `index = v·24 + (w−1)·4 + (q−1)`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::{DailyWeatherRecord, Date, Error, Result};

pub const WINDOWS: u8 = 6;
pub const WINDOW_DAYS: i32 = 30;
pub const QUANTILE_LEVELS: [f64; 4] = [0.2, 0.4, 0.6, 0.8];
pub const WEATHER_FEATURES: usize = 48;
pub const DEFAULT_MIN_DAYS_PER_WINDOW: usize = 25;
/// Spacing of the reanalysis grid the weather cells are drawn from.
pub const CELL_SIZE_DEG: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum WeatherVariable {
    Precipitation = 0,
    Temperature = 1,
}

impl WeatherVariable {
    pub fn name(self) -> &'static str {
        match self {
            WeatherVariable::Precipitation => "precip_total",
            WeatherVariable::Temperature => "temp_mean",
        }
    }
}

/// Half-open day range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DateRange {
    pub start: Date,
    pub end: Date,
}

impl DateRange {
    pub fn contains(&self, d: Date) -> bool {
        self.start <= d && d < self.end
    }

    pub fn len(&self) -> usize {
        (self.end - self.start).max(0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `[end − 30w, end − 30(w−1))` for `w ∈ 1..=6`.
pub fn window_days(end_date: Date, w: u8) -> DateRange {
    assert!((1..=WINDOWS).contains(&w), "window {w} outside 1..=6");
    let w = i32::from(w);
    DateRange {
        start: end_date - WINDOW_DAYS * w,
        end: end_date - WINDOW_DAYS * (w - 1),
    }
}

/// Quantiles at 0.2/0.4/0.6/0.8 by linear interpolation between order
/// statistics at `h = (n−1)p + 1` (R type 7).
///
/// The zero-based position `(n−1)·k/5` is formed from an integer numerator,
/// so it is rounded once; 1..10 gives exactly the doubles 2.8, 4.6, 6.4, 8.2.
pub fn empirical_quintiles(values: &[f64]) -> Result<[f64; 4]> {
    if values.is_empty() {
        return Err(Error::EmptySeries);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("quantile input".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok([1, 2, 3, 4].map(|k| r7(&sorted, k)))
}

/// R-7 quantile at `p = k/5` of sorted data.
fn r7(sorted: &[f64], k: usize) -> f64 {
    let n = sorted.len();
    let pos = ((n - 1) * k) as f64 / 5.0;
    let lo = libm::floor(pos) as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    sorted[lo] + (pos - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

/// The 48-value weather feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherFeatureVector(pub [f64; WEATHER_FEATURES]);

impl WeatherFeatureVector {
    pub fn index(variable: WeatherVariable, window: u8, q: usize) -> usize {
        variable as usize * 24 + (usize::from(window) - 1) * 4 + (q - 1)
    }

    pub fn get(&self, variable: WeatherVariable, window: u8, q: usize) -> f64 {
        self.0[Self::index(variable, window, q)]
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Column names `w01..w48`.
    pub fn column_names() -> Vec<String> {
        (1..=WEATHER_FEATURES).map(|i| format!("w{i:02}")).collect()
    }
}

/// Daily series per weather cell, each sorted by date with unique dates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeatherTable {
    cells: BTreeMap<String, Vec<DailyWeatherRecord>>,
}

impl WeatherTable {
    pub fn from_records<I>(records: I) -> Result<WeatherTable>
    where
        I: IntoIterator<Item = (String, DailyWeatherRecord)>,
    {
        let mut cells: BTreeMap<String, Vec<DailyWeatherRecord>> = BTreeMap::new();
        for (cell, rec) in records {
            rec.validate()?;
            cells.entry(cell).or_default().push(rec);
        }
        for (cell, series) in cells.iter_mut() {
            series.sort_by_key(|r| r.date);
            if let Some(w) = series.windows(2).find(|w| w[0].date == w[1].date) {
                return Err(Error::DuplicateDate {
                    cell: cell.clone(),
                    date: w[0].date,
                });
            }
        }
        Ok(WeatherTable { cells })
    }

    pub fn series(&self, cell_id: &str) -> Option<&[DailyWeatherRecord]> {
        self.cells.get(cell_id).map(Vec::as_slice)
    }

    pub fn cell_ids(&self) -> impl Iterator<Item = &str> {
        self.cells.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Records of one cell falling in `range`.
    pub fn slice(&self, cell_id: &str, range: DateRange) -> &[DailyWeatherRecord] {
        let Some(s) = self.cells.get(cell_id) else {
            return &[];
        };
        let a = s.partition_point(|r| r.date < range.start);
        let b = s.partition_point(|r| r.date < range.end);
        &s[a..b]
    }
}

pub fn build_weather_features(
    table: &WeatherTable,
    cell_id: &str,
    end_date: Date,
    min_days_per_window: usize,
) -> Result<WeatherFeatureVector> {
    let mut out = [0.0; WEATHER_FEATURES];
    for w in 1..=WINDOWS {
        let days = table.slice(cell_id, window_days(end_date, w));
        if days.len() < min_days_per_window.max(1) {
            return Err(Error::InsufficientCoverage {
                window: w,
                variable: WeatherVariable::Precipitation.name(),
                days: days.len(),
                required: min_days_per_window.max(1),
            });
        }
        for var in [WeatherVariable::Precipitation, WeatherVariable::Temperature] {
            let vals: Vec<f64> = days
                .iter()
                .map(|r| match var {
                    WeatherVariable::Precipitation => r.precip_total,
                    WeatherVariable::Temperature => r.temp_mean,
                })
                .collect();
            let q = empirical_quintiles(&vals)?;
            let base = WeatherFeatureVector::index(var, w, 1);
            out[base..base + 4].copy_from_slice(&q);
        }
    }
    Ok(WeatherFeatureVector(out))
}

/// Id of the grid cell whose center (multiples of 0.25°) is nearest to the
/// point, e.g. `9.25_7.50`.
pub fn nearest_cell_id(lat: f64, lon: f64) -> String {
    let snap = |x: f64| libm::round(x / CELL_SIZE_DEG) * CELL_SIZE_DEG + 0.0;
    format!("{:.2}_{:.2}", snap(lat), snap(lon))
}
