//! Regular lon/lat grids and gridded model predictions.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::regress::{fuse_features, FeatureSet, RidgeModel};
use crate::weather::WeatherFeatureVector;
use crate::welfare::TargetKind;
use crate::{Error, ImageFeatureRecord, Result};

pub const DEFAULT_CELL_SIZE: f64 = 0.1;

/// Tolerance (in cells) absorbed before rounding a box extent up to whole
/// cells, so that e.g. 1.1° / 0.1° counts as 11 cells, not 12.
const EXTENT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
    pub cell_size: f64,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let vals = [self.lat_min, self.lat_max, self.lon_min, self.lon_max, self.cell_size];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("non-finite bound".into()));
        }
        if self.lat_min >= self.lat_max {
            return Err(Error::InvalidSpec(format!("lat_min {} >= lat_max {}", self.lat_min, self.lat_max)));
        }
        if self.lon_min >= self.lon_max {
            return Err(Error::InvalidSpec(format!("lon_min {} >= lon_max {}", self.lon_min, self.lon_max)));
        }
        if !(self.cell_size > 0.0) {
            return Err(Error::InvalidSpec(format!("cell size {} must be positive", self.cell_size)));
        }
        Ok(())
    }

    fn count(extent: f64, size: f64) -> usize {
        (libm::ceil(extent / size - EXTENT_SLACK) as usize).max(1)
    }

    pub fn n_rows(&self) -> usize {
        Self::count(self.lat_max - self.lat_min, self.cell_size)
    }

    pub fn n_cols(&self) -> usize {
        Self::count(self.lon_max - self.lon_min, self.cell_size)
    }

    pub fn n_cells(&self) -> usize {
        self.n_rows() * self.n_cols()
    }

    pub fn cell(&self, row: usize, col: usize) -> Cell {
        Cell {
            row,
            col,
            lat_min: self.lat_min + row as f64 * self.cell_size,
            lon_min: self.lon_min + col as f64 * self.cell_size,
            size: self.cell_size,
        }
    }

    /// Cell containing the point, if inside the gridded area.
    pub fn locate(&self, lat: f64, lon: f64) -> Option<(usize, usize)> {
        let r = libm::floor((lat - self.lat_min) / self.cell_size);
        let c = libm::floor((lon - self.lon_min) / self.cell_size);
        if r < 0.0 || c < 0.0 {
            return None;
        }
        let (r, c) = (r as usize, c as usize);
        (r < self.n_rows() && c < self.n_cols()).then_some((r, c))
    }
}

/// Half-open tile `[lon_min, lon_min + size) × [lat_min, lat_min + size)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
    pub lat_min: f64,
    pub lon_min: f64,
    pub size: f64,
}

impl Cell {
    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        self.lat_min <= lat && lat < self.lat_min + self.size && self.lon_min <= lon && lon < self.lon_min + self.size
    }

    pub fn centroid(&self) -> (f64, f64) {
        (self.lat_min + self.size / 2.0, self.lon_min + self.size / 2.0)
    }
}

/// Cells anchored at `(lon_min, lat_min)`, row-major with rows running north
/// from `lat_min`. Partial cells at the top and right edges are kept.
pub fn make_grid(spec: &GridSpec) -> Result<Vec<Cell>> {
    spec.validate()?;
    let (rows, cols) = (spec.n_rows(), spec.n_cols());
    Ok((0..rows).flat_map(|r| (0..cols).map(move |c| spec.cell(r, c))).collect())
}

/// Input feature blocks available for one grid cell.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CellFeatures {
    pub image: Option<ImageFeatureRecord>,
    pub weather: Option<WeatherFeatureVector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RasterLayer {
    pub spec: GridSpec,
    pub period: String,
    pub target: Option<TargetKind>,
    /// Row-major values, `None` where inputs were unavailable.
    pub values: Vec<Option<f64>>,
}

impl RasterLayer {
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.values[row * self.spec.n_cols() + col]
    }
}

/// Evaluates the model on every cell of the grid. Cells lacking any block
/// the model was trained on are left missing.
pub fn predict_grid(
    model: &RidgeModel,
    features: &BTreeMap<(usize, usize), CellFeatures>,
    spec: &GridSpec,
    period: &str,
    target: Option<TargetKind>,
) -> Result<RasterLayer> {
    spec.validate()?;
    let set = FeatureSet::from_columns(&model.feature_names).ok_or_else(|| {
        Error::ConfigMismatch(format!(
            "model has {} features that match no ms/nl/weather block layout",
            model.feature_names.len()
        ))
    })?;
    let values = make_grid(spec)?
        .iter()
        .map(|cell| {
            let f = features.get(&(cell.row, cell.col))?;
            fuse_features(f.image.as_ref(), f.weather.as_ref(), set)
                .ok()
                .map(|row| model.predict_row(&row))
        })
        .collect();
    Ok(RasterLayer {
        spec: *spec,
        period: period.into(),
        target,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(lat: f64, lon: f64) -> GridSpec {
        GridSpec {
            lat_min: 4.0,
            lat_max: 4.0 + lat,
            lon_min: 7.0,
            lon_max: 7.0 + lon,
            cell_size: 0.1,
        }
    }

    #[test]
    fn cell_counts() {
        assert_eq!(make_grid(&spec(1.0, 1.0)).unwrap().len(), 100);
        assert_eq!(make_grid(&spec(0.1, 0.05)).unwrap().len(), 1);
        assert_eq!(spec(1.1, 0.3).n_rows(), 11);
        assert_eq!(spec(1.15, 0.3).n_rows(), 12);
    }

    #[test]
    fn invalid_specs() {
        let mut s = spec(1.0, 1.0);
        s.lat_max = s.lat_min;
        assert!(matches!(make_grid(&s), Err(Error::InvalidSpec(_))));
        let mut s = spec(1.0, 1.0);
        s.cell_size = 0.0;
        assert!(matches!(make_grid(&s), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn locate_matches_contains() {
        let s = spec(1.0, 1.0);
        let (r, c) = s.locate(4.55, 7.01).unwrap();
        assert_eq!((r, c), (5, 0));
        assert!(s.cell(r, c).contains(4.55, 7.01));
        assert_eq!(s.locate(3.99, 7.5), None);
        assert_eq!(s.locate(4.5, 8.0), None);
    }

    #[test]
    fn unrecognized_model_layout() {
        let model = RidgeModel {
            lambda: 1.0,
            feature_names: alloc::vec![String::from("x")],
            means: alloc::vec![0.0],
            stdevs: alloc::vec![1.0],
            coefficients: alloc::vec![1.0],
            intercept: 0.0,
        };
        let err = predict_grid(&model, &BTreeMap::new(), &spec(1.0, 1.0), "2010", None).unwrap_err();
        assert!(matches!(err, Error::ConfigMismatch(_)));
    }
}
