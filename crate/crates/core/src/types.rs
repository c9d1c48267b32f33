//! Survey, weather and imagery records shared by every stage.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::{Date, Error, Result};

/// Features per imagery source (multispectral, nightlights).
pub const IMAGE_FEATURES_PER_SOURCE: usize = 512;
/// Columns in one image-feature row.
pub const IMAGE_FEATURES: usize = 2 * IMAGE_FEATURES_PER_SOURCE;

/// Within-wave survey trip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Visit {
    #[cfg_attr(feature = "serde", serde(rename = "PP"))]
    PostPlanting,
    #[cfg_attr(feature = "serde", serde(rename = "PH"))]
    PostHarvest,
}

impl Visit {
    pub fn code(self) -> &'static str {
        match self {
            Visit::PostPlanting => "PP",
            Visit::PostHarvest => "PH",
        }
    }
}

impl fmt::Display for Visit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Visit {
    type Err = Error;
    fn from_str(s: &str) -> Result<Visit> {
        match s {
            "PP" => Ok(Visit::PostPlanting),
            "PH" => Ok(Visit::PostHarvest),
            _ => Err(Error::Value(format!("visit must be PP or PH, got `{s}`"))),
        }
    }
}

/// The (enumeration area, wave, visit) key that joins targets and features.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VisitKey {
    pub ea_id: String,
    pub wave: u8,
    pub visit: Visit,
}

impl VisitKey {
    pub fn new(ea_id: impl Into<String>, wave: u8, visit: Visit) -> VisitKey {
        VisitKey {
            ea_id: ea_id.into(),
            wave,
            visit,
        }
    }
}

impl fmt::Display for VisitKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.ea_id, self.wave, self.visit)
    }
}

fn check_wave(wave: u8) -> Result<()> {
    if (1..=4).contains(&wave) {
        Ok(())
    } else {
        Err(Error::Value(format!("wave must be 1..=4, got {wave}")))
    }
}

/// One survey visit to an enumeration area. Coordinates are the published,
/// privacy-displaced centroid (up to 10 km off) and are kept as given.
#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationAreaVisit {
    pub key: VisitKey,
    pub end_date: Date,
    pub lat: f64,
    pub lon: f64,
}

impl EnumerationAreaVisit {
    pub fn validate(&self) -> Result<()> {
        check_wave(self.key.wave)?;
        if !(-90.0..=90.0).contains(&self.lat) {
            return Err(Error::Value(format!("lat {} outside [-90, 90]", self.lat)));
        }
        if !(-180.0..=180.0).contains(&self.lon) {
            return Err(Error::Value(format!("lon {} outside [-180, 180]", self.lon)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HouseholdConsumptionRecord {
    pub hh_id: String,
    pub key: VisitKey,
    pub total_expenditure: f64,
    pub household_size: u32,
}

impl HouseholdConsumptionRecord {
    pub fn validate(&self) -> Result<()> {
        check_wave(self.key.wave)?;
        if self.household_size == 0 {
            return Err(Error::Value(format!(
                "household {} has size 0",
                self.hh_id
            )));
        }
        if !(self.total_expenditure >= 0.0) || !self.total_expenditure.is_finite() {
            return Err(Error::Value(format!(
                "household {} has expenditure {}",
                self.hh_id, self.total_expenditure
            )));
        }
        Ok(())
    }

    pub fn per_capita(&self) -> f64 {
        self.total_expenditure / f64::from(self.household_size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Source {
    #[cfg_attr(feature = "serde", serde(rename = "GHS"))]
    Ghs,
    #[cfg_attr(feature = "serde", serde(rename = "DHS"))]
    Dhs,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Ghs => "GHS",
            Source::Dhs => "DHS",
        })
    }
}

impl FromStr for Source {
    type Err = Error;
    fn from_str(s: &str) -> Result<Source> {
        match s {
            "GHS" => Ok(Source::Ghs),
            "DHS" => Ok(Source::Dhs),
            _ => Err(Error::Value(format!("source must be GHS or DHS, got `{s}`"))),
        }
    }
}

/// Binary asset-ownership indicators of one household in one survey round.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetInventory {
    pub hh_id: String,
    pub source: Source,
    pub survey_year: i32,
    pub ea_id: String,
    /// asset name -> 0/1. Assets the survey did not ask about are absent.
    pub ownership: BTreeMap<String, u8>,
}

impl AssetInventory {
    pub fn validate(&self) -> Result<()> {
        match self.ownership.iter().find(|(_, &v)| v > 1) {
            Some((name, v)) => Err(Error::Value(format!(
                "household {} asset `{name}` = {v} is not binary",
                self.hh_id
            ))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DailyWeatherRecord {
    pub date: Date,
    pub precip_total: f64,
    pub temp_mean: f64,
}

impl DailyWeatherRecord {
    pub fn validate(&self) -> Result<()> {
        if !self.precip_total.is_finite() || !self.temp_mean.is_finite() {
            return Err(Error::NonFinite(format!("weather on {}", self.date)));
        }
        if self.precip_total < 0.0 {
            return Err(Error::Value(format!(
                "negative precipitation {} on {}",
                self.precip_total, self.date
            )));
        }
        Ok(())
    }
}

/// Penultimate-layer activations of the multispectral and nightlights
/// networks for one visit.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageFeatureRecord {
    pub key: VisitKey,
    pub ms_features: Vec<f64>,
    pub nl_features: Vec<f64>,
}

impl ImageFeatureRecord {
    /// Splits a 1024-value row into its MS and NL halves.
    pub fn from_row(key: VisitKey, row: Vec<f64>) -> Result<ImageFeatureRecord> {
        if row.len() != IMAGE_FEATURES {
            return Err(Error::Dimension {
                expected: IMAGE_FEATURES,
                got: row.len(),
            });
        }
        let mut ms_features = row;
        let nl_features = ms_features.split_off(IMAGE_FEATURES_PER_SOURCE);
        let rec = ImageFeatureRecord {
            key,
            ms_features,
            nl_features,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        for v in [&self.ms_features, &self.nl_features] {
            if v.len() != IMAGE_FEATURES_PER_SOURCE {
                return Err(Error::Dimension {
                    expected: IMAGE_FEATURES_PER_SOURCE,
                    got: v.len(),
                });
            }
        }
        if let Some(i) = self
            .ms_features
            .iter()
            .chain(&self.nl_features)
            .position(|v| !v.is_finite())
        {
            return Err(Error::NonFinite(format!("{} feature f{:04}", self.key, i + 1)));
        }
        Ok(())
    }
}
