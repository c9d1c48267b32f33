//! Cloud-masked per-pixel median compositing and center cropping of image
//! tiles.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::{Date, Error, Result};

/// Days of imagery feeding one composite.
pub const COMPOSITE_DAYS: i32 = 365;
pub const EXPORT_SIDE: usize = 255;
pub const CROP_SIDE: usize = 224;
pub const CROP_OFFSET: usize = (EXPORT_SIDE - CROP_SIDE) / 2;
pub const METERS_PER_PIXEL: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "UPPERCASE"))]
pub enum Band {
    Red,
    Green,
    Blue,
    Nir,
    Swir1,
    Swir2,
    Temp1,
}

impl Band {
    pub const ALL: [Band; 7] = [
        Band::Red,
        Band::Green,
        Band::Blue,
        Band::Nir,
        Band::Swir1,
        Band::Swir2,
        Band::Temp1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Band::Red => "RED",
            Band::Green => "GREEN",
            Band::Blue => "BLUE",
            Band::Nir => "NIR",
            Band::Swir1 => "SWIR1",
            Band::Swir2 => "SWIR2",
            Band::Temp1 => "TEMP1",
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Band {
    type Err = Error;
    fn from_str(s: &str) -> Result<Band> {
        Band::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::Value(format!("unknown band `{s}`")))
    }
}

/// One acquisition: per-band row-major planes and a per-pixel cloud flag
/// (`true` = cloudy, not usable).
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub date: Date,
    pub planes: Vec<Vec<f32>>,
    pub cloudy: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TileStack {
    pub width: usize,
    pub height: usize,
    pub bands: Vec<Band>,
    pub observations: Vec<Observation>,
}

impl TileStack {
    pub fn validate(&self) -> Result<()> {
        let px = self.width * self.height;
        for (i, obs) in self.observations.iter().enumerate() {
            if obs.planes.len() != self.bands.len() {
                return Err(Error::ShapeMismatch(format!(
                    "observation {i} has {} bands, stack declares {}",
                    obs.planes.len(),
                    self.bands.len()
                )));
            }
            if obs.cloudy.len() != px || obs.planes.iter().any(|p| p.len() != px) {
                return Err(Error::ShapeMismatch(format!(
                    "observation {i} ({}) is not {}x{}",
                    obs.date, self.width, self.height
                )));
            }
        }
        Ok(())
    }
}

/// Composite tile; invalid pixels hold `NaN` in every band.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeTile {
    pub width: usize,
    pub height: usize,
    pub bands: Vec<Band>,
    pub planes: Vec<Vec<f32>>,
    pub valid: Vec<bool>,
}

impl CompositeTile {
    pub fn pixel(&self, band: usize, row: usize, col: usize) -> f32 {
        self.planes[band][row * self.width + col]
    }
}

fn median(values: &mut [f32]) -> f32 {
    values.sort_unstable_by(f32::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        ((f64::from(values[n / 2 - 1]) + f64::from(values[n / 2])) / 2.0) as f32
    }
}

/// Per-pixel, per-band median of the clear observations dated in
/// `[end − 365, end)`. An even count averages the two middle values; a pixel
/// with no clear observation is marked invalid.
pub fn median_composite(stack: &TileStack, end_date: Date) -> Result<CompositeTile> {
    if stack.observations.is_empty() {
        return Err(Error::Empty);
    }
    stack.validate()?;
    let start = end_date - COMPOSITE_DAYS;
    let used: Vec<&Observation> = stack
        .observations
        .iter()
        .filter(|o| start <= o.date && o.date < end_date)
        .collect();
    let px = stack.width * stack.height;
    let mut planes = vec![vec![f32::NAN; px]; stack.bands.len()];
    let mut valid = vec![false; px];
    let mut buf = Vec::with_capacity(used.len());
    for p in 0..px {
        for (b, plane) in planes.iter_mut().enumerate() {
            buf.clear();
            buf.extend(used.iter().filter(|o| !o.cloudy[p]).map(|o| o.planes[b][p]));
            if !buf.is_empty() {
                plane[p] = median(&mut buf);
                valid[p] = true;
            }
        }
    }
    Ok(CompositeTile {
        width: stack.width,
        height: stack.height,
        bands: stack.bands.clone(),
        planes,
        valid,
    })
}

/// Keeps rows and columns 15..=238 of a 255×255 tile (224 px ≈ 6.72 km at
/// 30 m/px).
pub fn center_crop(tile: &CompositeTile) -> Result<CompositeTile> {
    for side in [tile.width, tile.height] {
        if side != EXPORT_SIDE {
            return Err(Error::Size {
                expected: EXPORT_SIDE,
                got: side,
            });
        }
    }
    let crop = |src: &[f32]| crop_plane(src, EXPORT_SIDE, CROP_OFFSET, CROP_SIDE);
    Ok(CompositeTile {
        width: CROP_SIDE,
        height: CROP_SIDE,
        bands: tile.bands.clone(),
        planes: tile.planes.iter().map(|p| crop(p)).collect(),
        valid: crop_plane(&tile.valid, EXPORT_SIDE, CROP_OFFSET, CROP_SIDE),
    })
}

fn crop_plane<T: Copy>(src: &[T], side: usize, offset: usize, out: usize) -> Vec<T> {
    (offset..offset + out)
        .flat_map(|r| src[r * side + offset..r * side + offset + out].iter().copied())
        .collect()
}
