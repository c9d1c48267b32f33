//! Raw tile stacks on disk.
//!
//! A stack is a JSON manifest next to its data files:
//!
//! ```json
//! {"width": 255, "height": 255, "bands": ["RED", "NIR"],
//!  "observations": [{"date": "2010-03-01",
//!                    "band_files": ["o0_red.f32", "o0_nir.f32"],
//!                    "mask_file": "o0_mask.u8"}]}
//! ```
//!
//! Band files hold `width * height` little-endian `f32` values, row-major.
//! Mask files hold one byte per pixel; nonzero marks a cloudy pixel. Paths
//! are relative to the manifest. A composite is written the same way with a
//! single set of band files and a validity mask (1 = valid).

use std::path::Path;

use serde::{Deserialize, Serialize};
use welfarecast_core::composite::{Band, CompositeTile, Observation, TileStack};
use welfarecast_core::Date;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationEntry {
    pub date: Date,
    pub band_files: Vec<String>,
    pub mask_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackManifest {
    pub width: usize,
    pub height: usize,
    pub bands: Vec<Band>,
    pub observations: Vec<ObservationEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeManifest {
    pub width: usize,
    pub height: usize,
    pub bands: Vec<Band>,
    pub band_files: Vec<String>,
    pub valid_file: String,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        file: path.display().to_string(),
        source,
    })
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(v).map_err(|source| Error::Json {
        file: path.display().to_string(),
        source,
    })?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn read_bytes(path: &Path, expected: usize) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != expected {
        return Err(Error::Schema {
            file: path.display().to_string(),
            message: format!("expected {expected} bytes, found {}", bytes.len()),
        });
    }
    Ok(bytes)
}

pub fn read_plane(path: &Path, pixels: usize) -> Result<Vec<f32>> {
    let bytes = read_bytes(path, pixels * 4)?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

pub fn write_plane(path: &Path, plane: &[f32]) -> Result<()> {
    let bytes: Vec<u8> = plane.iter().flat_map(|v| v.to_le_bytes()).collect();
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_stack(manifest: &Path) -> Result<TileStack> {
    let m: StackManifest = read_json(manifest)?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let px = m.width * m.height;
    let observations = m
        .observations
        .iter()
        .map(|o| {
            let planes = o
                .band_files
                .iter()
                .map(|f| read_plane(&base.join(f), px))
                .collect::<Result<Vec<_>>>()?;
            let cloudy = read_bytes(&base.join(&o.mask_file), px)?.into_iter().map(|b| b != 0).collect();
            Ok(Observation {
                date: o.date,
                planes,
                cloudy,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TileStack {
        width: m.width,
        height: m.height,
        bands: m.bands,
        observations,
    })
}

/// Writes `composite.json`, one `<band>.f32` per band and `valid.u8` into
/// `dir`.
pub fn write_composite(dir: &Path, tile: &CompositeTile) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let band_files: Vec<String> = tile
        .bands
        .iter()
        .map(|b| format!("{}.f32", b.name().to_lowercase()))
        .collect();
    for (f, plane) in band_files.iter().zip(&tile.planes) {
        write_plane(&dir.join(f), plane)?;
    }
    let valid: Vec<u8> = tile.valid.iter().map(|&v| u8::from(v)).collect();
    std::fs::write(dir.join("valid.u8"), valid).map_err(|e| Error::io(dir.join("valid.u8"), e))?;
    write_json(
        &dir.join("composite.json"),
        &CompositeManifest {
            width: tile.width,
            height: tile.height,
            bands: tile.bands.clone(),
            band_files,
            valid_file: "valid.u8".into(),
        },
    )
}

pub fn read_composite(manifest: &Path) -> Result<CompositeTile> {
    let m: CompositeManifest = read_json(manifest)?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let px = m.width * m.height;
    let planes = m
        .band_files
        .iter()
        .map(|f| read_plane(&base.join(f), px))
        .collect::<Result<Vec<_>>>()?;
    let valid = read_bytes(&base.join(&m.valid_file), px)?.into_iter().map(|b| b != 0).collect();
    Ok(CompositeTile {
        width: m.width,
        height: m.height,
        bands: m.bands,
        planes,
        valid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use welfarecast_core::composite::{center_crop, median_composite};

    #[test]
    fn stack_round_trip_through_composite() {
        let d = tempfile::tempdir().unwrap();
        let (w, h) = (255, 255);
        let mut obs = Vec::new();
        for (i, day) in [10, 20, 30].iter().enumerate() {
            let plane: Vec<f32> = (0..w * h).map(|p| (p / w) as f32 + i as f32).collect();
            write_plane(&d.path().join(format!("o{i}.f32")), &plane).unwrap();
            let mask = vec![u8::from(i == 2); w * h];
            std::fs::write(d.path().join(format!("o{i}.u8")), mask).unwrap();
            obs.push(ObservationEntry {
                date: Date::from_ymd(2010, 1, *day).unwrap(),
                band_files: vec![format!("o{i}.f32")],
                mask_file: format!("o{i}.u8"),
            });
        }
        let m = StackManifest {
            width: w,
            height: h,
            bands: vec![Band::Red],
            observations: obs,
        };
        write_json(&d.path().join("stack.json"), &m).unwrap();
        let stack = read_stack(&d.path().join("stack.json")).unwrap();
        let tile = center_crop(&median_composite(&stack, Date::from_ymd(2010, 6, 1).unwrap()).unwrap()).unwrap();
        // rows 15.. of the row-index plane, averaged with the +1 copy
        assert_eq!(tile.pixel(0, 0, 0), 15.5);
        let out = d.path().join("out");
        write_composite(&out, &tile).unwrap();
        assert_eq!(read_composite(&out.join("composite.json")).unwrap(), tile);
    }

    #[test]
    fn short_band_file_is_schema_error() {
        let d = tempfile::tempdir().unwrap();
        std::fs::write(d.path().join("x.f32"), [0u8; 7]).unwrap();
        assert!(matches!(read_plane(&d.path().join("x.f32"), 2), Err(Error::Schema { .. })));
    }
}
