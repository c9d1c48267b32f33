//! Seeded synthetic scenarios with a known variance budget.
//!
//! Each enumeration area carries a time-invariant wealth latent that drives
//! both asset ownership and the image features. Log consumption of a visit
//! mixes that latent, a linear functional of the visit's own weather
//! quintile vector, and idiosyncratic noise, in configured variance shares.
//! Image features therefore see the slow component only, weather sees the
//! fast one.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::weather::{build_weather_features, nearest_cell_id, WeatherTable, CELL_SIZE_DEG, WEATHER_FEATURES};
use crate::{
    AssetInventory, DailyWeatherRecord, Date, EnumerationAreaVisit, Error, HouseholdConsumptionRecord,
    ImageFeatureRecord, Result, Source, Visit, VisitKey, IMAGE_FEATURES_PER_SOURCE,
};

/// Start years of the four survey waves.
pub const WAVE_YEARS: [i32; 4] = [2010, 2012, 2015, 2018];
pub const DHS_YEARS: [i32; 3] = [2008, 2013, 2018];
pub const COMMON_ASSETS: [&str; 8] = [
    "bicycle",
    "car",
    "fridge",
    "generator",
    "mobile_phone",
    "motorcycle",
    "radio",
    "television",
];
pub const GHS_ONLY_ASSETS: [&str; 2] = ["fan", "sewing_machine"];
pub const DHS_ONLY_ASSETS: [&str; 2] = ["computer", "watch"];

const KM_PER_DEGREE: f64 = 111.32;
const LOG_CONSUMPTION_MEAN: f64 = 11.0;
const LOG_CONSUMPTION_SD: f64 = 0.5;
const HOUSEHOLD_SD: f64 = 0.1;
const IMAGE_NUISANCE_SD: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n_eas: usize,
    pub households_per_ea: usize,
    pub waves: u8,
    pub visits_per_wave: u8,
    /// Variance shares of EA-visit log consumption. Whatever the three
    /// leave of 1 is added to the noise.
    pub asset_share: f64,
    pub weather_share: f64,
    pub noise_share: f64,
    /// Standard deviation of the per-visit noise in each image feature,
    /// relative to unit-variance wealth and EA nuisance terms.
    pub image_noise: f64,
    /// Quadratic term added to the weather effect before standardization.
    pub weather_nonlinearity: f64,
    pub dhs_clusters: usize,
    /// Maximum published-coordinate displacement; 0 keeps true centroids.
    pub jitter_km: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_eas: 150,
            households_per_ea: 10,
            waves: 4,
            visits_per_wave: 2,
            asset_share: 0.45,
            weather_share: 0.30,
            noise_share: 0.25,
            image_noise: 0.3,
            weather_nonlinearity: 0.0,
            dhs_clusters: 50,
            jitter_km: 0.0,
            seed: 42,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let shares = [self.asset_share, self.weather_share, self.noise_share];
        if shares.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return bad(format!("variance shares must be >= 0, got {shares:?}"));
        }
        if shares.iter().sum::<f64>() > 1.0 + 1e-9 {
            return bad(format!("variance shares sum to more than 1: {shares:?}"));
        }
        if self.n_eas < 1 || self.households_per_ea < 1 || self.dhs_clusters < 1 {
            return bad("counts must be >= 1".into());
        }
        if !(1..=4).contains(&self.waves) {
            return bad(format!("waves must be 1..=4, got {}", self.waves));
        }
        if !(1..=2).contains(&self.visits_per_wave) {
            return bad(format!("visits_per_wave must be 1 or 2, got {}", self.visits_per_wave));
        }
        if !(self.image_noise >= 0.0) || !(self.jitter_km >= 0.0) || !self.weather_nonlinearity.is_finite() {
            return bad("image_noise and jitter_km must be >= 0".into());
        }
        if self.n_eas > 1500 {
            return bad(format!("at most 1500 EAs fit the cell layout, got {}", self.n_eas));
        }
        Ok(())
    }

    /// Effective noise share: configured noise plus any unallocated share.
    pub fn residual_share(&self) -> f64 {
        (1.0 - self.asset_share - self.weather_share).max(0.0)
    }
}

/// Population R² ceilings implied by the variance budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioTruth {
    /// Consumption explained by wealth and weather together.
    pub consumption_full: f64,
    /// Consumption explained by image features (wealth only).
    pub consumption_image_only: f64,
    pub consumption_weather_only: f64,
    /// Expected consumption gain from adding weather to image features.
    pub consumption_weather_gain: f64,
    /// The asset index does not depend on weather.
    pub asset_weather_gain: f64,
}

pub fn scenario_truth(config: &ScenarioConfig) -> Result<ScenarioTruth> {
    config.validate()?;
    let (a, w) = (config.asset_share, config.weather_share);
    Ok(ScenarioTruth {
        consumption_full: a + w,
        consumption_image_only: a,
        consumption_weather_only: w,
        consumption_weather_gain: w,
        asset_weather_gain: 0.0,
    })
}

/// Standardized latent components of one visit's log consumption.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisitLatent {
    pub wealth: f64,
    pub weather: f64,
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub visits: Vec<EnumerationAreaVisit>,
    pub households: Vec<HouseholdConsumptionRecord>,
    pub assets: Vec<AssetInventory>,
    /// `(cell_id, record)` sorted by cell then date.
    pub weather: Vec<(String, DailyWeatherRecord)>,
    pub features: Vec<ImageFeatureRecord>,
    pub latents: BTreeMap<VisitKey, VisitLatent>,
    /// Weather cell each EA actually experiences.
    pub true_cells: BTreeMap<String, String>,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn standardize(v: &mut [f64]) {
    let n = v.len() as f64;
    if v.len() < 2 {
        v.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    let m = v.iter().sum::<f64>() / n;
    let sd = libm::sqrt(v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n);
    for x in v.iter_mut() {
        *x = if sd > 0.0 { (*x - m) / sd } else { 0.0 };
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

struct CellClimate {
    base_temp: f64,
    wetness: f64,
}

fn simulate_cell(rng: &mut ChaCha8Rng, climate: &CellClimate, start: Date, days: i32) -> Vec<DailyWeatherRecord> {
    let two_pi = 2.0 * core::f64::consts::PI;
    let phi: f64 = 0.97;
    let innov = libm::sqrt(1.0 - phi * phi);
    let (mut t_anom, mut p_anom) = (normal(rng) * 1.5, normal(rng) * 0.5);
    let exp1 = Exp::new(1.0).expect("unit rate");
    let mut out = Vec::with_capacity(days as usize);
    for i in 0..days {
        let date = start + i;
        let (y, _, _) = date.ymd();
        let doy = f64::from(date - Date::from_ymd(y, 1, 1).expect("Jan 1"));
        t_anom = phi * t_anom + innov * 1.5 * normal(rng);
        p_anom = phi * p_anom + innov * 0.5 * normal(rng);
        let season = libm::sin(two_pi * (doy - 80.0) / 365.0).max(0.0);
        let temp = climate.base_temp + 3.0 * libm::cos(two_pi * (doy - 100.0) / 365.0) + t_anom + 0.8 * normal(rng);
        let p_wet = ((0.05 + 0.6 * season) * libm::exp(p_anom)).min(0.95);
        let precip = if rng.random::<f64>() < p_wet {
            8.0 * climate.wetness * libm::exp(p_anom) * exp1.sample(rng)
        } else {
            0.0
        };
        out.push(DailyWeatherRecord {
            date,
            precip_total: precip,
            temp_mean: temp,
        });
    }
    out
}

fn visit_end_date(rng: &mut ChaCha8Rng, wave: u8, visit: Visit) -> Date {
    let y = WAVE_YEARS[usize::from(wave) - 1];
    let offset = rng.random_range(0..60);
    match visit {
        Visit::PostPlanting => Date::from_ymd(y, 9, 15).expect("valid") + offset,
        Visit::PostHarvest => Date::from_ymd(y + 1, 2, 15).expect("valid") + offset,
    }
}

/// Generates every input table for one scenario. Deterministic in
/// `config.seed`.
pub fn generate_scenario(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.n_eas;

    // Distinct 0.25° cells inside a Nigeria-sized box.
    let (lat0, lon0) = (4.5, 3.0);
    let (n_lat, n_lon) = (36usize, 44usize);
    let mut slots: Vec<usize> = (0..n_lat * n_lon).collect();
    slots.shuffle(&mut rng);
    let ea_ids: Vec<String> = (0..n).map(|i| format!("ea{:04}", i + 1)).collect();
    let mut centers = Vec::with_capacity(n);
    let mut true_cells = BTreeMap::new();
    for (i, slot) in slots.iter().take(n).enumerate() {
        let clat = lat0 + (slot / n_lon) as f64 * CELL_SIZE_DEG;
        let clon = lon0 + (slot % n_lon) as f64 * CELL_SIZE_DEG;
        let lat = clat + rng.random_range(-0.1..0.1);
        let lon = clon + rng.random_range(-0.1..0.1);
        true_cells.insert(ea_ids[i].clone(), nearest_cell_id(lat, lon));
        centers.push((lat, lon));
    }

    let mut wealth: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    standardize(&mut wealth);

    // Visit schedule.
    let visit_kinds: &[Visit] = if config.visits_per_wave == 2 {
        &[Visit::PostPlanting, Visit::PostHarvest]
    } else {
        &[Visit::PostPlanting]
    };
    let mut visits = Vec::new();
    for (i, ea) in ea_ids.iter().enumerate() {
        for wave in 1..=config.waves {
            for &v in visit_kinds {
                let (mut lat, mut lon) = centers[i];
                if config.jitter_km > 0.0 {
                    let r = config.jitter_km * libm::sqrt(rng.random::<f64>()) / KM_PER_DEGREE;
                    let theta = rng.random::<f64>() * 2.0 * core::f64::consts::PI;
                    lat += r * libm::sin(theta);
                    lon += r * libm::cos(theta) / libm::cos(lat.to_radians());
                }
                visits.push(EnumerationAreaVisit {
                    key: VisitKey::new(ea.clone(), wave, v),
                    end_date: visit_end_date(&mut rng, wave, v),
                    lat,
                    lon,
                });
            }
        }
    }

    // Daily weather for every cell a visit can be matched to.
    let first = visits.iter().map(|v| v.end_date).min().expect("nonempty") - 200;
    let last = visits.iter().map(|v| v.end_date).max().expect("nonempty");
    let span = last - first;
    let mut cells: BTreeSet<String> = true_cells.values().cloned().collect();
    cells.extend(visits.iter().map(|v| nearest_cell_id(v.lat, v.lon)));
    let mut weather = Vec::new();
    for cell in &cells {
        let climate = CellClimate {
            base_temp: rng.random_range(24.0..29.0),
            wetness: rng.random_range(0.6..1.4),
        };
        for rec in simulate_cell(&mut rng, &climate, first, span) {
            weather.push((cell.clone(), rec));
        }
    }
    let table = WeatherTable::from_records(weather.iter().cloned())?;

    // Weather effect: fixed linear functional of the standardized quintile
    // vector at the true cell, plus an optional quadratic distortion.
    let q: Vec<[f64; WEATHER_FEATURES]> = visits
        .iter()
        .map(|v| build_weather_features(&table, &true_cells[&v.key.ea_id], v.end_date, 30).map(|f| f.0))
        .collect::<Result<_>>()?;
    let weights: Vec<f64> = (0..WEATHER_FEATURES).map(|_| normal(&mut rng)).collect();
    let mut cols: Vec<Vec<f64>> = (0..WEATHER_FEATURES).map(|j| q.iter().map(|r| r[j]).collect()).collect();
    cols.iter_mut().for_each(|c| standardize(c));
    let mut effect: Vec<f64> = (0..visits.len())
        .map(|i| weights.iter().zip(&cols).map(|(w, c)| w * c[i]).sum())
        .collect();
    standardize(&mut effect);
    if config.weather_nonlinearity != 0.0 {
        for e in effect.iter_mut() {
            *e += config.weather_nonlinearity * (*e * *e - 1.0);
        }
        standardize(&mut effect);
    }
    let mut noise: Vec<f64> = (0..visits.len()).map(|_| normal(&mut rng)).collect();
    standardize(&mut noise);

    let ea_index: BTreeMap<&str, usize> = ea_ids.iter().enumerate().map(|(i, e)| (e.as_str(), i)).collect();
    let (sa, sw, sn) = (
        libm::sqrt(config.asset_share),
        libm::sqrt(config.weather_share),
        libm::sqrt(config.residual_share()),
    );
    let mut latents = BTreeMap::new();
    let mut households = Vec::new();
    let hh_sizes: Vec<u32> = (0..n * config.households_per_ea).map(|_| rng.random_range(1..=9)).collect();
    for (i, v) in visits.iter().enumerate() {
        let g = ea_index[v.key.ea_id.as_str()];
        let lat = VisitLatent {
            wealth: wealth[g],
            weather: effect[i],
            noise: noise[i],
        };
        latents.insert(v.key.clone(), lat);
        let log_pc = LOG_CONSUMPTION_MEAN + LOG_CONSUMPTION_SD * (sa * lat.wealth + sw * lat.weather + sn * lat.noise);
        for h in 0..config.households_per_ea {
            let eta = HOUSEHOLD_SD * normal(&mut rng) - HOUSEHOLD_SD * HOUSEHOLD_SD / 2.0;
            let size = hh_sizes[g * config.households_per_ea + h];
            households.push(HouseholdConsumptionRecord {
                hh_id: format!("{}-h{:02}", v.key.ea_id, h + 1),
                key: v.key.clone(),
                total_expenditure: libm::exp(log_pc + eta) * f64::from(size),
                household_size: size,
            });
        }
    }

    // Asset ownership: logistic in EA wealth plus a persistent household term.
    let all_assets: Vec<&str> = COMMON_ASSETS.iter().chain(&GHS_ONLY_ASSETS).chain(&DHS_ONLY_ASSETS).copied().collect();
    let params: BTreeMap<&str, (f64, f64)> = all_assets
        .iter()
        .map(|a| (*a, (rng.random_range(-2.0..1.0), rng.random_range(1.2..2.0))))
        .collect();
    let draw_inventory = |rng: &mut ChaCha8Rng, hh_id: String, source, year, ea: &str, w: f64| {
        let names: Vec<&str> = match source {
            Source::Ghs => COMMON_ASSETS.iter().chain(&GHS_ONLY_ASSETS).copied().collect(),
            Source::Dhs => COMMON_ASSETS.iter().chain(&DHS_ONLY_ASSETS).copied().collect(),
        };
        let ownership = names
            .into_iter()
            .map(|a| {
                let (c, d) = params[a];
                (String::from(a), u8::from(rng.random::<f64>() < sigmoid(c + d * w)))
            })
            .collect();
        AssetInventory {
            hh_id,
            source,
            survey_year: year,
            ea_id: ea.into(),
            ownership,
        }
    };
    let hh_wealth: Vec<f64> = (0..n * config.households_per_ea).map(|_| 0.6 * normal(&mut rng)).collect();
    let mut assets = Vec::new();
    for v in visits.iter().filter(|v| v.key.visit == Visit::PostPlanting) {
        let g = ea_index[v.key.ea_id.as_str()];
        for h in 0..config.households_per_ea {
            let w = wealth[g] + hh_wealth[g * config.households_per_ea + h];
            let id = format!("{}-h{:02}", v.key.ea_id, h + 1);
            assets.push(draw_inventory(&mut rng, id, Source::Ghs, v.end_date.year(), &v.key.ea_id, w));
        }
    }
    for &year in &DHS_YEARS {
        for c in 0..config.dhs_clusters {
            let ea = format!("dhs{year}-{:04}", c + 1);
            let cw = normal(&mut rng);
            for h in 0..config.households_per_ea {
                let w = cw + 0.6 * normal(&mut rng);
                let id = format!("{ea}-h{:02}", h + 1);
                assets.push(draw_inventory(&mut rng, id, Source::Dhs, year, &ea, w));
            }
        }
    }

    // Image features: wealth loading + static EA nuisance + per-visit noise.
    let loadings: Vec<f64> = (0..2 * IMAGE_FEATURES_PER_SOURCE).map(|_| normal(&mut rng)).collect();
    let nuisance: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..2 * IMAGE_FEATURES_PER_SOURCE).map(|_| IMAGE_NUISANCE_SD * normal(&mut rng)).collect())
        .collect();
    let mut features = Vec::with_capacity(visits.len());
    for v in &visits {
        let g = ea_index[v.key.ea_id.as_str()];
        let row: Vec<f64> = loadings
            .iter()
            .zip(&nuisance[g])
            .map(|(l, u)| l * wealth[g] + u + config.image_noise * normal(&mut rng))
            .collect();
        features.push(ImageFeatureRecord::from_row(v.key.clone(), row)?);
    }

    Ok(Scenario {
        config: config.clone(),
        visits,
        households,
        assets,
        weather,
        features,
        latents,
        true_cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            n_eas: 6,
            households_per_ea: 3,
            dhs_clusters: 2,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn truth_bounds() {
        let cfg = ScenarioConfig {
            asset_share: 0.5,
            weather_share: 0.3,
            noise_share: 0.2,
            ..ScenarioConfig::default()
        };
        let t = scenario_truth(&cfg).unwrap();
        assert!((t.consumption_full - 0.8).abs() < 1e-15);
        assert_eq!(t.consumption_image_only, 0.5);
    }

    #[test]
    fn invalid_configs() {
        for cfg in [
            ScenarioConfig { asset_share: 0.8, ..small() },
            ScenarioConfig { noise_share: -0.1, ..small() },
            ScenarioConfig { n_eas: 0, ..small() },
            ScenarioConfig { visits_per_wave: 3, ..small() },
        ] {
            assert!(matches!(generate_scenario(&cfg), Err(Error::Config(_))));
        }
    }

    #[test]
    fn shapes_and_determinism() {
        let cfg = small();
        let a = generate_scenario(&cfg).unwrap();
        assert_eq!(a.visits.len(), 6 * 4 * 2);
        assert_eq!(a.households.len(), 6 * 8 * 3);
        assert_eq!(a.features.len(), a.visits.len());
        assert_eq!(a.assets.len(), 6 * 4 * 3 + 3 * 2 * 3);
        assert_eq!(a, generate_scenario(&cfg).unwrap());
        let b = generate_scenario(&ScenarioConfig { seed: 7, ..cfg }).unwrap();
        assert_ne!(a.features, b.features);
    }
}
