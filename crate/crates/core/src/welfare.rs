//! Target construction: the pooled GHS/DHS asset index and log per-capita
//! consumption at the enumeration-area-visit level.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::linalg::{symmetric_eigen, Matrix};
use crate::{AssetInventory, Error, HouseholdConsumptionRecord, Result, Source, VisitKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TargetKind {
    #[cfg_attr(feature = "serde", serde(rename = "asset_index"))]
    AssetIndex,
    #[cfg_attr(feature = "serde", serde(rename = "log_pc_consumption"))]
    LogPcConsumption,
}

impl TargetKind {
    pub fn label(self) -> &'static str {
        match self {
            TargetKind::AssetIndex => "asset_index",
            TargetKind::LogPcConsumption => "log_pc_consumption",
        }
    }
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Accepts the column labels and the short CLI names `asset` / `consumption`.
impl FromStr for TargetKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<TargetKind> {
        match s {
            "asset" | "asset_index" => Ok(TargetKind::AssetIndex),
            "consumption" | "log_pc_consumption" => Ok(TargetKind::LogPcConsumption),
            _ => Err(Error::Value(format!("unknown target `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WelfareTarget {
    pub key: VisitKey,
    pub kind: TargetKind,
    pub value: f64,
}

/// Standardization statistics and first-component loadings of the asset
/// ownership matrix.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AssetIndexModel {
    pub asset_names: Vec<String>,
    pub means: Vec<f64>,
    pub stdevs: Vec<f64>,
    /// Unit-norm first principal component of the correlation matrix.
    pub loadings: Vec<f64>,
    /// Sign applied to the solver's eigenvector to satisfy `Σ loadings ≥ 0`.
    pub sign: i8,
    /// Share of standardized variance captured by the component.
    pub explained_variance_ratio: f64,
    /// Constant columns removed before fitting.
    pub dropped: Vec<String>,
}

/// Stacks the inventories into a household × asset 0/1 matrix restricted to
/// assets that appear in at least one GHS and one DHS inventory.
///
/// Rows keep input order; columns are sorted by asset name.
pub fn build_pooled_asset_matrix(inventories: &[AssetInventory]) -> Result<(Matrix, Vec<String>)> {
    if inventories.len() < 2 {
        return Err(Error::Value(format!(
            "need at least 2 households, got {}",
            inventories.len()
        )));
    }
    let mut seen: BTreeMap<&str, (bool, bool)> = BTreeMap::new();
    for inv in inventories {
        inv.validate()?;
        for name in inv.ownership.keys() {
            let e = seen.entry(name.as_str()).or_default();
            match inv.source {
                Source::Ghs => e.0 = true,
                Source::Dhs => e.1 = true,
            }
        }
    }
    let names: Vec<String> = seen
        .into_iter()
        .filter(|(_, (g, d))| *g && *d)
        .map(|(n, _)| String::from(n))
        .collect();
    if names.is_empty() {
        return Err(Error::NoCommonAssets);
    }
    let mut m = Matrix::zeros(inventories.len(), names.len());
    for (r, inv) in inventories.iter().enumerate() {
        for (c, name) in names.iter().enumerate() {
            let v = inv
                .ownership
                .get(name)
                .ok_or_else(|| Error::MissingAsset(format!("{name} (household {})", inv.hh_id)))?;
            m.set(r, c, f64::from(*v));
        }
    }
    Ok((m, names))
}

fn column_stats(m: &Matrix, c: usize) -> (f64, f64) {
    let n = m.rows() as f64;
    let mean = (0..m.rows()).map(|r| m.get(r, c)).sum::<f64>() / n;
    let var = (0..m.rows())
        .map(|r| {
            let d = m.get(r, c) - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    (mean, libm::sqrt(var))
}

/// Fits the asset index: population-standardize, drop constant columns and
/// take the leading eigenvector of the correlation matrix, signed so that
/// the loadings sum to a non-negative value (first nonzero loading positive
/// on a tie).
pub fn fit_asset_index(matrix: &Matrix, asset_names: &[String]) -> Result<AssetIndexModel> {
    if matrix.cols() != asset_names.len() {
        return Err(Error::Dimension {
            expected: matrix.cols(),
            got: asset_names.len(),
        });
    }
    if matrix.rows() < 2 {
        return Err(Error::Value(format!(
            "need at least 2 rows, got {}",
            matrix.rows()
        )));
    }
    let unique: BTreeSet<&String> = asset_names.iter().collect();
    if unique.len() != asset_names.len() {
        return Err(Error::Value("duplicate asset names".into()));
    }

    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    let (mut means, mut stdevs) = (Vec::new(), Vec::new());
    for c in 0..matrix.cols() {
        let (mean, sd) = column_stats(matrix, c);
        if sd > 0.0 {
            kept.push(c);
            means.push(mean);
            stdevs.push(sd);
        } else {
            dropped.push(asset_names[c].clone());
        }
    }
    if kept.is_empty() {
        return Err(Error::DegenerateMatrix);
    }

    let n = matrix.rows();
    let k = kept.len();
    let mut z = Matrix::zeros(n, k);
    for r in 0..n {
        for (j, &c) in kept.iter().enumerate() {
            z.set(r, j, (matrix.get(r, c) - means[j]) / stdevs[j]);
        }
    }
    let mut corr = z.transpose().gram();
    for v in 0..k {
        for w in 0..k {
            corr.set(v, w, corr.get(v, w) / n as f64);
        }
    }
    let (values, vectors) = symmetric_eigen(&corr);
    let mut loadings = vectors.column(0);
    let norm = libm::sqrt(loadings.iter().map(|x| x * x).sum::<f64>());
    for l in &mut loadings {
        *l /= norm;
    }
    let sum: f64 = loadings.iter().sum();
    let flip = if sum.abs() > 1e-12 {
        sum < 0.0
    } else {
        loadings.iter().find(|l| l.abs() > 1e-12).is_some_and(|&l| l < 0.0)
    };
    let sign = if flip { -1 } else { 1 };
    if flip {
        for l in &mut loadings {
            *l = -*l;
        }
    }
    let trace: f64 = values.iter().sum();

    Ok(AssetIndexModel {
        asset_names: kept.iter().map(|&c| asset_names[c].clone()).collect(),
        means,
        stdevs,
        loadings,
        sign,
        explained_variance_ratio: if trace > 0.0 { values[0] / trace } else { 0.0 },
        dropped,
    })
}

impl AssetIndexModel {
    /// Index value for one set of ownership indicators, in model column order.
    pub fn score_values(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .zip(&self.means)
            .zip(&self.stdevs)
            .zip(&self.loadings)
            .map(|(((x, m), s), l)| l * (x - m) / s)
            .sum()
    }
}

pub fn score_asset_index(model: &AssetIndexModel, inventory: &AssetInventory) -> Result<f64> {
    let values = model
        .asset_names
        .iter()
        .map(|name| {
            inventory
                .ownership
                .get(name)
                .map(|&v| f64::from(v))
                .ok_or_else(|| Error::MissingAsset(name.clone()))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(model.score_values(&values))
}

/// Cluster identity of an asset observation: households of one enumeration
/// area interviewed by one survey in one year.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AssetCluster {
    pub source: Source,
    pub ea_id: String,
    pub survey_year: i32,
}

/// Mean household score per (source, ea_id, survey_year). GHS and DHS
/// clusters are aggregated the same way.
pub fn aggregate_asset_index(
    model: &AssetIndexModel,
    inventories: &[AssetInventory],
) -> Result<BTreeMap<AssetCluster, f64>> {
    let mut acc: BTreeMap<AssetCluster, (f64, usize)> = BTreeMap::new();
    for inv in inventories {
        let s = score_asset_index(model, inv)?;
        let e = acc
            .entry(AssetCluster {
                source: inv.source,
                ea_id: inv.ea_id.clone(),
                survey_year: inv.survey_year,
            })
            .or_insert((0.0, 0));
        e.0 += s;
        e.1 += 1;
    }
    Ok(acc
        .into_iter()
        .map(|(k, (s, n))| (k, s / n as f64))
        .collect())
}

/// `ln(mean over households of expenditure / size)` for one visit key:
/// average first, then log.
pub fn aggregate_log_consumption(
    records: &[HouseholdConsumptionRecord],
    key: &VisitKey,
) -> Result<WelfareTarget> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for r in records.iter().filter(|r| &r.key == key) {
        let pc = r.per_capita();
        if !(pc > 0.0) || !pc.is_finite() {
            return Err(Error::NonpositiveConsumption(format!(
                "household {} has per-capita {pc}",
                r.hh_id
            )));
        }
        sum += pc;
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyGroup);
    }
    Ok(WelfareTarget {
        key: key.clone(),
        kind: TargetKind::LogPcConsumption,
        value: libm::log(sum / n as f64),
    })
}

/// Log per-capita consumption for every visit key present, sorted by key.
pub fn log_consumption_targets(records: &[HouseholdConsumptionRecord]) -> Result<Vec<WelfareTarget>> {
    let mut groups: BTreeMap<&VisitKey, Vec<HouseholdConsumptionRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(&r.key).or_default().push(r.clone());
    }
    groups
        .into_iter()
        .map(|(k, rs)| aggregate_log_consumption(&rs, k))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Visit;
    use alloc::vec;

    fn inv(hh: &str, source: Source, assets: &[(&str, u8)]) -> AssetInventory {
        AssetInventory {
            hh_id: hh.into(),
            source,
            survey_year: 2012,
            ea_id: "ea".into(),
            ownership: assets.iter().map(|(n, v)| (String::from(*n), *v)).collect(),
        }
    }

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| String::from(*s)).collect()
    }

    #[test]
    fn pooled_columns_are_the_cross_source_intersection() {
        let invs = [
            inv("a", Source::Ghs, &[("radio", 1), ("tv", 0)]),
            inv("b", Source::Dhs, &[("tv", 1), ("car", 0)]),
        ];
        let (m, cols) = build_pooled_asset_matrix(&invs).unwrap();
        assert_eq!(cols, names(&["tv"]));
        assert_eq!(m.column(0), vec![0.0, 1.0]);
    }

    #[test]
    fn single_source_has_no_common_assets() {
        let invs = [
            inv("a", Source::Ghs, &[("tv", 1)]),
            inv("b", Source::Ghs, &[("tv", 0)]),
        ];
        assert_eq!(build_pooled_asset_matrix(&invs), Err(Error::NoCommonAssets));
    }

    #[test]
    fn pooled_matrix_matches_inputs() {
        let rows: [[u8; 3]; 4] = [[1, 0, 1], [0, 0, 1], [1, 1, 0], [0, 1, 1]];
        let cols = ["a", "b", "c"];
        let invs: Vec<_> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let src = if i % 2 == 0 { Source::Ghs } else { Source::Dhs };
                let a: Vec<_> = cols.iter().zip(r).map(|(c, v)| (*c, *v)).collect();
                inv(&format!("h{i}"), src, &a)
            })
            .collect();
        let (m, got) = build_pooled_asset_matrix(&invs).unwrap();
        assert_eq!(got, names(&cols));
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                assert_eq!(m.get(i, j), f64::from(*v));
            }
        }
    }

    #[test]
    fn perfectly_correlated_pair() {
        let m = Matrix::from_rows(&[[1.0, 1.0], [0.0, 0.0], [1.0, 1.0], [0.0, 0.0]]).unwrap();
        let model = fit_asset_index(&m, &names(&["a", "b"])).unwrap();
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert!((model.loadings[0] - h).abs() < 1e-12);
        assert!((model.loadings[1] - h).abs() < 1e-12);
    }

    #[test]
    fn constant_column_dropped() {
        let m = Matrix::from_rows(&[[1.0, 1.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        let model = fit_asset_index(&m, &names(&["tv", "roof"])).unwrap();
        assert_eq!(model.asset_names, names(&["tv"]));
        assert_eq!(model.loadings, vec![1.0]);
        assert_eq!(model.dropped, names(&["roof"]));
    }

    #[test]
    fn all_constant_is_degenerate() {
        let m = Matrix::from_rows(&[[1.0, 0.0], [1.0, 0.0]]).unwrap();
        assert_eq!(
            fit_asset_index(&m, &names(&["a", "b"])),
            Err(Error::DegenerateMatrix)
        );
    }

    #[test]
    fn sign_rule_tie_break() {
        // Anti-correlated pair: loadings ±1/√2 sum to zero, so the first
        // nonzero loading must be positive.
        let m = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let model = fit_asset_index(&m, &names(&["a", "b"])).unwrap();
        assert!(model.loadings[0] > 0.0);
        assert!(model.loadings[1] < 0.0);
    }

    #[test]
    fn scores_center_and_cancel() {
        let m = Matrix::from_rows(&[[1.0, 1.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let model = fit_asset_index(&m, &names(&["a", "b"])).unwrap();
        assert!(model.score_values(&model.means.clone()).abs() < 1e-15);
        let rich = inv("r", Source::Ghs, &[("a", 1), ("b", 1)]);
        let poor = inv("p", Source::Ghs, &[("a", 0), ("b", 0)]);
        let s = score_asset_index(&model, &rich).unwrap();
        assert!((s + score_asset_index(&model, &poor).unwrap()).abs() < 1e-12);
        let agg = aggregate_asset_index(&model, &[rich, poor]).unwrap();
        assert_eq!(agg.len(), 1);
        assert!(agg.values().next().unwrap().abs() < 1e-12);
        let missing = inv("m", Source::Ghs, &[("a", 1)]);
        assert_eq!(
            score_asset_index(&model, &missing),
            Err(Error::MissingAsset("b".into()))
        );
    }

    fn hh(id: &str, exp: f64, size: u32) -> HouseholdConsumptionRecord {
        HouseholdConsumptionRecord {
            hh_id: id.into(),
            key: VisitKey::new("ea", 1, Visit::PostHarvest),
            total_expenditure: exp,
            household_size: size,
        }
    }

    #[test]
    fn log_consumption_examples() {
        let key = VisitKey::new("ea", 1, Visit::PostHarvest);
        let t = aggregate_log_consumption(&[hh("a", core::f64::consts::E, 1)], &key).unwrap();
        assert!((t.value - 1.0).abs() < 1e-15);
        let t = aggregate_log_consumption(&[hh("a", 2.0, 2), hh("b", 9.0, 3)], &key).unwrap();
        // per-capita 1 and 3, mean 2
        assert!((t.value - core::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(
            aggregate_log_consumption(&[], &key),
            Err(Error::EmptyGroup)
        );
        assert!(matches!(
            aggregate_log_consumption(&[hh("z", 0.0, 2)], &key),
            Err(Error::NonpositiveConsumption(_))
        ));
    }
}
