//! Evaluation metrics and variance-decomposition diagnostics.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::linalg::Matrix;
use crate::welfare::TargetKind;
use crate::{Error, Result};

/// Both R² definitions for one set of predictions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RSquared {
    /// `1 − SSres/SStot`; negative when worse than the mean.
    pub r2_sse: f64,
    /// Squared Pearson correlation, 0 when predictions are constant.
    pub r2_pearson: f64,
    /// Set when the predictions are constant and `r2_pearson` is undefined.
    pub degenerate_prediction: bool,
    pub n: usize,
}

pub fn r_squared(y: &[f64], yhat: &[f64]) -> Result<RSquared> {
    if y.len() != yhat.len() {
        return Err(Error::Dimension {
            expected: y.len(),
            got: yhat.len(),
        });
    }
    let n = y.len();
    if n < 2 {
        return Err(Error::Value(format!("R² needs at least 2 observations, got {n}")));
    }
    let nf = n as f64;
    let my = y.iter().sum::<f64>() / nf;
    let mp = yhat.iter().sum::<f64>() / nf;
    let (mut ss_tot, mut ss_res, mut ss_p, mut cross) = (0.0, 0.0, 0.0, 0.0);
    for (a, b) in y.iter().zip(yhat) {
        let (dy, dp) = (a - my, b - mp);
        ss_tot += dy * dy;
        ss_res += (a - b) * (a - b);
        ss_p += dp * dp;
        cross += dy * dp;
    }
    if !(ss_tot > 0.0) {
        return Err(Error::DegenerateTarget);
    }
    let degenerate_prediction = !(ss_p > 0.0);
    let r2_pearson = if degenerate_prediction {
        0.0
    } else {
        (cross * cross / (ss_tot * ss_p)).clamp(0.0, 1.0)
    };
    Ok(RSquared {
        r2_sse: 1.0 - ss_res / ss_tot,
        r2_pearson,
        degenerate_prediction,
        n,
    })
}

/// One row of the model-performance table.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub model: String,
    pub target: TargetKind,
    pub feature_set: String,
    pub r2_sse: f64,
    pub r2_pearson: f64,
    pub n: usize,
}

impl EvaluationReport {
    pub fn new(model: impl Into<String>, target: TargetKind, feature_set: impl Into<String>, r2: RSquared) -> Self {
        EvaluationReport {
            model: model.into(),
            target,
            feature_set: feature_set.into(),
            r2_sse: r2.r2_sse,
            r2_pearson: r2.r2_pearson,
            n: r2.n,
        }
    }
}

/// Reports ordered by (target, feature set); equal keys keep input order.
pub fn performance_table(reports: &[EvaluationReport]) -> Vec<EvaluationReport> {
    let mut rows = reports.to_vec();
    rows.sort_by(|a, b| (a.target, &a.feature_set).cmp(&(b.target, &b.feature_set)));
    rows
}

/// Per-column ratio of within-group to total sum of squares.
///
/// The total is accumulated as `WSS + BSS` (law of total variance), which
/// keeps `WSS ≤ TSS` exact in floating point. Columns with `TSS = 0` yield
/// `None`.
pub fn wss_tss_ratio<S: AsRef<str>>(x: &Matrix, groups: &[S]) -> Result<Vec<Option<f64>>> {
    let n = x.rows();
    if groups.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: groups.len(),
        });
    }
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    let member: Vec<usize> = groups
        .iter()
        .map(|g| {
            let next = index.len();
            *index.entry(g.as_ref()).or_insert(next)
        })
        .collect();
    let g = index.len();
    if n < 2 || g < 2 {
        return Err(Error::Value(format!(
            "need at least 2 rows and 2 groups, got {n} rows in {g} groups"
        )));
    }
    let mut counts = alloc::vec![0usize; g];
    for &m in &member {
        counts[m] += 1;
    }
    let mut out = Vec::with_capacity(x.cols());
    let mut sums = alloc::vec![0.0; g];
    for c in 0..x.cols() {
        sums.iter_mut().for_each(|s| *s = 0.0);
        let mut total = 0.0;
        for r in 0..n {
            let v = x.get(r, c);
            sums[member[r]] += v;
            total += v;
        }
        let grand = total / n as f64;
        let mut wss = 0.0;
        for r in 0..n {
            let m = member[r];
            let d = x.get(r, c) - sums[m] / counts[m] as f64;
            wss += d * d;
        }
        let bss: f64 = (0..g)
            .map(|m| {
                let d = sums[m] / counts[m] as f64 - grand;
                counts[m] as f64 * d * d
            })
            .sum();
        let tss = wss + bss;
        out.push(if tss > 0.0 && tss.is_finite() { Some(wss / tss) } else { None });
    }
    Ok(out)
}

/// Right-continuous step points `(value, fraction ≤ value)` at the sorted
/// unique values.
pub fn ecdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ECDF input".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *v => last.1 = frac,
            _ => out.push((*v, frac)),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn r2_examples() {
        let y = [1.0, 2.0, 3.0];
        let r = r_squared(&y, &y).unwrap();
        assert_eq!((r.r2_sse, r.r2_pearson), (1.0, 1.0));
        let r = r_squared(&y, &[2.0; 3]).unwrap();
        assert_eq!((r.r2_sse, r.r2_pearson, r.degenerate_prediction), (0.0, 0.0, true));
        let r = r_squared(&y, &[1.0, 2.0, 4.0]).unwrap();
        assert_eq!(r.r2_sse, 0.5);
        assert_eq!(r_squared(&[1.0, 1.0], &[0.0, 1.0]), Err(Error::DegenerateTarget));
    }

    #[test]
    fn wss_examples() {
        let col = |v: &[f64]| Matrix::from_vec(v.len(), 1, v.to_vec()).unwrap();
        let g = ["a", "a", "b", "b"];
        assert_eq!(wss_tss_ratio(&col(&[1.0, 1.0, 4.0, 4.0]), &g).unwrap(), vec![Some(0.0)]);
        assert_eq!(wss_tss_ratio(&col(&[1.0, 3.0, 3.0, 1.0]), &g).unwrap(), vec![Some(1.0)]);
        assert_eq!(wss_tss_ratio(&col(&[1.0, 3.0, 2.0, 6.0]), &g).unwrap(), vec![Some(5.0 / 7.0)]);
        assert_eq!(wss_tss_ratio(&col(&[2.0; 4]), &g).unwrap(), vec![None]);
        assert!(wss_tss_ratio(&col(&[1.0, 2.0]), &["a", "a"]).is_err());
    }

    #[test]
    fn ecdf_examples() {
        assert_eq!(ecdf(&[5.0]).unwrap(), vec![(5.0, 1.0)]);
        assert_eq!(ecdf(&[2.0, 1.0, 1.0]).unwrap(), vec![(1.0, 2.0 / 3.0), (2.0, 1.0)]);
        assert_eq!(ecdf(&[]), Err(Error::Empty));
    }

    #[test]
    fn table_sorts_stably() {
        let rep = |m: &str, t, f: &str| EvaluationReport {
            model: m.into(),
            target: t,
            feature_set: f.into(),
            r2_sse: 0.1,
            r2_pearson: 0.2,
            n: 10,
        };
        let rows = performance_table(&[
            rep("c1", TargetKind::LogPcConsumption, "ms+nl"),
            rep("a1", TargetKind::AssetIndex, "ms+nl+weather"),
            rep("c2", TargetKind::LogPcConsumption, "ms+nl"),
            rep("a2", TargetKind::AssetIndex, "ms+nl"),
        ]);
        let order: Vec<&str> = rows.iter().map(|r| r.model.as_str()).collect();
        assert_eq!(order, ["a2", "a1", "c1", "c2"]);
    }
}
