//! Feature fusion, closed-form ridge regression and group-aware
//! cross-validation of the shrinkage parameter.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diagnose::r_squared;
use crate::linalg::{Cholesky, Matrix};
use crate::weather::{WeatherFeatureVector, WEATHER_FEATURES};
use crate::{Error, ImageFeatureRecord, Result, VisitKey, IMAGE_FEATURES_PER_SOURCE};

/// Which feature blocks enter the design matrix. Blocks are always
/// concatenated in the order MS | NL | weather.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FeatureSet {
    pub ms: bool,
    pub nl: bool,
    pub weather: bool,
}

impl FeatureSet {
    pub const MS_NL: FeatureSet = FeatureSet {
        ms: true,
        nl: true,
        weather: false,
    };
    pub const ALL: FeatureSet = FeatureSet {
        ms: true,
        nl: true,
        weather: true,
    };

    pub fn is_empty(self) -> bool {
        !(self.ms || self.nl || self.weather)
    }

    pub fn uses_image(self) -> bool {
        self.ms || self.nl
    }

    pub fn len(self) -> usize {
        let img = IMAGE_FEATURES_PER_SOURCE;
        usize::from(self.ms) * img + usize::from(self.nl) * img + usize::from(self.weather) * WEATHER_FEATURES
    }

    pub fn without_weather(self) -> FeatureSet {
        FeatureSet {
            weather: false,
            ..self
        }
    }

    /// Column names: `f0001..f0512` (MS), `f0513..f1024` (NL), `w01..w48`.
    pub fn column_names(self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.len());
        if self.ms {
            names.extend((1..=IMAGE_FEATURES_PER_SOURCE).map(|i| format!("f{i:04}")));
        }
        if self.nl {
            names.extend(
                (IMAGE_FEATURES_PER_SOURCE + 1..=2 * IMAGE_FEATURES_PER_SOURCE)
                    .map(|i| format!("f{i:04}")),
            );
        }
        if self.weather {
            names.extend(WeatherFeatureVector::column_names());
        }
        names
    }

    /// Recovers the set whose canonical columns are exactly `names`.
    pub fn from_columns(names: &[String]) -> Option<FeatureSet> {
        (1u8..8)
            .map(|bits| FeatureSet {
                ms: bits & 1 != 0,
                nl: bits & 2 != 0,
                weather: bits & 4 != 0,
            })
            .find(|fs| fs.len() == names.len() && fs.column_names() == names)
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = [(self.ms, "ms"), (self.nl, "nl"), (self.weather, "weather")]
            .into_iter()
            .filter_map(|(on, n)| on.then_some(n))
            .collect();
        f.write_str(&parts.join("+"))
    }
}

/// Parses `ms,nl,weather` or `ms+nl+weather` (any subset, any order).
impl FromStr for FeatureSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<FeatureSet> {
        let mut fs = FeatureSet::default();
        for part in s.split([',', '+']).map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "ms" => fs.ms = true,
                "nl" => fs.nl = true,
                "weather" => fs.weather = true,
                other => return Err(Error::Value(format!("unknown feature block `{other}`"))),
            }
        }
        if fs.is_empty() {
            return Err(Error::Value("feature set is empty".into()));
        }
        Ok(fs)
    }
}

pub fn fuse_features(
    image: Option<&ImageFeatureRecord>,
    weather: Option<&WeatherFeatureVector>,
    set: FeatureSet,
) -> Result<Vec<f64>> {
    let mut row = Vec::with_capacity(set.len());
    if set.uses_image() {
        let img = image.ok_or(Error::MissingBlock(if set.ms { "ms" } else { "nl" }))?;
        if set.ms {
            row.extend_from_slice(&img.ms_features);
        }
        if set.nl {
            row.extend_from_slice(&img.nl_features);
        }
    }
    if set.weather {
        row.extend_from_slice(weather.ok_or(Error::MissingBlock("weather"))?.values());
    }
    Ok(row)
}

/// Observations × features, with the enumeration area of each row as its
/// cross-validation group.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub keys: Vec<VisitKey>,
    pub columns: Vec<String>,
    pub x: Matrix,
}

impl DesignMatrix {
    pub fn new(keys: Vec<VisitKey>, columns: Vec<String>, x: Matrix) -> Result<DesignMatrix> {
        if x.rows() != keys.len() || x.cols() != columns.len() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} values for {} keys and {} columns",
                x.rows(),
                x.cols(),
                keys.len(),
                columns.len()
            )));
        }
        if let Some(i) = x.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "design row {} column {}",
                keys[i / columns.len()],
                columns[i % columns.len()]
            )));
        }
        Ok(DesignMatrix { keys, columns, x })
    }

    pub fn groups(&self) -> Vec<&str> {
        self.keys.iter().map(|k| k.ea_id.as_str()).collect()
    }

    pub fn rows(&self) -> usize {
        self.keys.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RidgeModel {
    pub lambda: f64,
    pub feature_names: Vec<String>,
    pub means: Vec<f64>,
    /// Population standard deviations; 0 marks a column dropped as constant.
    pub stdevs: Vec<f64>,
    /// Coefficients on the standardized features (0 for dropped columns).
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl RidgeModel {
    /// Prediction for a row already in `feature_names` order.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut acc = self.intercept;
        for (((x, m), s), b) in row.iter().zip(&self.means).zip(&self.stdevs).zip(&self.coefficients) {
            if *s > 0.0 {
                acc += (x - m) / s * b;
            }
        }
        acc
    }

    pub fn coefficient_norm(&self) -> f64 {
        libm::sqrt(self.coefficients.iter().map(|b| b * b).sum())
    }
}

/// Standardized training data prepared once, solvable for many λ.
///
/// Uses the `k × k` normal equations `(ZᵀZ + λI)β = Zᵀy′` or, when there
/// are fewer rows than retained columns and λ > 0, the equivalent `n × n`
/// system `β = Zᵀ(ZZᵀ + λI)⁻¹y′`. Both are factored by Cholesky.
pub struct RidgeSolver {
    names: Vec<String>,
    means: Vec<f64>,
    stdevs: Vec<f64>,
    retained: Vec<usize>,
    z: Matrix,
    centered_y: Vec<f64>,
    y_mean: f64,
    primal: Option<(Matrix, Vec<f64>)>,
    dual: Option<Matrix>,
}

impl RidgeSolver {
    pub fn new(x: &Matrix, feature_names: &[String], y: &[f64]) -> Result<RidgeSolver> {
        let (n, p) = (x.rows(), x.cols());
        if feature_names.len() != p {
            return Err(Error::Dimension {
                expected: p,
                got: feature_names.len(),
            });
        }
        if y.len() != n {
            return Err(Error::Dimension { expected: n, got: y.len() });
        }
        if n < 2 {
            return Err(Error::Value(format!("ridge needs at least 2 rows, got {n}")));
        }
        if y.iter().chain(x.as_slice()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("ridge training data".into()));
        }
        let nf = n as f64;
        let mut means = vec![0.0; p];
        for r in 0..n {
            for (m, v) in means.iter_mut().zip(x.row(r)) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= nf);
        let mut var = vec![0.0; p];
        for r in 0..n {
            for ((s, v), m) in var.iter_mut().zip(x.row(r)).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        let mut stdevs: Vec<f64> = var.iter().map(|v| libm::sqrt(v / nf)).collect();
        // Treat columns whose spread is pure rounding noise as constant.
        for (s, m) in stdevs.iter_mut().zip(&means) {
            if *s <= 1e-12 * m.abs().max(1e-300) {
                *s = 0.0;
            }
        }
        let retained: Vec<usize> = (0..p).filter(|&j| stdevs[j] > 0.0).collect();
        let k = retained.len();
        let mut z = Matrix::zeros(n, k);
        for r in 0..n {
            let src = x.row(r);
            let dst = z.row_mut(r);
            for (d, &j) in dst.iter_mut().zip(&retained) {
                *d = (src[j] - means[j]) / stdevs[j];
            }
        }
        let y_mean = y.iter().sum::<f64>() / nf;
        let centered_y = y.iter().map(|v| v - y_mean).collect();
        Ok(RidgeSolver {
            names: feature_names.to_vec(),
            means,
            stdevs,
            retained,
            z,
            centered_y,
            y_mean,
            primal: None,
            dual: None,
        })
    }

    fn model(&self, lambda: f64, beta: &[f64]) -> RidgeModel {
        let mut coefficients = vec![0.0; self.names.len()];
        for (&j, &b) in self.retained.iter().zip(beta) {
            coefficients[j] = b;
        }
        RidgeModel {
            lambda,
            feature_names: self.names.clone(),
            means: self.means.clone(),
            stdevs: self.stdevs.clone(),
            coefficients,
            intercept: self.y_mean,
        }
    }

    pub fn solve(&mut self, lambda: f64) -> Result<RidgeModel> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Value(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        let (n, k) = (self.z.rows(), self.z.cols());
        if k == 0 {
            return Ok(self.model(lambda, &[]));
        }
        let beta = if lambda > 0.0 && n < k {
            let z = &self.z;
            let gram = self.dual.get_or_insert_with(|| z.gram());
            let mut a = gram.clone();
            a.add_diagonal(lambda);
            let alpha = Cholesky::factor(&a)?.solve(&self.centered_y);
            self.z.tr_mul_vec(&alpha)
        } else {
            let (z, y) = (&self.z, &self.centered_y);
            let (gram, zty) = self
                .primal
                .get_or_insert_with(|| (z.transpose().gram(), z.tr_mul_vec(y)));
            let mut a = gram.clone();
            a.add_diagonal(lambda);
            Cholesky::factor(&a)?.solve(zty)
        };
        Ok(self.model(lambda, &beta))
    }
}

/// Standardizes columns on the training rows (population moments), drops
/// constant columns and solves the ridge normal equations with an
/// unpenalized intercept equal to the mean target.
pub fn ridge_fit(x: &Matrix, feature_names: &[String], y: &[f64], lambda: f64) -> Result<RidgeModel> {
    RidgeSolver::new(x, feature_names, y)?.solve(lambda)
}

/// Predictions for rows whose columns are named by `columns`; the model's
/// features are looked up by name.
pub fn predict(model: &RidgeModel, x: &Matrix, columns: &[String]) -> Result<Vec<f64>> {
    let index: BTreeMap<&str, usize> = columns.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let cols = model
        .feature_names
        .iter()
        .map(|n| index.get(n.as_str()).copied().ok_or_else(|| Error::MissingFeature(n.clone())))
        .collect::<Result<Vec<usize>>>()?;
    let identity = cols.iter().enumerate().all(|(i, &c)| i == c) && cols.len() == x.cols();
    let mut buf = vec![0.0; cols.len()];
    Ok((0..x.rows())
        .map(|r| {
            let row = x.row(r);
            if identity {
                model.predict_row(row)
            } else {
                for (b, &c) in buf.iter_mut().zip(&cols) {
                    *b = row[c];
                }
                model.predict_row(&buf)
            }
        })
        .collect())
}

/// 17 values, log-spaced from 1e-4 to 1e4.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..17).map(|i| libm::pow(10.0, -4.0 + 0.5 * i as f64)).collect()
}

pub const DEFAULT_FOLDS: usize = 5;

/// Assigns each row a fold so that all rows of a group share one fold.
///
/// Distinct groups are sorted, shuffled with a ChaCha8 stream seeded by
/// `seed`, and dealt round-robin into `k` folds.
pub fn group_kfold<S: AsRef<str>>(groups: &[S], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Value(format!("need at least 2 folds, got {k}")));
    }
    let mut distinct: Vec<&str> = groups
        .iter()
        .map(AsRef::as_ref)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if distinct.len() < k {
        return Err(Error::TooFewGroups {
            groups: distinct.len(),
            folds: k,
        });
    }
    distinct.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let fold_of: BTreeMap<&str, usize> = distinct.iter().enumerate().map(|(i, g)| (*g, i % k)).collect();
    Ok(groups.iter().map(|g| fold_of[g.as_ref()]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvCell {
    pub lambda: f64,
    pub fold: usize,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub lambda: f64,
    /// One entry per (λ, fold), λ-major in grid order.
    pub table: Vec<CvCell>,
    /// Mean held-out R² per grid value.
    pub mean_r2: Vec<(f64, f64)>,
}

/// Held-out R² (1 − SSres/SStot) on fold `fold` for every λ in `grid`,
/// training on the remaining folds. Undefined scores (constant validation
/// target) are NaN.
pub fn cv_fold_scores(
    x: &Matrix,
    feature_names: &[String],
    y: &[f64],
    assignment: &[usize],
    fold: usize,
    grid: &[f64],
) -> Result<Vec<f64>> {
    let train: Vec<usize> = (0..x.rows()).filter(|&i| assignment[i] != fold).collect();
    let valid: Vec<usize> = (0..x.rows()).filter(|&i| assignment[i] == fold).collect();
    if valid.is_empty() || train.is_empty() {
        return Err(Error::Value(format!("fold {fold} is empty")));
    }
    let xt = x.select_rows(&train);
    let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
    let xv = x.select_rows(&valid);
    let yv: Vec<f64> = valid.iter().map(|&i| y[i]).collect();
    let mut solver = RidgeSolver::new(&xt, feature_names, &yt)?;
    grid.iter()
        .map(|&lambda| {
            let model = solver.solve(lambda)?;
            let pred: Vec<f64> = (0..xv.rows()).map(|r| model.predict_row(xv.row(r))).collect();
            Ok(match r_squared(&yv, &pred) {
                Ok(r) => r.r2_sse,
                Err(Error::DegenerateTarget) => f64::NAN,
                Err(e) => return Err(e),
            })
        })
        .collect()
}

/// Picks the λ with the highest mean held-out R² (NaN folds skipped); ties go
/// to the larger λ. `scores[fold][i]` is the score of `grid[i]`.
pub fn select_lambda(grid: &[f64], scores: &[Vec<f64>]) -> Result<CvResult> {
    if grid.is_empty() {
        return Err(Error::Value("lambda grid is empty".into()));
    }
    let mut table = Vec::with_capacity(grid.len() * scores.len());
    let mut mean_r2 = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, f64)> = None;
    for (i, &lambda) in grid.iter().enumerate() {
        let (mut sum, mut cnt) = (0.0, 0usize);
        for (fold, s) in scores.iter().enumerate() {
            table.push(CvCell { lambda, fold, r2: s[i] });
            if s[i].is_finite() {
                sum += s[i];
                cnt += 1;
            }
        }
        let mean = if cnt > 0 { sum / cnt as f64 } else { f64::NAN };
        mean_r2.push((lambda, mean));
        if mean.is_finite() {
            best = match best {
                Some((bl, bm)) if mean < bm || (mean == bm && lambda <= bl) => Some((bl, bm)),
                _ => Some((lambda, mean)),
            };
        }
    }
    let (lambda, _) = best.ok_or(Error::DegenerateTarget)?;
    Ok(CvResult { lambda, table, mean_r2 })
}

/// Group-aware k-fold selection of the ridge shrinkage parameter.
pub fn cv_select_lambda(
    x: &Matrix,
    feature_names: &[String],
    y: &[f64],
    groups: &[&str],
    grid: &[f64],
    k: usize,
    seed: u64,
) -> Result<CvResult> {
    if grid.is_empty() {
        return Err(Error::Value("lambda grid is empty".into()));
    }
    let assignment = group_kfold(groups, k, seed)?;
    let scores = (0..k)
        .map(|fold| cv_fold_scores(x, feature_names, y, &assignment, fold, grid))
        .collect::<Result<Vec<_>>>()?;
    select_lambda(grid, &scores)
}

/// Splits the distinct groups into a held-out share and the rest,
/// deterministically from `seed`. Returns `(train_rows, test_rows)`.
pub fn group_holdout<S: AsRef<str>>(groups: &[S], test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Value(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let mut distinct: Vec<&str> = groups
        .iter()
        .map(AsRef::as_ref)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if distinct.len() < 2 {
        return Err(Error::TooFewGroups { groups: distinct.len(), folds: 2 });
    }
    distinct.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = (libm::round(distinct.len() as f64 * test_fraction) as usize).clamp(1, distinct.len() - 1);
    let test: BTreeSet<&str> = distinct[..n_test].iter().copied().collect();
    let (mut tr, mut te) = (Vec::new(), Vec::new());
    for (i, g) in groups.iter().enumerate() {
        if test.contains(g.as_ref()) {
            te.push(i);
        } else {
            tr.push(i);
        }
    }
    Ok((tr, te))
}

impl fmt::Display for CvCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.lambda, self.fold, self.r2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Visit;
    use alloc::string::ToString;

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn fused_lengths() {
        let img = ImageFeatureRecord {
            key: VisitKey::new("e", 1, Visit::PostPlanting),
            ms_features: vec![1.0; 512],
            nl_features: vec![2.0; 512],
        };
        let w = WeatherFeatureVector([3.0; 48]);
        let only_w: FeatureSet = "weather".parse().unwrap();
        assert_eq!(fuse_features(None, Some(&w), only_w).unwrap().len(), 48);
        let row = fuse_features(Some(&img), Some(&w), FeatureSet::ALL).unwrap();
        assert_eq!(row.len(), 1072);
        assert_eq!((row[0], row[512], row[1024]), (1.0, 2.0, 3.0));
        let ms: FeatureSet = "ms".parse().unwrap();
        assert_eq!(fuse_features(None, Some(&w), ms), Err(Error::MissingBlock("ms")));
    }

    #[test]
    fn feature_set_names_round_trip() {
        for s in ["ms", "nl", "weather", "ms+nl", "ms+nl+weather", "nl+weather"] {
            let fs: FeatureSet = s.parse().unwrap();
            assert_eq!(fs.to_string(), s);
            assert_eq!(FeatureSet::from_columns(&fs.column_names()), Some(fs));
        }
        assert_eq!("weather,ms".parse::<FeatureSet>().unwrap().to_string(), "ms+weather");
        assert!("".parse::<FeatureSet>().is_err());
        assert!("ms,rgb".parse::<FeatureSet>().is_err());
        let nl = FeatureSet { nl: true, ..Default::default() }.column_names();
        assert_eq!((nl[0].as_str(), nl[511].as_str()), ("f0513", "f1024"));
    }

    #[test]
    fn one_feature_closed_form() {
        // Population-standardized (−1, 0, 1) is (−√1.5, 0, √1.5).
        let x = Matrix::from_rows(&[[-1.0], [0.0], [1.0]]).unwrap();
        let y = [-1.0, 0.0, 1.0];
        let lambda = 0.7;
        let m = ridge_fit(&x, &names(1), &y, lambda).unwrap();
        let z = libm::sqrt(1.5);
        let expect = (2.0 * z) / (2.0 * 1.5 + lambda);
        assert!((m.coefficients[0] - expect).abs() < 1e-12);
        assert_eq!(m.intercept, 0.0);
    }

    #[test]
    fn huge_penalty_shrinks_to_mean() {
        let x = Matrix::from_rows(&[[1.0, 3.0], [2.0, 1.0], [4.0, 0.0], [3.0, 3.5]]).unwrap();
        let y = [1.0, 2.0, 5.0, 3.0];
        let m = ridge_fit(&x, &names(2), &y, 1e12).unwrap();
        assert!(m.coefficients.iter().all(|b| b.abs() < 1e-6));
        for p in predict(&m, &x, &names(2)).unwrap() {
            assert!((p - 2.75).abs() < 1e-6);
        }
    }

    #[test]
    fn collinear_unpenalized_is_singular() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]).unwrap();
        assert_eq!(ridge_fit(&x, &names(2), &[1.0, 2.0, 4.0], 0.0), Err(Error::SingularSystem));
        assert!(ridge_fit(&x, &names(2), &[1.0, 2.0, 4.0], 0.1).is_ok());
    }

    #[test]
    fn constant_column_gets_zero_coefficient() {
        let x = Matrix::from_rows(&[[1.0, 5.0], [2.0, 5.0], [4.0, 5.0]]).unwrap();
        let m = ridge_fit(&x, &names(2), &[1.0, 2.0, 3.0], 0.5).unwrap();
        assert_eq!((m.coefficients[1], m.stdevs[1]), (0.0, 0.0));
        assert!(m.coefficients[0] > 0.0);
    }

    #[test]
    fn predict_by_name_and_missing() {
        let x = Matrix::from_rows(&[[1.0, 3.0], [2.0, 1.0], [4.0, 0.0]]).unwrap();
        let m = ridge_fit(&x, &names(2), &[1.0, 2.0, 5.0], 0.3).unwrap();
        let swapped = Matrix::from_rows(&[[3.0, 1.0], [1.0, 2.0], [0.0, 4.0]]).unwrap();
        let cols = [String::from("x1"), String::from("x0")];
        assert_eq!(predict(&m, &swapped, &cols).unwrap(), predict(&m, &x, &names(2)).unwrap());
        let at_means = Matrix::from_rows(&[m.means.as_slice()]).unwrap();
        assert_eq!(predict(&m, &at_means, &names(2)).unwrap()[0], m.intercept);
        assert_eq!(
            predict(&m, &x, &[String::from("x0"), String::from("zz")]),
            Err(Error::MissingFeature("x1".into()))
        );
    }

    #[test]
    fn folds_respect_groups() {
        let groups = ["a", "a", "b", "c", "c", "d", "e", "e", "f"];
        let f = group_kfold(&groups, 3, 9).unwrap();
        for i in 0..groups.len() {
            for j in 0..groups.len() {
                if groups[i] == groups[j] {
                    assert_eq!(f[i], f[j]);
                }
            }
        }
        assert_eq!(f, group_kfold(&groups, 3, 9).unwrap());
        for k in 0..3 {
            assert!(f.contains(&k));
        }
        assert_eq!(
            group_kfold(&["a", "b", "c"], 5, 1),
            Err(Error::TooFewGroups { groups: 3, folds: 5 })
        );
    }

    #[test]
    fn single_value_grid() {
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0], [4.0], [5.0], [6.0]]).unwrap();
        let y = [1.0, 2.5, 2.9, 4.2, 5.1, 5.8];
        let groups = ["a", "b", "c", "d", "e", "f"];
        let cv = cv_select_lambda(&x, &names(1), &y, &groups, &[3.0], 3, 1).unwrap();
        assert_eq!(cv.lambda, 3.0);
        assert_eq!(cv.table.len(), 3);
    }

    #[test]
    fn ties_prefer_stronger_penalty() {
        let scores = vec![vec![0.5, 0.5, 0.2], vec![0.3, 0.3, 0.2]];
        let cv = select_lambda(&[0.1, 1.0, 10.0], &scores).unwrap();
        assert_eq!(cv.lambda, 1.0);
    }

    #[test]
    fn holdout_partitions_groups() {
        let groups: Vec<String> = (0..40).map(|i| format!("g{}", i / 4)).collect();
        let (tr, te) = group_holdout(&groups, 0.2, 7).unwrap();
        assert_eq!(tr.len() + te.len(), 40);
        assert_eq!(te.len(), 8);
        for &i in &te {
            assert!(tr.iter().all(|&j| groups[j] != groups[i]));
        }
    }
}
