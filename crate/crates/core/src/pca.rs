//! Per-language standardization and PCA over the dataset x metric matrix.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::corpus::Language;
use crate::error::{Error, Result};
use crate::profile::{Category, DatasetProfile, Metric, MetricVector, SCHEMA_VERSION};

/// Fewer datasets than this leaves the 10-metric PCA close to saturated.
pub const RECOMMENDED_MIN_DATASETS: usize = 11;

/// Population z-scoring, one mean/std per column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub constant_flags: Vec<bool>,
}

impl Scaler {
    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &x)| {
                if self.constant_flags[j] {
                    0.0
                } else {
                    (x - self.means[j]) / self.stds[j]
                }
            })
            .collect()
    }

    pub fn transform(&self, matrix: &[Vec<f64>]) -> Vec<Vec<f64>> {
        matrix.iter().map(|r| self.transform_row(r)).collect()
    }
}

/// Fits a population (divide-by-D) scaler.
///
/// A column counts as constant when its standard deviation is at most
/// `1e-12 * max(1, |mean|)`; constant columns transform to 0.
pub fn fit_scaler(matrix: &[Vec<f64>]) -> Result<Scaler> {
    let d = matrix.len();
    if d < 2 {
        return Err(Error::Fit(format!("scaler needs at least 2 rows, got {d}")));
    }
    let width = matrix[0].len();
    if matrix.iter().any(|r| r.len() != width) {
        return Err(Error::Fit("ragged matrix".into()));
    }
    if matrix.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Fit("non-finite value in matrix".into()));
    }
    let mut means = Vec::with_capacity(width);
    let mut stds = Vec::with_capacity(width);
    let mut constant_flags = Vec::with_capacity(width);
    for j in 0..width {
        let mean = matrix.iter().map(|r| r[j]).sum::<f64>() / d as f64;
        let var = matrix.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / d as f64;
        let std = var.sqrt();
        means.push(mean);
        stds.push(std);
        constant_flags.push(std <= 1e-12 * mean.abs().max(1.0));
    }
    Ok(Scaler {
        means,
        stds,
        constant_flags,
    })
}

/// Replaces missing values with the column mean of the present ones (0 when
/// a column has no value at all).
pub fn impute(rows: &[MetricVector]) -> Vec<Vec<f64>> {
    let means: Vec<f64> = Metric::ALL
        .iter()
        .map(|&m| {
            let present: Vec<f64> = rows.iter().filter_map(|r| r.get(m)).collect();
            if present.is_empty() {
                0.0
            } else {
                present.iter().sum::<f64>() / present.len() as f64
            }
        })
        .collect();
    rows.iter()
        .map(|r| {
            Metric::ALL
                .iter()
                .map(|&m| r.get(m).unwrap_or(means[m.index()]))
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaFit {
    /// One row per component, orthonormal, largest-|entry| positive.
    pub loadings: Vec<Vec<f64>>,
    pub explained_variance_ratio: Vec<f64>,
    /// Row `i` holds the component scores of input row `i`.
    pub scores: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

/// PCA of the column-centered matrix.
///
/// Emits `min(n_components, D - 1, width)` components, with a warning when
/// that is fewer than requested.
pub fn fit_pca(standardized: &[Vec<f64>], n_components: usize) -> Result<PcaFit> {
    let d = standardized.len();
    if d < 2 {
        return Err(Error::Fit(format!("pca needs at least 2 rows, got {d}")));
    }
    let width = standardized[0].len();
    if width == 0 || standardized.iter().any(|r| r.len() != width) {
        return Err(Error::Fit("ragged or empty matrix".into()));
    }
    if standardized.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Fit("non-finite value in matrix".into()));
    }
    let mut warnings = Vec::new();
    let k = n_components.min(d - 1).min(width);
    if k < n_components {
        warnings.push(format!(
            "only {k} principal component(s) can be estimated from {d} datasets"
        ));
    }
    if k == 0 {
        return Err(Error::Fit("no component requested".into()));
    }
    let centered = {
        let mut m = DMatrix::from_fn(d, width, |i, j| standardized[i][j]);
        for j in 0..width {
            let mean = m.column(j).sum() / d as f64;
            m.column_mut(j).add_scalar_mut(-mean);
        }
        m
    };
    // Right singular vectors and squared singular values of the centered
    // matrix, taken from the eigen-decomposition of its scatter matrix.
    let eigen = SymmetricEigen::new(centered.transpose() * &centered);
    let sq: Vec<f64> = eigen.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = sq.iter().sum();
    if total <= 0.0 {
        return Err(Error::Fit("matrix has no variance".into()));
    }
    let mut order: Vec<usize> = (0..sq.len()).collect();
    order.sort_by(|&a, &b| sq[b].partial_cmp(&sq[a]).expect("finite").then(a.cmp(&b)));

    let mut loadings = Vec::with_capacity(k);
    let mut evr = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let mut row: Vec<f64> = eigen.eigenvectors.column(idx).iter().copied().collect();
        let mut best = 0;
        for j in 1..width {
            if row[j].abs() > row[best].abs() {
                best = j;
            }
        }
        if row[best] < 0.0 {
            row.iter_mut().for_each(|x| *x = -*x);
        }
        loadings.push(row);
        evr.push(sq[idx] / total);
    }
    let scores = standardized.iter().map(|r| project(r, &loadings)).collect();
    Ok(PcaFit {
        loadings,
        explained_variance_ratio: evr,
        scores,
        warnings,
    })
}

fn project(row: &[f64], loadings: &[Vec<f64>]) -> Vec<f64> {
    loadings
        .iter()
        .map(|l| l.iter().zip(row).map(|(a, b)| a * b).sum())
        .collect()
}

/// Squared-loading mass of each category, per component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoryContribution {
    pub diversity: f64,
    pub lexical: f64,
    pub semantic: f64,
    pub clustering: f64,
}

impl CategoryContribution {
    pub fn get(&self, c: Category) -> f64 {
        match c {
            Category::Diversity => self.diversity,
            Category::Lexical => self.lexical,
            Category::Semantic => self.semantic,
            Category::Clustering => self.clustering,
        }
    }

    pub fn sum(&self) -> f64 {
        self.diversity + self.lexical + self.semantic + self.clustering
    }
}

/// `contribution(pc, c) = sum of loading[pc, m]^2 over metrics m in c`.
pub fn category_contributions(
    loadings: &[Vec<f64>],
    metric_order: &[String],
) -> Result<Vec<CategoryContribution>> {
    let metrics: Vec<Metric> = metric_order
        .iter()
        .map(|name| {
            Metric::from_name(name)
                .ok_or_else(|| Error::Config(format!("metric `{name}` has no category")))
        })
        .collect::<Result<_>>()?;
    loadings
        .iter()
        .map(|row| {
            if row.len() != metrics.len() {
                return Err(Error::Config("loading row width != metric count".into()));
            }
            let mut c = [0.0; 4];
            for (m, l) in metrics.iter().zip(row) {
                let slot = Category::ALL
                    .iter()
                    .position(|&cat| cat == m.category())
                    .expect("every category is listed");
                c[slot] += l * l;
            }
            Ok(CategoryContribution {
                diversity: c[0],
                lexical: c[1],
                semantic: c[2],
                clustering: c[3],
            })
        })
        .collect()
}

/// Index of the largest |entry|; ties go to the earlier position.
pub fn top_loading_index(row: &[f64]) -> usize {
    let mut best = 0;
    for j in 1..row.len() {
        if row[j].abs() > row[best].abs() {
            best = j;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PcaModel {
    pub schema_version: u32,
    pub language: Language,
    pub config_fingerprint: String,
    pub metric_order: Vec<String>,
    pub scaler: Scaler,
    pub loadings: Vec<Vec<f64>>,
    pub explained_variance_ratio: Vec<f64>,
    pub dataset_scores: BTreeMap<String, Vec<f64>>,
    pub category_contributions: Vec<CategoryContribution>,
}

/// Fits the full per-language model from dataset profiles.
///
/// All profiles must share one language and one config fingerprint. Returns
/// the model and any warnings (small D, reduced component count).
pub fn fit_language(
    profiles: &[DatasetProfile],
    n_components: usize,
) -> Result<(PcaModel, Vec<String>)> {
    let first = profiles
        .first()
        .ok_or_else(|| Error::Fit("no profiles given".into()))?;
    let languages: BTreeSet<&str> = profiles.iter().map(|p| p.language.as_str()).collect();
    if languages.len() > 1 {
        return Err(Error::Config(format!(
            "mixed-language profiles: {}",
            languages.into_iter().collect::<Vec<_>>().join(", ")
        )));
    }
    let fingerprints: BTreeSet<&str> = profiles
        .iter()
        .map(|p| p.config_fingerprint.as_str())
        .collect();
    if fingerprints.len() > 1 {
        return Err(Error::Schema(format!(
            "config fingerprint mismatch across profiles: {}",
            fingerprints.into_iter().collect::<Vec<_>>().join(", ")
        )));
    }
    let mut ids = BTreeSet::new();
    for p in profiles {
        if !ids.insert(p.dataset_id.as_str()) {
            return Err(Error::Fit(format!(
                "duplicate dataset id `{}`",
                p.dataset_id
            )));
        }
    }
    let d = profiles.len();
    if d < 2 {
        return Err(Error::Fit(format!(
            "pca needs at least 2 datasets, got {d}"
        )));
    }
    let mut warnings = Vec::new();
    if d < RECOMMENDED_MIN_DATASETS {
        warnings.push(format!(
            "{d} datasets for 10 metrics: the fit is near-saturated (fewer than {RECOMMENDED_MIN_DATASETS})"
        ));
    }
    let vectors: Vec<MetricVector> = profiles.iter().map(|p| p.metrics).collect();
    let raw = impute(&vectors);
    let scaler = fit_scaler(&raw)?;
    let standardized = scaler.transform(&raw);
    let fit = fit_pca(&standardized, n_components)?;
    warnings.extend(fit.warnings.iter().cloned());
    let metric_order = Metric::names();
    let category_contributions = category_contributions(&fit.loadings, &metric_order)?;
    let dataset_scores = profiles
        .iter()
        .zip(fit.scores)
        .map(|(p, s)| (p.dataset_id.clone(), s))
        .collect();
    Ok((
        PcaModel {
            schema_version: SCHEMA_VERSION,
            language: first.language.clone(),
            config_fingerprint: first.config_fingerprint.clone(),
            metric_order,
            scaler,
            loadings: fit.loadings,
            explained_variance_ratio: fit.explained_variance_ratio,
            dataset_scores,
            category_contributions,
        },
        warnings,
    ))
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.loadings.len()
    }

    /// Loading row of a 1-based component.
    pub fn loading_row(&self, pc: usize) -> Result<&[f64]> {
        if pc == 0 || pc > self.loadings.len() {
            return Err(Error::Config(format!(
                "pc {pc} out of range 1..={}",
                self.loadings.len()
            )));
        }
        Ok(&self.loadings[pc - 1])
    }

    /// Metric with the largest absolute loading on a 1-based component, and
    /// its signed loading.
    pub fn top_loading_metric(&self, pc: usize) -> Result<(Metric, f64)> {
        let row = self.loading_row(pc)?;
        let j = top_loading_index(row);
        let m = Metric::from_name(&self.metric_order[j])
            .ok_or_else(|| Error::Schema(format!("unknown metric `{}`", self.metric_order[j])))?;
        Ok((m, row[j]))
    }

    /// Component scores of a metric vector; missing values sit at the mean.
    pub fn project(&self, metrics: &MetricVector) -> Vec<f64> {
        let raw: Vec<f64> = Metric::ALL
            .iter()
            .map(|&m| metrics.get(m).unwrap_or(self.scaler.means[m.index()]))
            .collect();
        project(&self.scaler.transform_row(&raw), &self.loadings)
    }

    /// Dataset scores min-max rescaled to [0, 1] per component, for plotting.
    /// A component with no spread maps every dataset to 0.5.
    pub fn normalized_scores(&self) -> BTreeMap<String, Vec<f64>> {
        let k = self.n_components();
        let bounds: Vec<(f64, f64)> = (0..k)
            .map(|c| {
                self.dataset_scores
                    .values()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                        (lo.min(s[c]), hi.max(s[c]))
                    })
            })
            .collect();
        self.dataset_scores
            .iter()
            .map(|(id, s)| {
                let norm = (0..k)
                    .map(|c| {
                        let (lo, hi) = bounds[c];
                        if hi > lo {
                            (s[c] - lo) / (hi - lo)
                        } else {
                            0.5
                        }
                    })
                    .collect();
                (id.clone(), norm)
            })
            .collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: PcaModel =
            serde_json::from_str(text).map_err(|e| Error::Schema(format!("pca model: {e}")))?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "pca schema_version {} is not the supported version {SCHEMA_VERSION}",
                m.schema_version
            )));
        }
        if m.metric_order != Metric::names() {
            return Err(Error::Schema(
                "pca metric_order is not the canonical order".into(),
            ));
        }
        let width = m.metric_order.len();
        let k = m.loadings.len();
        let bad_scaler = [
            m.scaler.means.len(),
            m.scaler.stds.len(),
            m.scaler.constant_flags.len(),
        ]
        .iter()
        .any(|&l| l != width);
        if k == 0
            || bad_scaler
            || m.loadings.iter().any(|r| r.len() != width)
            || m.explained_variance_ratio.len() != k
            || m.category_contributions.len() != k
            || m.dataset_scores.values().any(|s| s.len() != k)
        {
            return Err(Error::Schema(
                "pca model dimensions are inconsistent".into(),
            ));
        }
        let finite = m.loadings.iter().flatten().all(|x| x.is_finite())
            && m.dataset_scores.values().flatten().all(|x| x.is_finite())
            && m.scaler
                .means
                .iter()
                .chain(&m.scaler.stds)
                .all(|x| x.is_finite());
        if !finite {
            return Err(Error::Schema("non-finite value in pca model".into()));
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_zscore() {
        let m = vec![vec![1.0], vec![2.0], vec![3.0]];
        let s = fit_scaler(&m).unwrap();
        assert_eq!(s.means[0], 2.0);
        assert!((s.stds[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let t = s.transform(&m);
        let z = 1.5f64.sqrt();
        assert!((t[0][0] + z).abs() < 1e-12 && t[1][0] == 0.0 && (t[2][0] - z).abs() < 1e-12);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let m = vec![vec![5.0, 1.0], vec![5.0, 2.0], vec![5.0, 4.0]];
        let s = fit_scaler(&m).unwrap();
        assert!(s.constant_flags[0] && !s.constant_flags[1]);
        assert!(s.transform(&m).iter().all(|r| r[0] == 0.0));
        // Rounding noise in a constant column still counts as constant.
        let m = vec![vec![0.1], vec![0.1], vec![0.1]];
        assert!(fit_scaler(&m).unwrap().constant_flags[0]);
    }

    #[test]
    fn scaler_needs_two_rows() {
        assert!(fit_scaler(&[vec![1.0]]).is_err());
    }

    fn planted_rank_one() -> Vec<Vec<f64>> {
        (0..6)
            .map(|i| {
                let mut r = vec![0.0; 10];
                r[6] = i as f64 * 0.7 - 1.0;
                r
            })
            .collect()
    }

    #[test]
    fn rank_one_structure() {
        let fit = fit_pca(&planted_rank_one(), 3).unwrap();
        assert!((fit.explained_variance_ratio[0] - 1.0).abs() < 1e-12);
        assert!(fit.explained_variance_ratio[1].abs() < 1e-12);
        assert!((fit.loadings[0][6] - 1.0).abs() < 1e-12);
        assert_eq!(top_loading_index(&fit.loadings[0]), 6);
    }

    #[test]
    fn planted_correlation() {
        let rows: Vec<Vec<f64>> = [-2.0, -0.5, 0.0, 1.0, 1.5]
            .iter()
            .map(|&x| {
                let mut r = vec![3.0; 10];
                r[0] = x;
                r[1] = x;
                r
            })
            .collect();
        let s = fit_scaler(&rows).unwrap();
        let fit = fit_pca(&s.transform(&rows), 3).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((fit.loadings[0][0] - h).abs() < 1e-12);
        assert!((fit.loadings[0][1] - h).abs() < 1e-12);
        assert!((fit.explained_variance_ratio[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fewer_components_with_tiny_d() {
        let rows = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![2.0, 2.5]];
        let fit = fit_pca(&rows, 3).unwrap();
        assert_eq!(fit.loadings.len(), 2);
        assert_eq!(fit.warnings.len(), 1);
    }

    #[test]
    fn contributions_of_unit_and_uniform_rows() {
        let order = Metric::names();
        let mut unit = vec![0.0; 10];
        unit[Metric::Mtld.index()] = 1.0;
        let uniform = vec![1.0 / 10f64.sqrt(); 10];
        let c = category_contributions(&[unit, uniform], &order).unwrap();
        assert_eq!(c[0].lexical, 1.0);
        assert_eq!(c[0].diversity + c[0].semantic + c[0].clustering, 0.0);
        let expected = [0.3, 0.4, 0.2, 0.1];
        for (cat, e) in Category::ALL.iter().zip(expected) {
            assert!((c[1].get(*cat) - e).abs() < 1e-12);
        }
        let bad = vec!["ttr".to_string(); 9]
            .into_iter()
            .chain(["perplexity".to_string()])
            .collect::<Vec<_>>();
        assert!(category_contributions(&[vec![0.0; 10]], &bad).is_err());
    }

    #[test]
    fn top_loading_ties_go_first() {
        assert_eq!(top_loading_index(&[0.9, 0.1, -0.2]), 0);
        assert_eq!(top_loading_index(&[0.1, -0.5, 0.5, 0.2]), 1);
    }
}
