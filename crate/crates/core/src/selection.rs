//! Ranking samples along a principal component and cutting High/Low/Random
//! subsets of equal size.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::DatasetHandle;
use crate::error::{Error, Result};
use crate::pca::PcaModel;
use crate::profile::{DatasetProfile, Metric, PerSampleFeatures, SCHEMA_VERSION};
use crate::rng::{derive_seed, select_positions, SplitMix64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankingMethod {
    /// Per-sample value of the component's top-loading metric.
    ProxyMetric,
    /// Standardized per-sample features projected on the loading row.
    PcProjection,
}

impl FromStr for RankingMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proxy" | "proxy_metric" => Ok(RankingMethod::ProxyMetric),
            "projection" | "pc_projection" => Ok(RankingMethod::PcProjection),
            other => Err(Error::Config(format!("unknown ranking `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubsetMode {
    High,
    Low,
    Random,
}

impl SubsetMode {
    pub const ALL: [SubsetMode; 3] = [SubsetMode::High, SubsetMode::Low, SubsetMode::Random];

    pub fn name(self) -> &'static str {
        match self {
            SubsetMode::High => "high",
            SubsetMode::Low => "low",
            SubsetMode::Random => "random",
        }
    }
}

impl fmt::Display for SubsetMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SubsetMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "high" => Ok(SubsetMode::High),
            "low" => Ok(SubsetMode::Low),
            "random" => Ok(SubsetMode::Random),
            other => Err(Error::Config(format!("unknown subset mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetSpec {
    pub dataset_id: String,
    pub pc: usize,
    pub size: usize,
    pub ranking: RankingMethod,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedSample {
    pub id: String,
    pub score: Option<f64>,
}

/// Samples ordered from the positive to the negative end of a component.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub pc: usize,
    pub method: RankingMethod,
    /// Proxy metric and its signed loading, for proxy rankings.
    pub proxy: Option<(Metric, f64)>,
    pub entries: Vec<RankedSample>,
}

impl Ranking {
    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.id.as_str()).collect()
    }

    pub fn scores(&self) -> HashMap<&str, Option<f64>> {
        self.entries
            .iter()
            .map(|e| (e.id.as_str(), e.score))
            .collect()
    }
}

/// Numeric ids compare as numbers, everything else as strings after them.
pub fn compare_ids(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

/// Descending by score, missing scores last, ties by id.
fn order(mut entries: Vec<RankedSample>) -> Vec<RankedSample> {
    entries.sort_by(|a, b| {
        let by_score = match (a.score, b.score) {
            (Some(x), Some(y)) => y.partial_cmp(&x).expect("finite scores"),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        };
        by_score.then_with(|| compare_ids(&a.id, &b.id))
    });
    entries
}

fn checked_features<'a>(
    handle: &DatasetHandle,
    profile: &'a DatasetProfile,
    model: &PcaModel,
) -> Result<&'a PerSampleFeatures> {
    if profile.language != model.language {
        return Err(Error::Selection(format!(
            "profile language `{}` differs from pca language `{}`",
            profile.language, model.language
        )));
    }
    if profile.config_fingerprint != model.config_fingerprint {
        return Err(Error::Schema(format!(
            "config fingerprint mismatch: profile {} vs pca {}",
            profile.config_fingerprint, model.config_fingerprint
        )));
    }
    let features = profile.per_sample.as_ref().ok_or_else(|| {
        Error::Selection(format!(
            "profile of `{}` has no per-sample features; re-run `profile` with --per-sample",
            profile.dataset_id
        ))
    })?;
    features.validate()?;
    let known: std::collections::HashSet<&str> = handle.ids().collect();
    if let Some(missing) = features.ids.iter().find(|id| !known.contains(id.as_str())) {
        return Err(Error::Selection(format!(
            "profiled sample `{missing}` is not in dataset `{}`",
            handle.dataset_id
        )));
    }
    Ok(features)
}

pub fn rank_by_proxy(
    handle: &DatasetHandle,
    profile: &DatasetProfile,
    model: &PcaModel,
    pc: usize,
) -> Result<Ranking> {
    let features = checked_features(handle, profile, model)?;
    let (metric, loading) = model.top_loading_metric(pc)?;
    let column = features.column(metric);
    if column.iter().all(Option::is_none) {
        return Err(Error::Selection(format!(
            "proxy metric {metric} is undefined for every sample of `{}`",
            profile.dataset_id
        )));
    }
    let sign = if loading < 0.0 { -1.0 } else { 1.0 };
    let entries = features
        .ids
        .iter()
        .zip(column)
        .map(|(id, v)| RankedSample {
            id: id.clone(),
            score: v.map(|x| sign * x),
        })
        .collect();
    Ok(Ranking {
        pc,
        method: RankingMethod::ProxyMetric,
        proxy: Some((metric, loading)),
        entries: order(entries),
    })
}

/// Per-column population z-scores over the present values; missing values
/// and constant columns become 0.
pub fn standardize_columns(rows: &[Vec<Option<f64>>]) -> Vec<Vec<f64>> {
    let width = rows.first().map_or(0, Vec::len);
    let stats: Vec<Option<(f64, f64)>> = (0..width)
        .map(|j| {
            let present: Vec<f64> = rows.iter().filter_map(|r| r[j]).collect();
            if present.is_empty() {
                return None;
            }
            let n = present.len() as f64;
            let mean = present.iter().sum::<f64>() / n;
            let std = (present.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
            (std > 1e-12 * mean.abs().max(1.0)).then_some((mean, std))
        })
        .collect();
    rows.iter()
        .map(|r| {
            r.iter()
                .zip(&stats)
                .map(|(v, s)| match (v, s) {
                    (Some(x), Some((mean, std))) => (x - mean) / std,
                    _ => 0.0,
                })
                .collect()
        })
        .collect()
}

/// Scores are standardized rows dotted with the loading row. Equal scores
/// are ordered by the unstandardized dot product, then by id.
pub fn rank_by_projection(
    handle: &DatasetHandle,
    profile: &DatasetProfile,
    model: &PcaModel,
    pc: usize,
) -> Result<Ranking> {
    let features = checked_features(handle, profile, model)?;
    let loading = model.loading_row(pc)?;
    let z = standardize_columns(&features.rows);
    let raw = |row: &[Option<f64>]| -> f64 {
        row.iter()
            .zip(loading)
            .map(|(v, l)| v.map_or(0.0, |x| x * l))
            .sum()
    };
    let mut keyed: Vec<(RankedSample, f64)> = features
        .ids
        .iter()
        .zip(z)
        .zip(&features.rows)
        .map(|((id, zrow), row)| {
            let score = zrow.iter().zip(loading).map(|(a, b)| a * b).sum();
            (
                RankedSample {
                    id: id.clone(),
                    score: Some(score),
                },
                raw(row),
            )
        })
        .collect();
    keyed.sort_by(|(a, ra), (b, rb)| {
        let (x, y) = (a.score.expect("scored"), b.score.expect("scored"));
        y.partial_cmp(&x)
            .expect("finite scores")
            .then_with(|| rb.partial_cmp(ra).unwrap_or(Ordering::Equal))
            .then_with(|| compare_ids(&a.id, &b.id))
    });
    Ok(Ranking {
        pc,
        method: RankingMethod::PcProjection,
        proxy: None,
        entries: keyed.into_iter().map(|(e, _)| e).collect(),
    })
}

pub fn rank(
    handle: &DatasetHandle,
    profile: &DatasetProfile,
    model: &PcaModel,
    pc: usize,
    method: RankingMethod,
) -> Result<Ranking> {
    match method {
        RankingMethod::ProxyMetric => rank_by_proxy(handle, profile, model, pc),
        RankingMethod::PcProjection => rank_by_projection(handle, profile, model, pc),
    }
}

/// The three size-matched subsets of one ranking. Ids are listed in dataset
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct Subsets {
    pub high: Vec<String>,
    pub low: Vec<String>,
    pub random: Vec<String>,
}

impl Subsets {
    pub fn get(&self, mode: SubsetMode) -> &[String] {
        match mode {
            SubsetMode::High => &self.high,
            SubsetMode::Low => &self.low,
            SubsetMode::Random => &self.random,
        }
    }
}

/// Top `size`, bottom `size`, and a seeded uniform draw of `size` from the
/// ranked samples.
///
/// The random subset uses `select_positions` over the ranked samples in
/// dataset order with a SplitMix64 stream seeded by
/// `derive_seed(spec.seed, "subset", spec.pc)`.
pub fn build_subsets(
    handle: &DatasetHandle,
    ranking: &Ranking,
    spec: &SubsetSpec,
) -> Result<Subsets> {
    let n = ranking.entries.len();
    if spec.size == 0 {
        return Err(Error::Selection("subset size must be at least 1".into()));
    }
    if spec.size > n {
        return Err(Error::Selection(format!(
            "subset size {} exceeds the {n} ranked samples",
            spec.size
        )));
    }
    if 2 * spec.size > n {
        return Err(Error::Selection(format!(
            "subset size {} is more than half of {n} samples; high and low would overlap",
            spec.size
        )));
    }
    let position: HashMap<&str, usize> = handle
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.as_str(), i))
        .collect();
    let in_dataset_order = |mut ids: Vec<&str>| -> Result<Vec<String>> {
        for id in &ids {
            if !position.contains_key(id) {
                return Err(Error::Selection(format!("ranked id `{id}` not in dataset")));
            }
        }
        ids.sort_by_key(|id| position[id]);
        Ok(ids.into_iter().map(str::to_string).collect())
    };
    let ranked = ranking.ids();
    let high = in_dataset_order(ranked[..spec.size].to_vec())?;
    let low = in_dataset_order(ranked[n - spec.size..].to_vec())?;
    let pool = in_dataset_order(ranked.clone())?;
    let mut rng = SplitMix64::new(derive_seed(spec.seed, "subset", spec.pc as u64));
    let random = select_positions(n, spec.size, &mut rng)
        .into_iter()
        .map(|p| pool[p].clone())
        .collect();
    Ok(Subsets { high, low, random })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreStats {
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
}

pub fn score_stats(ranking: &Ranking, ids: &[String]) -> ScoreStats {
    let scores = ranking.scores();
    let present: Vec<f64> = ids
        .iter()
        .filter_map(|id| scores.get(id.as_str()).copied().flatten())
        .collect();
    if present.is_empty() {
        return ScoreStats {
            min: None,
            max: None,
            mean: None,
        };
    }
    ScoreStats {
        min: present.iter().copied().reduce(f64::min),
        max: present.iter().copied().reduce(f64::max),
        mean: Some(present.iter().sum::<f64>() / present.len() as f64),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsetManifest {
    pub schema_version: u32,
    pub config_fingerprint: String,
    pub dataset_id: String,
    pub pc: usize,
    pub mode: SubsetMode,
    pub ranking: RankingMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proxy_metric: Option<String>,
    pub size: usize,
    pub seed: u64,
    pub score_stats: ScoreStats,
}

impl SubsetManifest {
    pub fn new(
        profile: &DatasetProfile,
        ranking: &Ranking,
        spec: &SubsetSpec,
        mode: SubsetMode,
        ids: &[String],
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config_fingerprint: profile.config_fingerprint.clone(),
            dataset_id: spec.dataset_id.clone(),
            pc: spec.pc,
            mode,
            ranking: ranking.method,
            proxy_metric: ranking.proxy.map(|(m, _)| m.name().to_string()),
            size: ids.len(),
            seed: spec.seed,
            score_stats: score_stats(ranking, ids),
        }
    }
}

/// Writes the original records of `ids` as JSON lines.
pub fn write_subset_jsonl<W: Write>(
    handle: &DatasetHandle,
    ids: &[String],
    mut out: W,
) -> Result<()> {
    let records: HashMap<&str, &str> = handle
        .samples
        .iter()
        .map(|s| (s.id.as_str(), s.record.as_str()))
        .collect();
    for id in ids {
        let record = records
            .get(id.as_str())
            .ok_or_else(|| Error::Selection(format!("id `{id}` not in dataset")))?;
        writeln!(out, "{record}").map_err(|e| Error::Internal(format!("write failed: {e}")))?;
    }
    Ok(())
}
