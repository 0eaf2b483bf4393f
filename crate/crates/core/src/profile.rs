//! Dataset-level metric vectors and per-sample feature matrices.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use serde::de::{self, MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::corpus::{DatasetHandle, Language};
use crate::divmetrics::{self, BleuConfig};
use crate::error::{Error, Result};
use crate::lexmetrics::{self, LexicalConfig};
use crate::semmetrics::{self, ClusterConfig, EmbeddingProviderSpec};

pub const SCHEMA_VERSION: u32 = 1;

/// Label written into per-sample blocks: the columns are sample-level
/// adaptations of the dataset metrics, not the dataset metrics themselves.
pub const PER_SAMPLE_FEATURE_SET: &str = "sample-adapted-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Distinct1,
    Distinct2,
    SelfBleu,
    Ttr,
    Mattr,
    Hdd,
    Mtld,
    CosEmbed,
    CosTfidf,
    Silhouette,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Diversity,
    Lexical,
    Semantic,
    Clustering,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Diversity,
        Category::Lexical,
        Category::Semantic,
        Category::Clustering,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Diversity => "diversity",
            Category::Lexical => "lexical",
            Category::Semantic => "semantic",
            Category::Clustering => "clustering",
        }
    }
}

impl Metric {
    /// Canonical metric order used by every matrix and file.
    pub const ALL: [Metric; 10] = [
        Metric::Distinct1,
        Metric::Distinct2,
        Metric::SelfBleu,
        Metric::Ttr,
        Metric::Mattr,
        Metric::Hdd,
        Metric::Mtld,
        Metric::CosEmbed,
        Metric::CosTfidf,
        Metric::Silhouette,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Distinct1 => "distinct1",
            Metric::Distinct2 => "distinct2",
            Metric::SelfBleu => "self_bleu",
            Metric::Ttr => "ttr",
            Metric::Mattr => "mattr",
            Metric::Hdd => "hdd",
            Metric::Mtld => "mtld",
            Metric::CosEmbed => "cos_embed",
            Metric::CosTfidf => "cos_tfidf",
            Metric::Silhouette => "silhouette",
        }
    }

    pub fn from_name(name: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.name() == name)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn category(self) -> Category {
        match self {
            Metric::Distinct1 | Metric::Distinct2 | Metric::SelfBleu => Category::Diversity,
            Metric::Ttr | Metric::Mattr | Metric::Hdd | Metric::Mtld => Category::Lexical,
            Metric::CosEmbed | Metric::CosTfidf => Category::Semantic,
            Metric::Silhouette => Category::Clustering,
        }
    }

    /// Inclusive value range; `None` on the upper side means unbounded.
    fn range(self) -> (f64, Option<f64>) {
        match self {
            Metric::CosEmbed | Metric::CosTfidf | Metric::Silhouette => (-1.0, Some(1.0)),
            Metric::Mtld => (0.0, None),
            _ => (0.0, Some(1.0)),
        }
    }

    pub fn names() -> Vec<String> {
        Metric::ALL.iter().map(|m| m.name().to_string()).collect()
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The ten metric values of one dataset; `None` marks a missing value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricVector {
    values: [Option<f64>; 10],
}

impl MetricVector {
    pub fn new(values: [Option<f64>; 10]) -> Self {
        Self { values }
    }

    pub fn get(&self, m: Metric) -> Option<f64> {
        self.values[m.index()]
    }

    pub fn set(&mut self, m: Metric, value: Option<f64>) {
        self.values[m.index()] = value.filter(|v| v.is_finite());
    }

    pub fn values(&self) -> &[Option<f64>; 10] {
        &self.values
    }

    pub fn validate(&self) -> Result<()> {
        const SLACK: f64 = 1e-9;
        for m in Metric::ALL {
            if let Some(v) = self.get(m) {
                let (lo, hi) = m.range();
                if !v.is_finite() || v < lo - SLACK || hi.is_some_and(|h| v > h + SLACK) {
                    return Err(Error::Schema(format!("{m} value {v} out of range")));
                }
            }
        }
        Ok(())
    }
}

impl Serialize for MetricVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(10))?;
        for m in Metric::ALL {
            map.serialize_entry(m.name(), &self.get(m))?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for MetricVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct MetricMap;

        impl<'de> Visitor<'de> for MetricMap {
            type Value = MetricVector;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object with the ten metric names as keys")
            }

            fn visit_map<A: MapAccess<'de>>(
                self,
                mut access: A,
            ) -> std::result::Result<MetricVector, A::Error> {
                let mut values = [None; 10];
                let mut seen = [false; 10];
                while let Some(key) = access.next_key::<String>()? {
                    let m = Metric::from_name(&key)
                        .ok_or_else(|| de::Error::custom(format!("unknown metric `{key}`")))?;
                    if seen[m.index()] {
                        return Err(de::Error::custom(format!("duplicate metric `{key}`")));
                    }
                    seen[m.index()] = true;
                    let v: Option<f64> = access.next_value()?;
                    values[m.index()] = v;
                }
                if let Some(m) = Metric::ALL.iter().find(|m| !seen[m.index()]) {
                    return Err(de::Error::custom(format!("metric `{m}` is absent")));
                }
                Ok(MetricVector { values })
            }
        }

        deserializer.deserialize_map(MetricMap)
    }
}

/// How dataset-level lexical metrics are reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LexicalReduction {
    /// Computed once over the concatenation of all samples' tokens.
    #[default]
    Pooled,
    /// Mean of the defined per-sample values.
    PerSampleMean,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProfileConfig {
    pub lexical: LexicalConfig,
    pub bleu: BleuConfig,
    pub embedding: EmbeddingProviderSpec,
    pub cluster: ClusterConfig,
    pub lexical_reduction: LexicalReduction,
}

impl ProfileConfig {
    /// First 16 hex digits of SHA-256 over the config's JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn validate(&self) -> Result<()> {
        self.lexical.validate()?;
        self.bleu.validate()?;
        if self.embedding.svd_rank == 0 {
            return Err(Error::Config("svd rank must be positive".into()));
        }
        if self.cluster.k < 2 || self.cluster.restarts == 0 || self.cluster.max_iters == 0 {
            return Err(Error::Config(
                "k-means needs k >= 2 and positive restarts and max_iters".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerSampleFeatures {
    pub feature_set: String,
    pub ids: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl PerSampleFeatures {
    pub fn column(&self, m: Metric) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r[m.index()]).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.columns != Metric::names() {
            return Err(Error::Schema(
                "per-sample columns must be the ten metrics in canonical order".into(),
            ));
        }
        if self.ids.len() != self.rows.len() {
            return Err(Error::Schema(format!(
                "{} per-sample ids but {} rows",
                self.ids.len(),
                self.rows.len()
            )));
        }
        if let Some(r) = self.rows.iter().find(|r| r.len() != 10) {
            return Err(Error::Schema(format!(
                "per-sample row has {} values, expected 10",
                r.len()
            )));
        }
        if self.rows.iter().flatten().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Schema("non-finite per-sample value".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetProfile {
    pub schema_version: u32,
    pub dataset_id: String,
    pub language: Language,
    pub n_samples: usize,
    pub sample_seed: Option<u64>,
    pub config_fingerprint: String,
    pub metrics: MetricVector,
    /// May cover every record of the dataset while `metrics` covers only
    /// the `n_samples` drawn.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_sample: Option<PerSampleFeatures>,
}

impl DatasetProfile {
    pub fn from_json(text: &str) -> Result<Self> {
        let p: DatasetProfile =
            serde_json::from_str(text).map_err(|e| Error::Schema(format!("profile: {e}")))?;
        if p.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "profile schema_version {} is not the supported version {SCHEMA_VERSION}",
                p.schema_version
            )));
        }
        p.metrics.validate()?;
        if let Some(ps) = &p.per_sample {
            ps.validate()?;
        }
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("profile serializes");
        s.push('\n');
        s
    }
}

/// Dataset-level metrics only.
pub fn profile_dataset(handle: &DatasetHandle, cfg: &ProfileConfig) -> Result<DatasetProfile> {
    compute(handle, cfg, false)
}

/// Dataset-level metrics plus the per-sample feature matrix.
pub fn profile_with_features(
    handle: &DatasetHandle,
    cfg: &ProfileConfig,
) -> Result<DatasetProfile> {
    compute(handle, cfg, true)
}

/// The N x 10 per-sample feature matrix.
pub fn sample_features(handle: &DatasetHandle, cfg: &ProfileConfig) -> Result<PerSampleFeatures> {
    Ok(compute(handle, cfg, true)?
        .per_sample
        .expect("requested per-sample features"))
}

/// Maps an undefined-metric outcome to a missing value and passes every
/// other error through.
fn defined<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedMetric { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn clamp_unit(v: f64) -> f64 {
    v.clamp(-1.0, 1.0)
}

struct Diversity {
    distinct1: Option<f64>,
    distinct2: Option<f64>,
    self_bleu: Option<Vec<f64>>,
}

struct Lexical {
    dataset: [Option<f64>; 4],
    per_sample: Vec<[Option<f64>; 6]>,
}

struct Semantic {
    cos_tfidf: Option<f64>,
    tfidf_centroid: Option<Vec<f64>>,
    cos_embed: Option<f64>,
    embed_centroid: Option<Vec<f64>>,
    silhouette: Option<Vec<f64>>,
}

fn compute(
    handle: &DatasetHandle,
    cfg: &ProfileConfig,
    per_sample: bool,
) -> Result<DatasetProfile> {
    cfg.validate()?;
    let n = handle.len();
    if n < 2 {
        return Err(Error::Profile(format!(
            "dataset `{}` has {n} samples, at least 2 are needed",
            handle.dataset_id
        )));
    }
    let tokens = intern(handle);

    let ((diversity, lexical), semantic) = rayon::join(
        || {
            rayon::join(
                || diversity(&tokens, &cfg.bleu),
                || lexical(&tokens, &cfg.lexical, per_sample),
            )
        },
        || semantic(handle, &tokens, cfg),
    );
    let (diversity, lexical, semantic) = (diversity?, lexical?, semantic?);

    let mut metrics = MetricVector::default();
    metrics.set(Metric::Distinct1, diversity.distinct1);
    metrics.set(Metric::Distinct2, diversity.distinct2);
    metrics.set(
        Metric::SelfBleu,
        diversity
            .self_bleu
            .as_ref()
            .map(|v| v.iter().sum::<f64>() / v.len() as f64),
    );
    let lexical_dataset = match cfg.lexical_reduction {
        LexicalReduction::Pooled => lexical.dataset,
        LexicalReduction::PerSampleMean => {
            let per = if per_sample {
                lexical.per_sample.clone()
            } else {
                per_sample_lexical(&tokens, &cfg.lexical)
            };
            [0, 1, 2, 3].map(|k| mean_defined(per.iter().map(|row| row[k + 2])))
        }
    };
    for (m, v) in [Metric::Ttr, Metric::Mattr, Metric::Hdd, Metric::Mtld]
        .into_iter()
        .zip(lexical_dataset)
    {
        metrics.set(m, v);
    }
    metrics.set(Metric::CosTfidf, semantic.cos_tfidf.map(clamp_unit));
    metrics.set(Metric::CosEmbed, semantic.cos_embed.map(clamp_unit));
    metrics.set(
        Metric::Silhouette,
        semantic
            .silhouette
            .as_ref()
            .map(|s| s.iter().sum::<f64>() / s.len() as f64),
    );
    metrics.validate()?;

    let per_sample = per_sample.then(|| {
        let rows = (0..n)
            .map(|i| {
                let lex = &lexical.per_sample[i];
                let mut row = [None; 10];
                row[Metric::Distinct1.index()] = lex[0];
                row[Metric::Distinct2.index()] = lex[1];
                row[Metric::Ttr.index()] = lex[2];
                row[Metric::Mattr.index()] = lex[3];
                row[Metric::Hdd.index()] = lex[4];
                row[Metric::Mtld.index()] = lex[5];
                row[Metric::SelfBleu.index()] = diversity.self_bleu.as_ref().map(|v| v[i]);
                row[Metric::CosEmbed.index()] =
                    semantic.embed_centroid.as_ref().map(|v| clamp_unit(v[i]));
                row[Metric::CosTfidf.index()] =
                    semantic.tfidf_centroid.as_ref().map(|v| clamp_unit(v[i]));
                row[Metric::Silhouette.index()] = semantic.silhouette.as_ref().map(|v| v[i]);
                row.into_iter()
                    .map(|v| v.filter(|x| x.is_finite()))
                    .collect()
            })
            .collect();
        PerSampleFeatures {
            feature_set: PER_SAMPLE_FEATURE_SET.to_string(),
            ids: handle.ids().map(str::to_string).collect(),
            columns: Metric::names(),
            rows,
        }
    });

    Ok(DatasetProfile {
        schema_version: SCHEMA_VERSION,
        dataset_id: handle.dataset_id.clone(),
        language: handle.language.clone(),
        n_samples: n,
        sample_seed: handle.sample_seed,
        config_fingerprint: cfg.fingerprint(),
        metrics,
        per_sample,
    })
}

/// Maps tokens to dense ids in order of first occurrence.
fn intern(handle: &DatasetHandle) -> Vec<Vec<u32>> {
    let mut ids: HashMap<&str, u32> = HashMap::new();
    handle
        .samples
        .iter()
        .map(|s| {
            s.tokens
                .iter()
                .map(|t| {
                    let next = ids.len() as u32;
                    *ids.entry(t.as_str()).or_insert(next)
                })
                .collect()
        })
        .collect()
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, count) = values
        .flatten()
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

fn diversity(tokens: &[Vec<u32>], bleu: &BleuConfig) -> Result<Diversity> {
    Ok(Diversity {
        distinct1: defined(divmetrics::distinct_n(tokens, 1))?,
        distinct2: defined(divmetrics::distinct_n(tokens, 2))?,
        self_bleu: defined(divmetrics::self_bleu_per_sample(tokens, bleu))?,
    })
}

/// distinct1, distinct2, ttr, mattr, hdd, mtld of each sample on its own tokens.
fn per_sample_lexical(tokens: &[Vec<u32>], cfg: &LexicalConfig) -> Vec<[Option<f64>; 6]> {
    tokens
        .par_iter()
        .map(|t| {
            let one = std::slice::from_ref(t);
            [
                divmetrics::distinct_n(one, 1).ok(),
                divmetrics::distinct_n(one, 2).ok(),
                lexmetrics::ttr(t).ok(),
                lexmetrics::mattr(t, cfg.mattr_window).ok(),
                lexmetrics::hdd(t, cfg.hdd_draw).ok(),
                lexmetrics::mtld(t, cfg.mtld_threshold).ok(),
            ]
        })
        .collect()
}

fn lexical(tokens: &[Vec<u32>], cfg: &LexicalConfig, per_sample: bool) -> Result<Lexical> {
    let pooled: Vec<u32> = tokens.iter().flatten().copied().collect();
    let dataset = [
        defined(lexmetrics::ttr(&pooled))?,
        defined(lexmetrics::mattr(&pooled, cfg.mattr_window))?,
        defined(lexmetrics::hdd(&pooled, cfg.hdd_draw))?,
        defined(lexmetrics::mtld(&pooled, cfg.mtld_threshold))?,
    ];
    let per_sample = if per_sample {
        per_sample_lexical(tokens, cfg)
    } else {
        Vec::new()
    };
    Ok(Lexical {
        dataset,
        per_sample,
    })
}

fn semantic(handle: &DatasetHandle, tokens: &[Vec<u32>], cfg: &ProfileConfig) -> Result<Semantic> {
    let (tfidf, embedded) = rayon::join(
        || defined(semmetrics::tfidf_fit_transform(tokens)),
        || {
            let texts: Vec<&str> = handle.samples.iter().map(|s| s.text.as_str()).collect();
            defined(semmetrics::embed(&texts, tokens, &cfg.embedding))
        },
    );
    let (cos_tfidf, tfidf_centroid) = match tfidf? {
        Some(model) => (
            defined(model.mean_pairwise_cosine())?,
            Some(model.centroid_cosines()),
        ),
        None => (None, None),
    };
    let (cos_embed, embed_centroid, silhouette) = match embedded? {
        Some(e) => {
            let cos = defined(semmetrics::mean_pairwise_cosine(&e.vectors))?;
            let centroid = semmetrics::centroid_cosines(&e.vectors);
            let sil = match semmetrics::kmeans(&e.vectors, &cfg.cluster) {
                Ok(km) => defined(semmetrics::silhouette_samples(&e.vectors, &km.assignments))?,
                // k outside 2..=N-1 for this dataset: silhouette is undefined.
                Err(Error::Config(_)) => None,
                Err(e) => return Err(e),
            };
            (cos, Some(centroid), sil)
        }
        None => (None, None, None),
    };
    Ok(Semantic {
        cos_tfidf,
        tfidf_centroid,
        cos_embed,
        embed_centroid,
        silhouette,
    })
}
