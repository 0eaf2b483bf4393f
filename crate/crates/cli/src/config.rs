//! TOML run configuration. Every key is optional; command-line flags win.
//!
//! ```toml
//! seed = 42
//! threads = 4
//!
//! [profile]
//! lang = "ar"
//! sample = 1000
//! text_template = "{instruction}\n{output}"
//! per_sample = true
//!
//! [subset]
//! size = 2000
//! ranking = "projection"
//! ```

use serde::Deserialize;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub profile: ProfileSection,
    #[serde(default)]
    pub pca: PcaSection,
    #[serde(default)]
    pub subset: SubsetSection,
    #[serde(default)]
    pub correlate: CorrelateSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    pub format: Option<String>,
    pub text_field: Option<String>,
    pub text_template: Option<String>,
    pub id_field: Option<String>,
    pub lang: Option<String>,
    pub sample: Option<usize>,
    pub per_sample: Option<bool>,
    pub embedder: Option<String>,
    pub embedder_url: Option<String>,
    pub embedder_fallback: Option<bool>,
    pub svd_rank: Option<usize>,
    pub kmeans_k: Option<usize>,
    pub restarts: Option<usize>,
    pub max_iters: Option<usize>,
    pub mattr_window: Option<usize>,
    pub hdd_draw: Option<usize>,
    pub mtld_threshold: Option<f64>,
    pub bleu_max_ngram: Option<usize>,
    pub bleu_epsilon: Option<f64>,
    pub bleu_ref_cap: Option<usize>,
    pub lexical_reduction: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PcaSection {
    pub lang: Option<String>,
    pub components: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsetSection {
    pub format: Option<String>,
    pub text_field: Option<String>,
    pub text_template: Option<String>,
    pub id_field: Option<String>,
    pub pc: Option<usize>,
    pub mode: Option<String>,
    pub size: Option<usize>,
    pub ranking: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelateSection {
    pub svg: Option<bool>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.message().to_string())
    }
}
