//! The `corposcope` command line: profile → pca → subset → correlate/deltas
//! → report.

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

mod commands;
pub mod config;
mod manifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "corposcope",
    version,
    about = "Profile text corpora, fit per-language PCA, select subsets"
)]
pub struct Cli {
    /// Root seed; every random stream is derived from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "CORPOSCOPE_THREADS")]
    pub threads: Option<usize>,
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the ten metrics for one or more datasets.
    Profile(ProfileArgs),
    /// Fit a PCA model over the profiles of one language.
    Pca(PcaArgs),
    /// Write High/Low/Random subsets of a dataset along one component.
    Subset(SubsetArgs),
    /// Correlate component scores with benchmark scores.
    Correlate(CorrelateArgs),
    /// Mean subset-minus-random score differences.
    Deltas(DeltasArgs),
    /// Render markdown summary tables.
    Report(ReportArgs),
    /// Print JSON schemas of the output artifacts.
    Schema(SchemaArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// jsonl, csv or txt; guessed from the extension when omitted.
    #[arg(long)]
    pub format: Option<String>,
    /// Field holding the sample text (default `text`).
    #[arg(long, conflicts_with = "text_template")]
    pub text_field: Option<String>,
    /// Template joining several fields, e.g. "{instruction}\n{output}".
    #[arg(long)]
    pub text_template: Option<String>,
    /// Field holding the sample id; line numbers are used otherwise.
    #[arg(long)]
    pub id_field: Option<String>,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Dataset file; repeat for several datasets.
    #[arg(long, required = true)]
    pub input: Vec<PathBuf>,
    #[command(flatten)]
    pub source: InputArgs,
    /// Dataset id (single input only); the file stem otherwise.
    #[arg(long)]
    pub dataset_id: Option<String>,
    /// Language code, e.g. ar, ja, zh.
    #[arg(long)]
    pub lang: Option<String>,
    /// Samples drawn per dataset; 0 keeps every record.
    #[arg(long)]
    pub sample: Option<usize>,
    /// Also write the per-sample feature matrix over every record.
    #[arg(long)]
    pub per_sample: bool,
    /// builtin or http.
    #[arg(long)]
    pub embedder: Option<String>,
    /// Base URL of the embedding service.
    #[arg(long)]
    pub embedder_url: Option<String>,
    /// Fall back to the builtin embedder when the service fails.
    #[arg(long)]
    pub embedder_fallback: bool,
    #[arg(long)]
    pub svd_rank: Option<usize>,
    /// Number of k-means clusters.
    #[arg(long)]
    pub kmeans_k: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub mattr_window: Option<usize>,
    #[arg(long)]
    pub hdd_draw: Option<usize>,
    #[arg(long)]
    pub mtld_threshold: Option<f64>,
    #[arg(long)]
    pub bleu_max_ngram: Option<usize>,
    #[arg(long)]
    pub bleu_epsilon: Option<f64>,
    #[arg(long)]
    pub bleu_ref_cap: Option<usize>,
    /// pooled or per_sample_mean.
    #[arg(long)]
    pub lexical_reduction: Option<String>,
    /// Output directory with one `<dataset>.profile.json` per input, or a
    /// `.json` file when there is a single input.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PcaArgs {
    /// Directory of `*.profile.json` files.
    #[arg(long)]
    pub profiles: Vec<PathBuf>,
    /// Single profile file; may be repeated.
    #[arg(long)]
    pub profile: Vec<PathBuf>,
    /// Expected language of every profile.
    #[arg(long)]
    pub lang: Option<String>,
    #[arg(long)]
    pub components: Option<usize>,
    /// Output model file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SubsetArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub source: InputArgs,
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long)]
    pub pca: PathBuf,
    /// Component, 1-based.
    #[arg(long)]
    pub pc: Option<usize>,
    /// high, low, random or all.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub size: Option<usize>,
    /// proxy or projection.
    #[arg(long)]
    pub ranking: Option<String>,
    /// Output JSONL file, or a directory with `--mode all`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[arg(long)]
    pub pca: PathBuf,
    #[arg(long)]
    pub scores: PathBuf,
    /// Also render heatmap.svg.
    #[arg(long)]
    pub svg: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DeltasArgs {
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// PCA model; repeat for several languages.
    #[arg(long, required = true)]
    pub pca: Vec<PathBuf>,
    /// heatmap.json written by `correlate`.
    #[arg(long)]
    pub heatmap: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SchemaArgs {
    /// One of profile, pca, subset_manifest, heatmap, run_manifest.
    pub name: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Validation,
    Internal,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Validation,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Internal,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Usage | ErrorKind::Validation => EXIT_VALIDATION,
            ErrorKind::Internal => EXIT_INTERNAL,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.kind {
            ErrorKind::Usage => "usage",
            ErrorKind::Validation => "validation",
            ErrorKind::Internal => "internal",
        };
        let line = self
            .message
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ");
        write!(f, "error[{tag}]: {line}")
    }
}

impl From<corposcope::Error> for CliError {
    fn from(e: corposcope::Error) -> Self {
        if e.is_internal() {
            CliError::internal(e.to_string())
        } else {
            CliError::validation(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let first = e.to_string();
            let first = first
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            let err = CliError {
                kind: ErrorKind::Usage,
                message: first.to_string(),
            };
            eprintln!("{err}");
            return err.exit_code();
        }
    };
    match commands::dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
