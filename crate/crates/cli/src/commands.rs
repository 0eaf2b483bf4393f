use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde_json::json;

use corposcope::analysis::{correlate, subset_delta, Heatmap, ScoreTable};
use corposcope::corpus::{
    parse_dataset, sample_n, DatasetHandle, Format, Language, LoadOptions, Template, TextSpec,
};
use corposcope::pca::{fit_language, PcaModel};
use corposcope::profile::{
    profile_dataset, profile_with_features, sample_features, DatasetProfile, LexicalReduction,
    Metric, ProfileConfig,
};
use corposcope::rng::derive_seed;
use corposcope::selection::{
    build_subsets, rank, write_subset_jsonl, RankingMethod, SubsetManifest, SubsetMode, SubsetSpec,
};
use corposcope::semmetrics::EmbedderKind;
use corposcope::{report, schema};

use crate::config::FileConfig;
use crate::manifest::{parent_dir, read_input, RunManifest};
use crate::{
    Cli, CliError, CliResult, Command, CorrelateArgs, DeltasArgs, InputArgs, PcaArgs, ProfileArgs,
    ReportArgs, SchemaArgs, SubsetArgs,
};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_SAMPLE: usize = 1000;
pub const DEFAULT_COMPONENTS: usize = 3;
pub const DEFAULT_SUBSET_SIZE: usize = 2000;

pub fn dispatch(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(path) => {
            let bytes = read_input(path)?;
            let text = String::from_utf8(bytes)
                .map_err(|_| CliError::validation(format!("{} is not UTF-8", path.display())))?;
            FileConfig::parse(&text)
                .map_err(|e| CliError::validation(format!("config {}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    if let Some(threads) = cli.threads.or(file.threads) {
        if threads == 0 {
            return Err(CliError::validation("--threads must be at least 1"));
        }
        // Fails only if a pool already exists in this process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let seed = cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    match cli.command {
        Command::Profile(a) => profile(a, &file, seed),
        Command::Pca(a) => pca(a, &file, seed),
        Command::Subset(a) => subset(a, &file, seed),
        Command::Correlate(a) => correlate_cmd(a, &file, seed),
        Command::Deltas(a) => deltas(a, seed),
        Command::Report(a) => report_cmd(a, seed),
        Command::Schema(a) => schema_cmd(a),
    }
}

fn with_path(path: &Path) -> impl Fn(corposcope::Error) -> CliError + '_ {
    move |e| {
        let mut err = CliError::from(e);
        err.message = format!("{}: {}", path.display(), err.message);
        err
    }
}

fn read_text(path: &Path) -> CliResult<(Vec<u8>, String)> {
    let bytes = read_input(path)?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::validation(format!("{} is not UTF-8", path.display())))?;
    Ok((bytes, text))
}

struct Source {
    format: Option<Format>,
    text_spec: TextSpec,
    id_field: Option<String>,
}

fn resolve_source(
    flags: &InputArgs,
    format: Option<&String>,
    text_field: Option<&String>,
    text_template: Option<&String>,
    id_field: Option<&String>,
) -> CliResult<Source> {
    let format = flags
        .format
        .as_ref()
        .or(format)
        .map(|f| f.parse::<Format>())
        .transpose()?;
    let (field, template) = if flags.text_field.is_some() || flags.text_template.is_some() {
        (flags.text_field.as_ref(), flags.text_template.as_ref())
    } else {
        (text_field, text_template)
    };
    let text_spec = match (field, template) {
        (Some(_), Some(_)) => {
            return Err(CliError::validation(
                "text_field and text_template are mutually exclusive",
            ))
        }
        (None, Some(t)) => TextSpec::Template(Template::parse(t)?),
        (Some(f), None) => TextSpec::Field(f.clone()),
        (None, None) => TextSpec::Field("text".into()),
    };
    Ok(Source {
        format,
        text_spec,
        id_field: flags.id_field.clone().or_else(|| id_field.cloned()),
    })
}

fn load(
    path: &Path,
    source: &Source,
    language: Language,
    dataset_id: String,
    bytes: &[u8],
) -> CliResult<DatasetHandle> {
    let format = source
        .format
        .or_else(|| Format::from_path(path))
        .ok_or_else(|| {
            CliError::validation(format!(
                "cannot infer the format of {}; pass --format",
                path.display()
            ))
        })?;
    let opts = LoadOptions {
        format,
        text_spec: source.text_spec.clone(),
        id_field: source.id_field.clone(),
        language,
        dataset_id,
    };
    let mut handle = parse_dataset(bytes, &opts).map_err(with_path(path))?;
    handle.source_path = path.to_path_buf();
    Ok(handle)
}

fn check_dataset_id(id: &str) -> CliResult<()> {
    if id.is_empty() || id.contains(['/', '\\']) || id == "." || id == ".." {
        return Err(CliError::validation(format!(
            "dataset id `{id}` cannot be used as a file name"
        )));
    }
    Ok(())
}

fn profile(a: ProfileArgs, file: &FileConfig, seed: u64) -> CliResult<()> {
    let c = &file.profile;
    let source = resolve_source(
        &a.source,
        c.format.as_ref(),
        c.text_field.as_ref(),
        c.text_template.as_ref(),
        c.id_field.as_ref(),
    )?;
    let lang = a
        .lang
        .clone()
        .or_else(|| c.lang.clone())
        .ok_or_else(|| CliError::validation("--lang is required"))?;
    let language = Language::new(&lang);
    let sample = a.sample.or(c.sample).unwrap_or(DEFAULT_SAMPLE);
    let per_sample = a.per_sample || c.per_sample.unwrap_or(false);
    if a.dataset_id.is_some() && a.input.len() > 1 {
        return Err(CliError::validation(
            "--dataset-id needs exactly one --input",
        ));
    }

    let mut cfg = ProfileConfig::default();
    cfg.lexical.mattr_window = a
        .mattr_window
        .or(c.mattr_window)
        .unwrap_or(cfg.lexical.mattr_window);
    cfg.lexical.hdd_draw = a.hdd_draw.or(c.hdd_draw).unwrap_or(cfg.lexical.hdd_draw);
    cfg.lexical.mtld_threshold = a
        .mtld_threshold
        .or(c.mtld_threshold)
        .unwrap_or(cfg.lexical.mtld_threshold);
    cfg.bleu.max_ngram = a
        .bleu_max_ngram
        .or(c.bleu_max_ngram)
        .unwrap_or(cfg.bleu.max_ngram);
    cfg.bleu.smoothing_epsilon = a
        .bleu_epsilon
        .or(c.bleu_epsilon)
        .unwrap_or(cfg.bleu.smoothing_epsilon);
    cfg.bleu.reference_cap = a
        .bleu_ref_cap
        .or(c.bleu_ref_cap)
        .unwrap_or(cfg.bleu.reference_cap);
    cfg.bleu.reference_seed = derive_seed(seed, "self-bleu", 0);
    cfg.cluster.k = a.kmeans_k.or(c.kmeans_k).unwrap_or(cfg.cluster.k);
    cfg.cluster.restarts = a.restarts.or(c.restarts).unwrap_or(cfg.cluster.restarts);
    cfg.cluster.max_iters = a.max_iters.or(c.max_iters).unwrap_or(cfg.cluster.max_iters);
    cfg.cluster.seed = derive_seed(seed, "kmeans", 0);
    cfg.embedding.svd_rank = a.svd_rank.or(c.svd_rank).unwrap_or(cfg.embedding.svd_rank);
    cfg.embedding.seed = derive_seed(seed, "svd", 0);
    cfg.embedding.kind = match a
        .embedder
        .as_ref()
        .or(c.embedder.as_ref())
        .map(String::as_str)
    {
        None | Some("builtin") => EmbedderKind::BuiltinSvd,
        Some("http") => EmbedderKind::ExternalHttp,
        Some(other) => {
            return Err(CliError::validation(format!(
                "unknown embedder `{other}` (builtin or http)"
            )))
        }
    };
    cfg.embedding.endpoint = a.embedder_url.clone().or_else(|| c.embedder_url.clone());
    cfg.embedding.fallback_to_builtin = a.embedder_fallback || c.embedder_fallback.unwrap_or(false);
    if cfg.embedding.kind == EmbedderKind::ExternalHttp && cfg.embedding.endpoint.is_none() {
        return Err(CliError::validation("--embedder http needs --embedder-url"));
    }
    cfg.lexical_reduction = match a
        .lexical_reduction
        .as_ref()
        .or(c.lexical_reduction.as_ref())
        .map(String::as_str)
    {
        None | Some("pooled") => LexicalReduction::Pooled,
        Some("per_sample_mean") => LexicalReduction::PerSampleMean,
        Some(other) => {
            return Err(CliError::validation(format!(
                "unknown lexical reduction `{other}` (pooled or per_sample_mean)"
            )))
        }
    };
    cfg.validate()?;
    let sample_seed = derive_seed(seed, "sample", 0);

    let single_file = a.input.len() == 1
        && a.out
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let mut manifest = RunManifest::new("profile", seed);
    manifest.config_fingerprint = Some(cfg.fingerprint());
    let mut ids = BTreeSet::new();
    let mut dataset_ids = Vec::new();
    for path in &a.input {
        let dataset_id = match &a.dataset_id {
            Some(id) => id.clone(),
            None => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
        };
        check_dataset_id(&dataset_id)?;
        if !ids.insert(dataset_id.clone()) {
            return Err(CliError::validation(format!(
                "two inputs share the dataset id `{dataset_id}`"
            )));
        }
        let bytes = read_input(path)?;
        manifest.input(path, &bytes);
        let full = load(path, &source, language.clone(), dataset_id.clone(), &bytes)?;
        if full.skipped > 0 {
            manifest.warn(format!(
                "{dataset_id}: {} empty records skipped",
                full.skipped
            ));
        }
        let sampled = if sample == 0 {
            full.clone()
        } else {
            sample_n(&full, sample, sample_seed)?
        };
        let result = if per_sample && sampled.len() == full.len() {
            profile_with_features(&sampled, &cfg)
        } else {
            profile_dataset(&sampled, &cfg).and_then(|mut p| {
                if per_sample {
                    p.per_sample = Some(sample_features(&full, &cfg)?);
                }
                Ok(p)
            })
        };
        let profile = result.map_err(with_path(path))?;
        let missing: Vec<&str> = Metric::ALL
            .iter()
            .filter(|m| profile.metrics.get(**m).is_none())
            .map(|m| m.name())
            .collect();
        if !missing.is_empty() {
            manifest.warn(format!(
                "{dataset_id}: undefined metrics {}",
                missing.join(", ")
            ));
        }
        let path = if single_file {
            a.out.clone()
        } else {
            a.out.join(format!("{dataset_id}.profile.json"))
        };
        manifest.output(&path, &profile.to_json())?;
        dataset_ids.push(dataset_id);
    }
    manifest.config = json!({
        "datasets": dataset_ids,
        "lang": language.as_str(),
        "format": source.format,
        "text_spec": source.text_spec.to_string(),
        "id_field": source.id_field,
        "sample": sample,
        "sample_seed": (sample > 0).then_some(sample_seed),
        "per_sample": per_sample,
        "profile": cfg,
    });
    manifest.finish(&if single_file {
        parent_dir(&a.out)
    } else {
        a.out.clone()
    })
}

fn profile_paths(a: &PcaArgs) -> CliResult<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for dir in &a.profiles {
        let entries = std::fs::read_dir(dir)
            .map_err(|e| CliError::validation(format!("cannot read {}: {e}", dir.display())))?;
        let mut found: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.ends_with(".profile.json"))
            })
            .collect();
        found.sort();
        paths.extend(found);
    }
    paths.extend(a.profile.iter().cloned());
    if paths.is_empty() {
        return Err(CliError::validation(
            "no profiles given; pass --profiles DIR or --profile FILE",
        ));
    }
    Ok(paths)
}

fn pca(a: PcaArgs, file: &FileConfig, seed: u64) -> CliResult<()> {
    let components = a
        .components
        .or(file.pca.components)
        .unwrap_or(DEFAULT_COMPONENTS);
    let lang = a
        .lang
        .clone()
        .or_else(|| file.pca.lang.clone())
        .map(|l| Language::new(&l));
    let mut manifest = RunManifest::new("pca", seed);
    let mut profiles = Vec::new();
    for path in profile_paths(&a)? {
        let (bytes, text) = read_text(&path)?;
        manifest.input(&path, &bytes);
        let p = DatasetProfile::from_json(&text).map_err(with_path(&path))?;
        if let Some(l) = &lang {
            if &p.language != l {
                return Err(CliError::validation(format!(
                    "mixed-language profiles: {} is `{}`, expected `{l}`",
                    path.display(),
                    p.language
                )));
            }
        }
        profiles.push(p);
    }
    let (model, warnings) = fit_language(&profiles, components)?;
    for w in warnings {
        manifest.warn(w);
    }
    manifest.config_fingerprint = Some(model.config_fingerprint.clone());
    manifest.config = json!({
        "lang": model.language.as_str(),
        "components": components,
        "datasets": model.dataset_scores.keys().collect::<Vec<_>>(),
    });
    manifest.output(&a.out, &model.to_json())?;
    manifest.finish(&parent_dir(&a.out))
}

fn subset(a: SubsetArgs, file: &FileConfig, seed: u64) -> CliResult<()> {
    let c = &file.subset;
    let source = resolve_source(
        &a.source,
        c.format.as_ref(),
        c.text_field.as_ref(),
        c.text_template.as_ref(),
        c.id_field.as_ref(),
    )?;
    let pc =
        a.pc.or(c.pc)
            .ok_or_else(|| CliError::validation("--pc is required"))?;
    let mode = a
        .mode
        .clone()
        .or_else(|| c.mode.clone())
        .ok_or_else(|| CliError::validation("--mode is required (high, low, random or all)"))?;
    let modes: Vec<SubsetMode> = if mode == "all" {
        SubsetMode::ALL.to_vec()
    } else {
        vec![mode.parse()?]
    };
    let size = a.size.or(c.size).unwrap_or(DEFAULT_SUBSET_SIZE);
    let method: RankingMethod = a
        .ranking
        .as_deref()
        .or(c.ranking.as_deref())
        .unwrap_or("projection")
        .parse()?;

    let mut manifest = RunManifest::new("subset", seed);
    let (bytes, text) = read_text(&a.profile)?;
    manifest.input(&a.profile, &bytes);
    let profile = DatasetProfile::from_json(&text).map_err(with_path(&a.profile))?;
    let (bytes, text) = read_text(&a.pca)?;
    manifest.input(&a.pca, &bytes);
    let model = PcaModel::from_json(&text).map_err(with_path(&a.pca))?;
    let bytes = read_input(&a.input)?;
    manifest.input(&a.input, &bytes);
    let handle = load(
        &a.input,
        &source,
        profile.language.clone(),
        profile.dataset_id.clone(),
        &bytes,
    )?;
    check_dataset_id(&profile.dataset_id)?;

    let ranking = rank(&handle, &profile, &model, pc, method)?;
    let spec = SubsetSpec {
        dataset_id: profile.dataset_id.clone(),
        pc,
        size,
        ranking: method,
        seed,
    };
    let subsets = build_subsets(&handle, &ranking, &spec)?;
    let single = modes.len() == 1;
    for mode in &modes {
        let ids = subsets.get(*mode);
        let (data_path, manifest_path) = if single {
            (a.out.clone(), a.out.with_extension("manifest.json"))
        } else {
            let stem = format!("{}.pc{pc}.{mode}", profile.dataset_id);
            (
                a.out.join(format!("{stem}.jsonl")),
                a.out.join(format!("{stem}.manifest.json")),
            )
        };
        let mut buf = Vec::new();
        write_subset_jsonl(&handle, ids, &mut buf)?;
        let jsonl = String::from_utf8(buf).map_err(|e| CliError::internal(e.to_string()))?;
        manifest.output(&data_path, &jsonl)?;
        let m = SubsetManifest::new(&profile, &ranking, &spec, *mode, ids);
        let mut text =
            serde_json::to_string_pretty(&m).map_err(|e| CliError::internal(e.to_string()))?;
        text.push('\n');
        manifest.output(&manifest_path, &text)?;
    }
    manifest.config_fingerprint = Some(profile.config_fingerprint.clone());
    manifest.config = json!({
        "dataset_id": profile.dataset_id,
        "pc": pc,
        "modes": modes,
        "size": size,
        "ranking": method,
        "proxy_metric": ranking.proxy.map(|(m, _)| m.name()),
        "format": source.format,
        "text_spec": source.text_spec.to_string(),
        "id_field": source.id_field,
    });
    manifest.finish(&if single {
        parent_dir(&a.out)
    } else {
        a.out.clone()
    })
}

fn correlate_cmd(a: CorrelateArgs, file: &FileConfig, seed: u64) -> CliResult<()> {
    let mut manifest = RunManifest::new("correlate", seed);
    let (bytes, text) = read_text(&a.pca)?;
    manifest.input(&a.pca, &bytes);
    let model = PcaModel::from_json(&text).map_err(with_path(&a.pca))?;
    let bytes = read_input(&a.scores)?;
    manifest.input(&a.scores, &bytes);
    let scores = ScoreTable::parse_csv(&bytes).map_err(with_path(&a.scores))?;
    let table = correlate(&model, &scores)?;
    for w in &table.warnings {
        manifest.warn(w.clone());
    }
    let heatmap = table.heatmap();
    manifest.output(&a.out.join("correlations.csv"), &table.to_csv())?;
    manifest.output(&a.out.join("heatmap.json"), &heatmap.to_json())?;
    manifest.output(&a.out.join("heatmap.csv"), &heatmap.to_csv())?;
    let svg = a.svg || file.correlate.svg.unwrap_or(false);
    if svg {
        manifest.output(&a.out.join("heatmap.svg"), &heatmap.to_svg())?;
    }
    manifest.config_fingerprint = Some(model.config_fingerprint.clone());
    manifest.config = json!({ "lang": model.language.as_str(), "svg": svg });
    manifest.finish(&a.out)
}

fn deltas(a: DeltasArgs, seed: u64) -> CliResult<()> {
    let mut manifest = RunManifest::new("deltas", seed);
    let bytes = read_input(&a.scores)?;
    manifest.input(&a.scores, &bytes);
    let scores = ScoreTable::parse_csv(&bytes).map_err(with_path(&a.scores))?;
    let table = subset_delta(&scores)?;
    for w in &table.warnings {
        manifest.warn(w.clone());
    }
    manifest.output(&a.out, &table.to_csv())?;
    manifest.config = json!({});
    manifest.finish(&parent_dir(&a.out))
}

fn report_cmd(a: ReportArgs, seed: u64) -> CliResult<()> {
    let mut manifest = RunManifest::new("report", seed);
    let mut models = Vec::new();
    for path in &a.pca {
        let (bytes, text) = read_text(path)?;
        manifest.input(path, &bytes);
        models.push(PcaModel::from_json(&text).map_err(with_path(path))?);
    }
    let heatmap = match &a.heatmap {
        Some(path) => {
            let (bytes, text) = read_text(path)?;
            manifest.input(path, &bytes);
            Some(Heatmap::from_json(&text).map_err(with_path(path))?)
        }
        None => None,
    };
    let text = report::render(&models, heatmap.as_ref())?;
    match &a.out {
        Some(out) => {
            manifest.output(out, &text)?;
            let fingerprints: BTreeSet<&str> = models
                .iter()
                .map(|m| m.config_fingerprint.as_str())
                .collect();
            if fingerprints.len() == 1 {
                manifest.config_fingerprint = fingerprints.first().map(|f| f.to_string());
            }
            manifest.config = json!({
                "languages": models.iter().map(|m| m.language.as_str()).collect::<Vec<_>>(),
            });
            manifest.finish(&parent_dir(out))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn schema_cmd(a: SchemaArgs) -> CliResult<()> {
    let value = match &a.name {
        Some(name) => schema::by_name(name).ok_or_else(|| {
            CliError::validation(format!(
                "unknown schema `{name}` (one of {})",
                schema::NAMES.join(", ")
            ))
        })?,
        None => serde_json::Value::Object(
            schema::NAMES
                .iter()
                .map(|n| (n.to_string(), schema::by_name(n).expect("listed schema")))
                .collect(),
        ),
    };
    let text =
        serde_json::to_string_pretty(&value).map_err(|e| CliError::internal(e.to_string()))?;
    println!("{text}");
    Ok(())
}
