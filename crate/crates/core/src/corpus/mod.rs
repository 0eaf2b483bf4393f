//! Dataset ingestion, tokenization and reproducible sampling.

mod template;
mod tokenize;

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::rng::{select_positions, SplitMix64};

pub use template::Template;
pub use tokenize::tokenize;

/// Lowercased language code such as `ar`, `ja` or `zh-hant`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Language(String);

impl Language {
    pub fn new(code: &str) -> Self {
        Self(code.trim().to_ascii_lowercase())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Chinese and Japanese use per-character segmentation.
    pub fn is_cjk(&self) -> bool {
        let primary = self.0.split(['-', '_']).next().unwrap_or("");
        matches!(primary, "zh" | "ja")
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Jsonl,
    Csv,
    Txt,
}

impl Format {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "jsonl" | "ndjson" => Some(Format::Jsonl),
            "csv" => Some(Format::Csv),
            "txt" => Some(Format::Txt),
            _ => None,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            "txt" => Ok(Format::Txt),
            other => Err(Error::Config(format!("unknown input format `{other}`"))),
        }
    }
}

/// Where the sample text comes from in each record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TextSpec {
    Field(String),
    Template(Template),
}

impl TextSpec {
    fn fields(&self) -> Vec<&str> {
        match self {
            TextSpec::Field(f) => vec![f.as_str()],
            TextSpec::Template(t) => t.fields().collect(),
        }
    }

    fn extract<'a>(&self, lookup: impl Fn(&str) -> Option<&'a str>) -> Option<String> {
        match self {
            TextSpec::Field(f) => lookup(f).map(str::to_string),
            TextSpec::Template(t) => t.render(lookup),
        }
    }
}

impl fmt::Display for TextSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TextSpec::Field(name) => f.write_str(name),
            TextSpec::Template(t) => f.write_str(t.source()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub id: String,
    pub text: String,
    pub tokens: Vec<String>,
    /// The original record as one JSON line (verbatim for JSONL input).
    pub record: String,
}

#[derive(Debug, Clone)]
pub struct DatasetHandle {
    pub dataset_id: String,
    pub language: Language,
    pub source_path: PathBuf,
    pub text_spec: TextSpec,
    /// Seed of the last [`sample_n`] draw, `None` for a full dataset.
    pub sample_seed: Option<u64>,
    /// Records dropped because their text was empty after trimming.
    pub skipped: usize,
    pub samples: Vec<Sample>,
}

impl DatasetHandle {
    /// Builds a handle from in-memory texts, ids `1..=n`.
    pub fn from_texts<S: AsRef<str>>(
        dataset_id: &str,
        language: Language,
        texts: &[S],
    ) -> Result<Self> {
        let raw: Vec<RawRecord> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| RawRecord {
                line: i as u64 + 1,
                id: None,
                text: Some(t.as_ref().to_string()),
                record: serde_json::json!({ "text": t.as_ref() }).to_string(),
            })
            .collect();
        let spec = TextSpec::Field("text".into());
        assemble(dataset_id, language, PathBuf::new(), spec, raw)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.samples.iter().map(|s| s.id.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub format: Format,
    pub text_spec: TextSpec,
    pub id_field: Option<String>,
    pub language: Language,
    pub dataset_id: String,
}

/// Reads a dataset file. Records are kept in file order.
pub fn load_dataset(path: &Path, opts: &LoadOptions) -> Result<DatasetHandle> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut handle = parse_dataset(&bytes, opts)?;
    handle.source_path = path.to_path_buf();
    Ok(handle)
}

/// Parses dataset bytes in the given format.
pub fn parse_dataset(bytes: &[u8], opts: &LoadOptions) -> Result<DatasetHandle> {
    let raw = match opts.format {
        Format::Jsonl => read_jsonl(bytes, opts)?,
        Format::Csv => read_csv(bytes, opts)?,
        Format::Txt => read_txt(bytes)?,
    };
    assemble(
        &opts.dataset_id,
        opts.language.clone(),
        PathBuf::new(),
        opts.text_spec.clone(),
        raw,
    )
}

struct RawRecord {
    line: u64,
    id: Option<String>,
    /// `None` when no referenced field exists in the record.
    text: Option<String>,
    record: String,
}

fn assemble(
    dataset_id: &str,
    language: Language,
    source_path: PathBuf,
    text_spec: TextSpec,
    raw: Vec<RawRecord>,
) -> Result<DatasetHandle> {
    if !raw.is_empty() && raw.iter().all(|r| r.text.is_none()) {
        return Err(Error::TextSpecUnmatched {
            spec: text_spec.to_string(),
        });
    }
    let mut seen = HashSet::new();
    let mut kept = Vec::with_capacity(raw.len());
    let mut skipped = 0;
    for r in raw {
        let id = r.id.unwrap_or_else(|| r.line.to_string());
        if !seen.insert(id.clone()) {
            return Err(Error::MalformedRecord {
                line: r.line,
                message: format!("duplicate id `{id}`"),
            });
        }
        match r.text {
            Some(text) if !text.trim().is_empty() => kept.push((id, text, r.record)),
            _ => skipped += 1,
        }
    }
    let samples = kept
        .into_par_iter()
        .map(|(id, text, record)| Sample {
            tokens: tokenize(&text, &language),
            id,
            text,
            record,
        })
        .collect();
    Ok(DatasetHandle {
        dataset_id: dataset_id.to_string(),
        language,
        source_path,
        text_spec,
        sample_seed: None,
        skipped,
        samples,
    })
}

/// Owned text of a scalar-or-structured JSON value; `None` for null.
fn value_to_owned(v: &Value) -> Option<String> {
    match v {
        Value::Null => None,
        Value::String(s) => Some(s.clone()),
        other => Some(other.to_string()),
    }
}

fn read_jsonl(bytes: &[u8], opts: &LoadOptions) -> Result<Vec<RawRecord>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::MalformedRecord {
        line: line_of_offset(bytes, e.valid_up_to()),
        message: "invalid UTF-8".into(),
    })?;
    let mut out = Vec::new();
    for (i, line) in text.split('\n').enumerate() {
        let line_no = i as u64 + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
            line: line_no,
            message: e.to_string(),
        })?;
        let obj = value.as_object().ok_or_else(|| Error::MalformedRecord {
            line: line_no,
            message: "record is not a JSON object".into(),
        })?;
        let owned: Vec<(&str, Option<String>)> = opts
            .text_spec
            .fields()
            .into_iter()
            .map(|f| (f, obj.get(f).and_then(value_to_owned)))
            .collect();
        let text = opts.text_spec.extract(|k| {
            owned
                .iter()
                .find(|(f, _)| *f == k)
                .and_then(|(_, v)| v.as_deref())
        });
        let id = match &opts.id_field {
            None => None,
            Some(f) => Some(record_id(obj.get(f), f, line_no)?),
        };
        out.push(RawRecord {
            line: line_no,
            id,
            text,
            record: line.to_string(),
        });
    }
    Ok(out)
}

fn record_id(v: Option<&Value>, field: &str, line: u64) -> Result<String> {
    match v {
        Some(Value::String(s)) if !s.is_empty() => Ok(s.clone()),
        Some(Value::Number(n)) => Ok(n.to_string()),
        _ => Err(Error::MalformedRecord {
            line,
            message: format!("id field `{field}` missing or not a string/number"),
        }),
    }
}

fn read_csv(bytes: &[u8], opts: &LoadOptions) -> Result<Vec<RawRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| csv_error(&e, 1))?
        .iter()
        .map(str::to_string)
        .collect::<Vec<_>>();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let id_col = match &opts.id_field {
        None => None,
        Some(f) => Some(column(f).ok_or_else(|| Error::MalformedRecord {
            line: 1,
            message: format!("id column `{f}` not in header"),
        })?),
    };
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let ordinal = i as u64 + 1;
        let row = row.map_err(|e| csv_error(&e, ordinal + 1))?;
        let text = opts
            .text_spec
            .extract(|k| column(k).and_then(|c| row.get(c)));
        let id = match id_col {
            None => None,
            Some(c) => {
                let v = row.get(c).unwrap_or("");
                if v.is_empty() {
                    return Err(Error::MalformedRecord {
                        line: row.position().map_or(ordinal + 1, |p| p.line()),
                        message: "empty id".into(),
                    });
                }
                Some(v.to_string())
            }
        };
        let mut record = serde_json::Map::new();
        for (h, v) in headers.iter().zip(row.iter()) {
            record.insert(h.clone(), Value::String(v.to_string()));
        }
        out.push(RawRecord {
            line: ordinal,
            id,
            text,
            record: ordered_object(&headers, &record),
        });
    }
    Ok(out)
}

/// Serializes a CSV row as a JSON object in header order.
fn ordered_object(headers: &[String], map: &serde_json::Map<String, Value>) -> String {
    let mut s = String::from("{");
    let mut first = true;
    let mut written = HashSet::new();
    for h in headers {
        if !written.insert(h.as_str()) {
            continue;
        }
        if !first {
            s.push(',');
        }
        first = false;
        s.push_str(&Value::String(h.clone()).to_string());
        s.push(':');
        s.push_str(&map[h].to_string());
    }
    s.push('}');
    s
}

fn csv_error(e: &csv::Error, fallback_line: u64) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line());
    Error::MalformedRecord {
        line,
        message: e.to_string(),
    }
}

fn read_txt(bytes: &[u8]) -> Result<Vec<RawRecord>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::MalformedRecord {
        line: line_of_offset(bytes, e.valid_up_to()),
        message: "invalid UTF-8".into(),
    })?;
    let body = text.strip_suffix('\n').unwrap_or(text);
    if body.is_empty() {
        return Ok(Vec::new());
    }
    Ok(body
        .split('\n')
        .enumerate()
        .map(|(i, line)| {
            let line = line.strip_suffix('\r').unwrap_or(line);
            RawRecord {
                line: i as u64 + 1,
                id: None,
                text: Some(line.to_string()),
                record: serde_json::json!({ "text": line }).to_string(),
            }
        })
        .collect())
}

fn line_of_offset(bytes: &[u8], offset: usize) -> u64 {
    bytes[..offset].iter().filter(|&&b| b == b'\n').count() as u64 + 1
}

/// Draws `n` samples without replacement, keeping original order.
///
/// Uses [`select_positions`] over a [`SplitMix64`] stream seeded with `seed`.
/// Datasets with at most `n` samples are returned unchanged.
pub fn sample_n(handle: &DatasetHandle, n: usize, seed: u64) -> Result<DatasetHandle> {
    if n == 0 {
        return Err(Error::Config("sample size must be at least 1".into()));
    }
    let mut out = handle.clone();
    out.sample_seed = Some(seed);
    if handle.len() <= n {
        return Ok(out);
    }
    let mut rng = SplitMix64::new(seed);
    let picked = select_positions(handle.len(), n, &mut rng);
    out.samples = picked
        .into_iter()
        .map(|p| handle.samples[p].clone())
        .collect();
    Ok(out)
}
