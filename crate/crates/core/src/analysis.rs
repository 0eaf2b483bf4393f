//! Correlating PC coordinates with external benchmark scores, and subset
//! performance deltas.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pca::PcaModel;
use crate::profile::SCHEMA_VERSION;
use crate::selection::SubsetMode;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub dataset_id: String,
    pub benchmark: String,
    pub model: String,
    pub score: f64,
    pub category: Option<String>,
    pub pc: Option<usize>,
    pub mode: Option<SubsetMode>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    pub rows: Vec<ScoreRow>,
}

const REQUIRED: [&str; 4] = ["dataset_id", "benchmark", "model", "score"];
const OPTIONAL: [&str; 3] = ["category", "pc", "mode"];

fn parse_pc(s: &str) -> Option<usize> {
    let digits = s
        .strip_prefix("PC")
        .or_else(|| s.strip_prefix("pc"))
        .unwrap_or(s);
    digits.parse().ok().filter(|&pc| pc >= 1)
}

impl ScoreTable {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&bytes)
    }

    /// Parses `dataset_id,benchmark,model,score[,category][,pc][,mode]`.
    /// Columns are matched by header name.
    pub fn parse_csv(bytes: &[u8]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(bytes);
        let headers = reader.headers().map_err(|e| Error::MalformedRecord {
            line: 1,
            message: e.to_string(),
        })?;
        let mut index: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, h) in headers.iter().enumerate() {
            let name = REQUIRED
                .iter()
                .chain(&OPTIONAL)
                .find(|n| **n == h)
                .ok_or_else(|| Error::MalformedRecord {
                    line: 1,
                    message: format!("unknown column `{h}`"),
                })?;
            if index.insert(name, i).is_some() {
                return Err(Error::MalformedRecord {
                    line: 1,
                    message: format!("duplicate column `{h}`"),
                });
            }
        }
        if let Some(missing) = REQUIRED.iter().find(|n| !index.contains_key(*n)) {
            return Err(Error::MalformedRecord {
                line: 1,
                message: format!("missing column `{missing}`"),
            });
        }

        let mut rows = Vec::new();
        let mut seen = BTreeSet::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::MalformedRecord {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let bad = |message: String| Error::MalformedRecord { line, message };
            let cell = |name: &str| -> Option<&str> {
                index
                    .get(name)
                    .and_then(|&i| record.get(i))
                    .filter(|s| !s.is_empty())
            };
            let text = |name: &str| -> Result<String> {
                cell(name)
                    .map(str::to_string)
                    .ok_or_else(|| bad(format!("empty `{name}`")))
            };
            let score_text = text("score")?;
            let score: f64 = score_text
                .parse()
                .map_err(|_| bad(format!("score `{score_text}` is not a number")))?;
            if !score.is_finite() {
                return Err(bad(format!("score `{score_text}` is not finite")));
            }
            let pc = match cell("pc") {
                None => None,
                Some(s) => Some(parse_pc(s).ok_or_else(|| bad(format!("bad pc `{s}`")))?),
            };
            let mode = match cell("mode") {
                None => None,
                Some(s) => Some(s.parse().map_err(|_| bad(format!("bad mode `{s}`")))?),
            };
            let row = ScoreRow {
                dataset_id: text("dataset_id")?,
                benchmark: text("benchmark")?,
                model: text("model")?,
                score,
                category: cell("category").map(str::to_string),
                pc,
                mode,
            };
            let key = (
                row.dataset_id.clone(),
                row.benchmark.clone(),
                row.model.clone(),
                row.pc,
                row.mode,
            );
            if !seen.insert(key) {
                return Err(bad(format!(
                    "duplicate score for ({}, {}, {})",
                    row.dataset_id, row.benchmark, row.model
                )));
            }
            rows.push(row);
        }
        Ok(Self { rows })
    }
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Internal(format!(
            "pearson on unequal lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::undefined("pearson", format!("n = {n} < 3")));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::undefined("pearson", "constant input"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub benchmark: String,
    pub model: String,
    pub pc: usize,
    pub r: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTable {
    pub config_fingerprint: String,
    pub n_components: usize,
    pub entries: Vec<CorrelationEntry>,
    /// Category label per benchmark, when the score table carries one.
    pub categories: BTreeMap<String, String>,
    pub warnings: Vec<String>,
}

/// Component scores of one dataset and its benchmark score.
type ScoredDataset<'a> = (&'a [f64], f64);

pub fn correlate(model: &PcaModel, scores: &ScoreTable) -> Result<CorrelationTable> {
    if let Some(row) = scores
        .rows
        .iter()
        .find(|r| r.pc.is_some() || r.mode.is_some())
    {
        return Err(Error::Analysis(format!(
            "score row for `{}` has pc/mode columns; subset scores go to `deltas`",
            row.dataset_id
        )));
    }
    let mut warnings = Vec::new();
    let score_ids: BTreeSet<&str> = scores.rows.iter().map(|r| r.dataset_id.as_str()).collect();
    let pca_ids: BTreeSet<&str> = model.dataset_scores.keys().map(String::as_str).collect();
    if score_ids.is_disjoint(&pca_ids) {
        let unmatched: Vec<&str> = score_ids.iter().copied().collect();
        return Err(Error::Analysis(format!(
            "no dataset in the score table is in the pca model; unmatched ids: {}",
            unmatched.join(", ")
        )));
    }
    let unmatched: Vec<&str> = score_ids.difference(&pca_ids).copied().collect();
    if !unmatched.is_empty() {
        warnings.push(format!(
            "scores for datasets outside the pca model ignored: {}",
            unmatched.join(", ")
        ));
    }

    let mut categories = BTreeMap::new();
    let mut groups: BTreeMap<(&str, &str), Vec<ScoredDataset>> = BTreeMap::new();
    for row in &scores.rows {
        if let Some(c) = &row.category {
            if let Some(prev) = categories.insert(row.benchmark.clone(), c.clone()) {
                if &prev != c {
                    return Err(Error::Analysis(format!(
                        "benchmark `{}` has categories `{prev}` and `{c}`",
                        row.benchmark
                    )));
                }
            }
        }
        if let Some(coords) = model.dataset_scores.get(&row.dataset_id) {
            groups
                .entry((row.benchmark.as_str(), row.model.as_str()))
                .or_default()
                .push((coords.as_slice(), row.score));
        }
    }

    let n_components = model.n_components();
    let mut entries = Vec::new();
    for ((benchmark, model_name), points) in &groups {
        let y: Vec<f64> = points.iter().map(|p| p.1).collect();
        for pc in 1..=n_components {
            let x: Vec<f64> = points.iter().map(|p| p.0[pc - 1]).collect();
            match pearson(&x, &y) {
                Ok(r) => entries.push(CorrelationEntry {
                    benchmark: benchmark.to_string(),
                    model: model_name.to_string(),
                    pc,
                    r,
                    n: points.len(),
                }),
                Err(Error::UndefinedMetric { reason, .. }) => warnings.push(format!(
                    "correlation {benchmark}/{model_name}/PC{pc} omitted: {reason}"
                )),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(CorrelationTable {
        config_fingerprint: model.config_fingerprint.clone(),
        n_components,
        entries,
        categories,
        warnings,
    })
}

impl CorrelationTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("benchmark,model,pc,r,n\n");
        for e in &self.entries {
            writeln!(
                out,
                "{},{},{},{},{}",
                csv_field(&e.benchmark),
                csv_field(&e.model),
                e.pc,
                e.r,
                e.n
            )
            .unwrap();
        }
        out
    }

    pub fn heatmap(&self) -> Heatmap {
        let mut rows: BTreeMap<(String, String), Vec<Option<f64>>> = BTreeMap::new();
        for e in &self.entries {
            rows.entry((e.benchmark.clone(), e.model.clone()))
                .or_insert_with(|| vec![None; self.n_components])[e.pc - 1] = Some(e.r);
        }
        Heatmap {
            schema_version: SCHEMA_VERSION,
            config_fingerprint: self.config_fingerprint.clone(),
            columns: (1..=self.n_components)
                .map(|pc| format!("PC{pc}"))
                .collect(),
            rows: rows
                .into_iter()
                .map(|((benchmark, model), values)| HeatmapRow {
                    category: self.categories.get(&benchmark).cloned(),
                    benchmark,
                    model,
                    values,
                })
                .collect(),
        }
    }
}

/// Correlations shaped as benchmark×model rows and one column per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Heatmap {
    pub schema_version: u32,
    pub config_fingerprint: String,
    pub columns: Vec<String>,
    pub rows: Vec<HeatmapRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatmapRow {
    pub benchmark: String,
    pub model: String,
    #[serde(default)]
    pub category: Option<String>,
    pub values: Vec<Option<f64>>,
}

impl Heatmap {
    pub fn from_json(text: &str) -> Result<Self> {
        let h: Heatmap =
            serde_json::from_str(text).map_err(|e| Error::Schema(format!("heatmap json: {e}")))?;
        if h.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "heatmap schema_version {} (expected {SCHEMA_VERSION})",
                h.schema_version
            )));
        }
        for row in &h.rows {
            if row.values.len() != h.columns.len() {
                return Err(Error::Schema(format!(
                    "heatmap row {}/{} has {} values for {} columns",
                    row.benchmark,
                    row.model,
                    row.values.len(),
                    h.columns.len()
                )));
            }
            if row
                .values
                .iter()
                .flatten()
                .any(|r| !(-1.0..=1.0).contains(r))
            {
                return Err(Error::Schema(format!(
                    "heatmap row {}/{} has a value outside [-1, 1]",
                    row.benchmark, row.model
                )));
            }
        }
        Ok(h)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("heatmap serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("benchmark,model,category");
        for c in &self.columns {
            write!(out, ",{c}").unwrap();
        }
        out.push('\n');
        for row in &self.rows {
            write!(
                out,
                "{},{},{}",
                csv_field(&row.benchmark),
                csv_field(&row.model),
                csv_field(row.category.as_deref().unwrap_or(""))
            )
            .unwrap();
            for v in &row.values {
                match v {
                    Some(r) => write!(out, ",{r}").unwrap(),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Self-contained SVG with a blue-white-red scale over [-1, 1].
    pub fn to_svg(&self) -> String {
        const CELL_W: usize = 64;
        const CELL_H: usize = 24;
        const LABEL_W: usize = 240;
        const HEAD_H: usize = 28;
        let width = LABEL_W + CELL_W * self.columns.len() + 8;
        let height = HEAD_H + CELL_H * self.rows.len() + 8;
        let mut s = String::new();
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
        )
        .unwrap();
        for (j, c) in self.columns.iter().enumerate() {
            let x = LABEL_W + j * CELL_W + CELL_W / 2;
            writeln!(
                s,
                r#"<text x="{x}" y="18" text-anchor="middle">{}</text>"#,
                xml_escape(c)
            )
            .unwrap();
        }
        for (i, row) in self.rows.iter().enumerate() {
            let y = HEAD_H + i * CELL_H;
            writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="end">{} / {}</text>"#,
                LABEL_W - 6,
                y + 16,
                xml_escape(&row.benchmark),
                xml_escape(&row.model)
            )
            .unwrap();
            for (j, v) in row.values.iter().enumerate() {
                let x = LABEL_W + j * CELL_W;
                let (fill, label) = match v {
                    Some(r) => (diverging_color(*r), format!("{r:.2}")),
                    None => ("#dddddd".to_string(), "n/a".to_string()),
                };
                writeln!(
                    s,
                    r##"<rect x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="{fill}" stroke="#ffffff"/>"##
                )
                .unwrap();
                writeln!(
                    s,
                    r#"<text x="{}" y="{}" text-anchor="middle">{label}</text>"#,
                    x + CELL_W / 2,
                    y + 16
                )
                .unwrap();
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

fn diverging_color(r: f64) -> String {
    const NEG: [f64; 3] = [59.0, 76.0, 192.0];
    const POS: [f64; 3] = [180.0, 4.0, 38.0];
    let t = r.clamp(-1.0, 1.0);
    let end = if t < 0.0 { NEG } else { POS };
    let a = t.abs();
    let c: Vec<u8> = end
        .iter()
        .map(|e| (255.0 + (e - 255.0) * a).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaEntry {
    pub model: String,
    pub pc: usize,
    pub mode: SubsetMode,
    pub mean_delta: f64,
    pub n_groups: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaTable {
    pub entries: Vec<DeltaEntry>,
    pub warnings: Vec<String>,
}

/// Mean of `score(mode) - score(random)` over every (dataset, benchmark)
/// group, per (model, pc, mode).
pub fn subset_delta(scores: &ScoreTable) -> Result<DeltaTable> {
    type Group<'a> = (&'a str, &'a str, &'a str, usize);
    let mut groups: BTreeMap<Group, BTreeMap<SubsetMode, f64>> = BTreeMap::new();
    for row in &scores.rows {
        let (Some(pc), Some(mode)) = (row.pc, row.mode) else {
            return Err(Error::Analysis(format!(
                "score row for ({}, {}, {}) lacks pc or mode",
                row.dataset_id, row.benchmark, row.model
            )));
        };
        groups
            .entry((&row.model, &row.dataset_id, &row.benchmark, pc))
            .or_default()
            .insert(mode, row.score);
    }
    let mut warnings = Vec::new();
    let mut sums: BTreeMap<(&str, usize, SubsetMode), (f64, usize)> = BTreeMap::new();
    for ((model, dataset, benchmark, pc), by_mode) in &groups {
        let Some(&baseline) = by_mode.get(&SubsetMode::Random) else {
            warnings.push(format!(
                "group ({dataset}, {benchmark}, {model}, PC{pc}) has no random baseline; skipped"
            ));
            continue;
        };
        for (&mode, &score) in by_mode {
            if mode == SubsetMode::Random {
                continue;
            }
            let slot = sums.entry((model, *pc, mode)).or_insert((0.0, 0));
            slot.0 += score - baseline;
            slot.1 += 1;
        }
    }
    let entries = sums
        .into_iter()
        .map(|((model, pc, mode), (sum, n))| DeltaEntry {
            model: model.to_string(),
            pc,
            mode,
            mean_delta: sum / n as f64,
            n_groups: n,
        })
        .collect();
    Ok(DeltaTable { entries, warnings })
}

impl DeltaTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,pc,mode,mean_delta,n_groups\n");
        for e in &self.entries {
            writeln!(
                out,
                "{},{},{},{},{}",
                csv_field(&e.model),
                e.pc,
                e.mode,
                e.mean_delta,
                e.n_groups
            )
            .unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_closed_forms() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(pearson(&x, &x).unwrap(), 1.0);
        assert_eq!(pearson(&x, &neg).unwrap(), -1.0);
        assert!((pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pearson_undefined_cases() {
        assert!(matches!(
            pearson(&[1.0, 2.0], &[2.0, 1.0]),
            Err(Error::UndefinedMetric { .. })
        ));
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::UndefinedMetric { .. })
        ));
    }

    #[test]
    fn parses_scores_in_any_column_order() {
        let csv =
            "model,score,benchmark,dataset_id,mode,pc\nm,0.5,b,d,high,PC2\nm,0.25,b,d,random,2\n";
        let t = ScoreTable::parse_csv(csv.as_bytes()).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0].pc, Some(2));
        assert_eq!(t.rows[0].mode, Some(SubsetMode::High));
        assert_eq!(t.rows[1].score, 0.25);
    }

    #[test]
    fn rejects_bad_scores() {
        for csv in [
            "dataset_id,benchmark,model\nd,b,m\n",
            "dataset_id,benchmark,model,score\nd,b,m,x\n",
            "dataset_id,benchmark,model,score\nd,b,m,NaN\n",
            "dataset_id,benchmark,model,score\nd,b,m,1\nd,b,m,2\n",
            "dataset_id,benchmark,model,score,extra\nd,b,m,1,2\n",
        ] {
            assert!(ScoreTable::parse_csv(csv.as_bytes()).is_err(), "{csv}");
        }
    }

    fn table(rows: &[(&str, &str, &str, f64, usize, SubsetMode)]) -> ScoreTable {
        ScoreTable {
            rows: rows
                .iter()
                .map(|&(d, b, m, score, pc, mode)| ScoreRow {
                    dataset_id: d.into(),
                    benchmark: b.into(),
                    model: m.into(),
                    score,
                    category: None,
                    pc: Some(pc),
                    mode: Some(mode),
                })
                .collect(),
        }
    }

    #[test]
    fn single_group_delta() {
        let t = table(&[
            ("d", "b", "m", 0.7, 1, SubsetMode::High),
            ("d", "b", "m", 0.6, 1, SubsetMode::Random),
        ]);
        let out = subset_delta(&t).unwrap();
        assert_eq!(out.entries.len(), 1);
        assert!((out.entries[0].mean_delta - 0.1).abs() < 1e-12);
    }

    #[test]
    fn mean_over_groups_and_missing_baseline() {
        let t = table(&[
            ("d1", "b", "m", 0.7, 1, SubsetMode::High),
            ("d1", "b", "m", 0.6, 1, SubsetMode::Random),
            ("d2", "b", "m", 0.2, 1, SubsetMode::High),
            ("d2", "b", "m", 0.5, 1, SubsetMode::Random),
            ("d3", "b", "m", 0.9, 1, SubsetMode::High),
        ]);
        let out = subset_delta(&t).unwrap();
        assert_eq!(out.entries[0].n_groups, 2);
        assert!((out.entries[0].mean_delta + 0.1).abs() < 1e-12);
        assert_eq!(out.warnings.len(), 1);
        assert_eq!(
            out.to_csv().lines().next(),
            Some("model,pc,mode,mean_delta,n_groups")
        );
    }

    #[test]
    fn parity_gives_exact_zero() {
        let t = table(&[
            ("d", "b", "m", 0.123, 2, SubsetMode::Low),
            ("d", "b", "m", 0.123, 2, SubsetMode::Random),
        ]);
        assert_eq!(subset_delta(&t).unwrap().entries[0].mean_delta, 0.0);
    }

    #[test]
    fn color_scale_endpoints() {
        assert_eq!(diverging_color(0.0), "#ffffff");
        assert_eq!(diverging_color(1.0), "#b40426");
        assert_eq!(diverging_color(-1.0), "#3b4cc0");
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
    }
}
