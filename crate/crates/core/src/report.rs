//! Markdown summary tables over fitted PCA models and correlation heatmaps.

use std::fmt::Write as _;

use crate::analysis::Heatmap;
use crate::error::{Error, Result};
use crate::pca::PcaModel;
use crate::profile::Category;

/// Components shown per language, whether or not the model has them.
pub const REPORT_COMPONENTS: usize = 3;

fn num(x: f64, places: usize) -> String {
    let s = format!("{x:.places$}");
    match s.strip_prefix('-') {
        Some(rest) if rest.chars().all(|c| c == '0' || c == '.') => rest.to_string(),
        _ => s,
    }
}

fn cell(v: Option<f64>, places: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| num(x, places))
}

fn pc_header(first: &[&str]) -> (String, String) {
    let mut head = format!("| {} |", first.join(" | "));
    let mut rule = format!("|{}", "---|".repeat(first.len()));
    for pc in 1..=REPORT_COMPONENTS {
        write!(head, " PC{pc} |").unwrap();
        rule.push_str("---:|");
    }
    (head, rule)
}

/// Renders the report. Models are listed in language order; the heatmap is
/// optional.
pub fn render(models: &[PcaModel], heatmap: Option<&Heatmap>) -> Result<String> {
    if models.is_empty() {
        return Err(Error::Config("report needs at least one pca model".into()));
    }
    let mut models: Vec<&PcaModel> = models.iter().collect();
    models.sort_by(|a, b| a.language.as_str().cmp(b.language.as_str()));
    if let Some(w) = models.windows(2).find(|w| w[0].language == w[1].language) {
        return Err(Error::Config(format!(
            "two pca models for language `{}`",
            w[0].language
        )));
    }
    if let Some(h) = heatmap {
        if !models
            .iter()
            .any(|m| m.config_fingerprint == h.config_fingerprint)
        {
            return Err(Error::Schema(format!(
                "heatmap fingerprint {} matches no pca model",
                h.config_fingerprint
            )));
        }
    }

    let mut out = String::from("# Corpus profile report\n\n");

    out.push_str("## Explained variance ratio\n\n");
    let (head, rule) = pc_header(&["Language", "Datasets"]);
    writeln!(out, "{head}\n{rule}").unwrap();
    for m in &models {
        write!(out, "| {} | {} |", m.language, m.dataset_scores.len()).unwrap();
        for k in 0..REPORT_COMPONENTS {
            write!(
                out,
                " {} |",
                cell(m.explained_variance_ratio.get(k).copied(), 4)
            )
            .unwrap();
        }
        out.push('\n');
    }

    for m in &models {
        writeln!(out, "\n## Loadings ({})\n", m.language).unwrap();
        let (head, rule) = pc_header(&["Metric"]);
        writeln!(out, "{head}\n{rule}").unwrap();
        for (j, metric) in m.metric_order.iter().enumerate() {
            write!(out, "| {metric} |").unwrap();
            for k in 0..REPORT_COMPONENTS {
                write!(out, " {} |", cell(m.loadings.get(k).map(|row| row[j]), 4)).unwrap();
            }
            out.push('\n');
        }
    }

    for m in &models {
        writeln!(out, "\n## Category contributions ({})\n", m.language).unwrap();
        out.push_str("| Component |");
        for c in Category::ALL {
            write!(out, " {} |", c.name()).unwrap();
        }
        out.push_str("\n|---|");
        out.push_str(&"---:|".repeat(Category::ALL.len()));
        out.push('\n');
        for k in 0..REPORT_COMPONENTS {
            write!(out, "| PC{} |", k + 1).unwrap();
            for c in Category::ALL {
                let v = m.category_contributions.get(k).map(|row| row.get(c));
                write!(out, " {} |", cell(v, 4)).unwrap();
            }
            out.push('\n');
        }
    }

    for m in &models {
        writeln!(out, "\n## Normalized dataset scores ({})\n", m.language).unwrap();
        let (head, rule) = pc_header(&["Dataset"]);
        writeln!(out, "{head}\n{rule}").unwrap();
        for (id, scores) in m.normalized_scores() {
            write!(out, "| {id} |").unwrap();
            for k in 0..REPORT_COMPONENTS {
                write!(out, " {} |", cell(scores.get(k).copied(), 4)).unwrap();
            }
            out.push('\n');
        }
    }

    if let Some(h) = heatmap {
        out.push_str("\n## Correlation heatmap (Pearson r)\n\n");
        let (head, rule) = pc_header(&["Benchmark", "Model", "Category"]);
        writeln!(out, "{head}\n{rule}").unwrap();
        for row in &h.rows {
            write!(
                out,
                "| {} | {} | {} |",
                row.benchmark,
                row.model,
                row.category.as_deref().unwrap_or("")
            )
            .unwrap();
            for k in 0..REPORT_COMPONENTS {
                write!(out, " {} |", cell(row.values.get(k).copied().flatten(), 3)).unwrap();
            }
            out.push('\n');
        }
    }
    Ok(out)
}
