//! JSON Schemas for every JSON artifact the pipeline writes.

use serde_json::{json, Value};

use crate::profile::{Metric, SCHEMA_VERSION};

pub const NAMES: [&str; 5] = [
    "profile",
    "pca",
    "subset_manifest",
    "heatmap",
    "run_manifest",
];

fn nullable_number() -> Value {
    json!({ "type": ["number", "null"] })
}

fn metric_object() -> Value {
    let props: serde_json::Map<String, Value> = Metric::ALL
        .iter()
        .map(|m| (m.name().to_string(), nullable_number()))
        .collect();
    json!({
        "type": "object",
        "properties": props,
        "required": Metric::names(),
        "additionalProperties": false
    })
}

fn version() -> Value {
    json!({ "const": SCHEMA_VERSION })
}

fn fingerprint() -> Value {
    json!({ "type": "string", "pattern": "^[0-9a-f]{16}$" })
}

fn number_array() -> Value {
    json!({ "type": "array", "items": { "type": "number" } })
}

pub fn profile() -> Value {
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "DatasetProfile",
        "type": "object",
        "properties": {
            "schema_version": version(),
            "dataset_id": { "type": "string" },
            "language": { "type": "string", "minLength": 1 },
            "n_samples": { "type": "integer", "minimum": 0 },
            "sample_seed": { "type": ["integer", "null"], "minimum": 0 },
            "config_fingerprint": fingerprint(),
            "metrics": metric_object(),
            "per_sample": {
                "type": "object",
                "properties": {
                    "feature_set": { "type": "string" },
                    "ids": { "type": "array", "items": { "type": "string" } },
                    "columns": { "const": Metric::names() },
                    "rows": {
                        "type": "array",
                        "items": {
                            "type": "array",
                            "items": nullable_number(),
                            "minItems": 10,
                            "maxItems": 10
                        }
                    }
                },
                "required": ["feature_set", "ids", "columns", "rows"],
                "additionalProperties": false
            }
        },
        "required": [
            "schema_version", "dataset_id", "language", "n_samples",
            "sample_seed", "config_fingerprint", "metrics"
        ],
        "additionalProperties": false
    })
}

pub fn pca() -> Value {
    let contribution = json!({
        "type": "object",
        "properties": {
            "diversity": { "type": "number" },
            "lexical": { "type": "number" },
            "semantic": { "type": "number" },
            "clustering": { "type": "number" }
        },
        "required": ["diversity", "lexical", "semantic", "clustering"],
        "additionalProperties": false
    });
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "PcaModel",
        "type": "object",
        "properties": {
            "schema_version": version(),
            "language": { "type": "string", "minLength": 1 },
            "config_fingerprint": fingerprint(),
            "metric_order": { "const": Metric::names() },
            "scaler": {
                "type": "object",
                "properties": {
                    "means": number_array(),
                    "stds": number_array(),
                    "constant_flags": { "type": "array", "items": { "type": "boolean" } }
                },
                "required": ["means", "stds", "constant_flags"],
                "additionalProperties": false
            },
            "loadings": { "type": "array", "items": number_array(), "maxItems": 10 },
            "explained_variance_ratio": number_array(),
            "dataset_scores": { "type": "object", "additionalProperties": number_array() },
            "category_contributions": { "type": "array", "items": contribution }
        },
        "required": [
            "schema_version", "language", "config_fingerprint", "metric_order", "scaler",
            "loadings", "explained_variance_ratio", "dataset_scores", "category_contributions"
        ],
        "additionalProperties": false
    })
}

pub fn subset_manifest() -> Value {
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "SubsetManifest",
        "type": "object",
        "properties": {
            "schema_version": version(),
            "config_fingerprint": fingerprint(),
            "dataset_id": { "type": "string" },
            "pc": { "type": "integer", "minimum": 1 },
            "mode": { "enum": ["high", "low", "random"] },
            "ranking": { "enum": ["proxy_metric", "pc_projection"] },
            "proxy_metric": { "enum": Metric::names() },
            "size": { "type": "integer", "minimum": 1 },
            "seed": { "type": "integer", "minimum": 0 },
            "score_stats": {
                "type": "object",
                "properties": {
                    "min": nullable_number(),
                    "max": nullable_number(),
                    "mean": nullable_number()
                },
                "required": ["min", "max", "mean"],
                "additionalProperties": false
            }
        },
        "required": [
            "schema_version", "config_fingerprint", "dataset_id", "pc", "mode",
            "ranking", "size", "seed", "score_stats"
        ],
        "additionalProperties": false
    })
}

pub fn heatmap() -> Value {
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "CorrelationHeatmap",
        "type": "object",
        "properties": {
            "schema_version": version(),
            "config_fingerprint": fingerprint(),
            "columns": { "type": "array", "items": { "type": "string" } },
            "rows": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "benchmark": { "type": "string" },
                        "model": { "type": "string" },
                        "category": { "type": ["string", "null"] },
                        "values": {
                            "type": "array",
                            "items": { "type": ["number", "null"], "minimum": -1, "maximum": 1 }
                        }
                    },
                    "required": ["benchmark", "model", "values"],
                    "additionalProperties": false
                }
            }
        },
        "required": ["schema_version", "config_fingerprint", "columns", "rows"],
        "additionalProperties": false
    })
}

pub fn run_manifest() -> Value {
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "RunManifest",
        "type": "object",
        "properties": {
            "schema_version": version(),
            "tool": { "type": "string" },
            "version": { "type": "string" },
            "command": { "type": "string" },
            "seed": { "type": "integer", "minimum": 0 },
            "config_fingerprint": { "type": ["string", "null"] },
            "config": { "type": "object" },
            "inputs": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "path": { "type": "string" },
                        "sha256": { "type": "string", "pattern": "^[0-9a-f]{64}$" }
                    },
                    "required": ["path", "sha256"],
                    "additionalProperties": false
                }
            },
            "outputs": { "type": "array", "items": { "type": "string" } },
            "warnings": { "type": "array", "items": { "type": "string" } }
        },
        "required": [
            "schema_version", "tool", "version", "command", "seed",
            "config_fingerprint", "config", "inputs", "outputs", "warnings"
        ],
        "additionalProperties": false
    })
}

pub fn by_name(name: &str) -> Option<Value> {
    match name {
        "profile" => Some(profile()),
        "pca" => Some(pca()),
        "subset_manifest" => Some(subset_manifest()),
        "heatmap" => Some(heatmap()),
        "run_manifest" => Some(run_manifest()),
        _ => None,
    }
}
