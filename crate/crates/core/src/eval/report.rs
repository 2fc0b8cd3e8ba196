use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::metrics::MetricReport;
use crate::config::KvConfig;

/// Which table a row belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Section {
    /// Model comparison.
    Models,
    /// Resource ablation.
    Resources,
}

impl Section {
    pub fn title(self) -> &'static str {
        match self {
            Section::Models => "Comparison with baseline models",
            Section::Resources => "Results of using different resources",
        }
    }
}

/// Display order of the model comparison.
pub const MODEL_ORDER: [&str; 7] = [
    "ML-KNN",
    "LP",
    "BR",
    "CC",
    "RNN-MLLR",
    "Basic Seq2seq",
    "LD-Seq2seq",
];

fn rank(section: Section, model: &str) -> usize {
    match section {
        Section::Models => MODEL_ORDER.iter().position(|m| *m == model).unwrap_or(MODEL_ORDER.len()),
        Section::Resources => 0,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub model: String,
    pub section: Section,
    /// Scores, or the error that stopped the model.
    pub outcome: Result<MetricReport, String>,
}

/// One machine-readable report line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub model: String,
    pub section: Section,
    pub split: String,
    #[serde(rename = "P")]
    pub precision: Option<f64>,
    #[serde(rename = "R")]
    pub recall: Option<f64>,
    #[serde(rename = "F1")]
    pub f1: Option<f64>,
    pub accuracy: Option<f64>,
    pub seed: u64,
    pub config_hash: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub split: String,
    pub seed: u64,
    pub config_hash: String,
    pub rows: Vec<Row>,
}

/// First 16 hex digits of the SHA-256 of the rendered configuration.
pub fn config_hash(config: &KvConfig) -> String {
    let digest = Sha256::digest(config.to_text().as_bytes());
    digest.iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl Report {
    pub fn new(split: impl Into<String>, seed: u64, config_hash: impl Into<String>) -> Self {
        Report {
            split: split.into(),
            seed,
            config_hash: config_hash.into(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, model: impl Into<String>, section: Section, outcome: Result<MetricReport, String>) {
        self.rows.push(Row {
            model: model.into(),
            section,
            outcome,
        });
    }

    /// Rows in display order: comparison first in its fixed order, then the
    /// ablation in insertion order.
    pub fn ordered(&self) -> Vec<&Row> {
        let mut rows: Vec<&Row> = self.rows.iter().collect();
        rows.sort_by_key(|r| (r.section, rank(r.section, &r.model)));
        rows
    }

    pub fn get(&self, section: Section, model: &str) -> Option<&MetricReport> {
        self.rows
            .iter()
            .find(|r| r.section == section && r.model == model)
            .and_then(|r| r.outcome.as_ref().ok())
    }

    pub fn records(&self) -> Vec<ReportRecord> {
        self.ordered()
            .into_iter()
            .map(|r| {
                let m = r.outcome.as_ref().ok().map(MetricReport::rounded);
                ReportRecord {
                    model: r.model.clone(),
                    section: r.section,
                    split: self.split.clone(),
                    precision: m.map(|m| m.precision),
                    recall: m.map(|m| m.recall),
                    f1: m.map(|m| m.f1),
                    accuracy: m.map(|m| m.accuracy),
                    seed: self.seed,
                    config_hash: self.config_hash.clone(),
                    status: if m.is_some() { "ok" } else { "failed" }.into(),
                    error: r.outcome.as_ref().err().cloned(),
                }
            })
            .collect()
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        self.records()
            .iter()
            .map(|r| serde_json::to_string(r).expect("report records serialise") + "\n")
            .collect()
    }

    /// Aligned plain-text tables, one per section present.
    pub fn to_table(&self) -> String {
        let rows = self.ordered();
        let width = rows.iter().map(|r| r.model.len()).max().unwrap_or(5).max(5);
        let mut out = String::new();
        let mut current = None;
        for r in rows {
            if current != Some(r.section) {
                if current.is_some() {
                    out.push('\n');
                }
                current = Some(r.section);
                let _ = writeln!(out, "{} ({} split, seed {})", r.section.title(), self.split, self.seed);
                let _ = writeln!(
                    out,
                    "{:<width$}  {:>7}  {:>7}  {:>7}  {:>8}",
                    "Model", "P", "R", "F1", "Accuracy"
                );
            }
            match &r.outcome {
                Ok(m) => {
                    let _ = writeln!(
                        out,
                        "{:<width$}  {:>7.2}  {:>7.2}  {:>7.2}  {:>8.2}",
                        r.model,
                        100.0 * m.precision,
                        100.0 * m.recall,
                        100.0 * m.f1,
                        100.0 * m.accuracy
                    );
                }
                Err(e) => {
                    let _ = writeln!(out, "{:<width$}  failed: {e}", r.model);
                }
            }
        }
        out
    }
}
