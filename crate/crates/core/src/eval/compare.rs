use super::metrics::{micro_prf, MetricReport};
use super::report::{Report, Section};
use crate::baselines::Baseline;
use crate::data::{Record, SpanOracle, Vocabs};
use crate::error::Result;
use crate::model::Model;

/// Anything that maps a record to a predicted label sequence.
pub trait Predictor {
    fn predict(&self, record: &Record) -> Result<Vec<String>>;
}

/// A trained neural model with the vocabularies it was built on.
pub struct NeuralPredictor<'a> {
    pub model: &'a Model,
    pub vocabs: &'a Vocabs,
}

impl Predictor for NeuralPredictor<'_> {
    fn predict(&self, record: &Record) -> Result<Vec<String>> {
        let ex = self.vocabs.encode(record);
        let d = ex.select(&self.model.config().resources);
        if d.iter().all(|x| x.is_empty()) {
            log::debug!("`{}` has no text in the selected resources", record.word);
            return Ok(Vec::new());
        }
        let ids = self.model.predict_ids(&d)?;
        Ok(self.vocabs.label_names(&ids))
    }
}

pub struct BaselinePredictor<'a> {
    pub baseline: &'a Baseline,
    pub vocabs: &'a Vocabs,
}

impl Predictor for BaselinePredictor<'_> {
    fn predict(&self, record: &Record) -> Result<Vec<String>> {
        let ids = self.baseline.predict(&self.vocabs.encode(record));
        Ok(self.vocabs.label_names(&ids))
    }
}

/// Reads label spans straight off synthetic descriptions.
pub struct OraclePredictor<'a> {
    pub oracle: &'a SpanOracle,
    pub resources: Vec<usize>,
}

impl Predictor for OraclePredictor<'_> {
    fn predict(&self, record: &Record) -> Result<Vec<String>> {
        Ok(self.oracle.predict(record, &self.resources))
    }
}

/// Scores one predictor on `records`.
pub fn evaluate(predictor: &dyn Predictor, records: &[Record]) -> Result<MetricReport> {
    let mut preds = Vec::with_capacity(records.len());
    for r in records {
        preds.push(predictor.predict(r)?);
    }
    let golds: Vec<Vec<String>> = records.iter().map(|r| r.labels.clone()).collect();
    micro_prf(&preds, &golds)
}

/// Runs every entry on the same records. A failing entry becomes a failed
/// row and the run continues.
pub fn compare(
    entries: &[(String, Section, &dyn Predictor)],
    records: &[Record],
    split: &str,
    seed: u64,
    config_hash: &str,
) -> Report {
    let mut report = Report::new(split, seed, config_hash);
    for (name, section, predictor) in entries {
        let outcome = evaluate(*predictor, records).map_err(|e| {
            log::error!("{name} failed: {e}");
            e.to_string()
        });
        report.push(name.clone(), *section, outcome);
    }
    report
}
