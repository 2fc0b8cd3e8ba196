//! Micro-averaged scores and comparison reports.

mod compare;
mod metrics;
mod report;

pub use compare::{compare, evaluate, BaselinePredictor, NeuralPredictor, OraclePredictor, Predictor};
pub use metrics::{exact_match_accuracy, micro_prf, round4, MetricReport};
pub use report::{config_hash, Report, ReportRecord, Row, Section, MODEL_ORDER};
