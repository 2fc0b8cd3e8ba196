//! Sememe prediction from textual descriptions.
//!
//! The crate is organised bottom-up:
//!
//! * [`ndcore`]: dense tensors, a reverse-mode gradient tape, Adam, gradient
//!   checking and the checkpoint format.
//! * [`data`]: corpus records, vocabularies, splitting, the synthetic corpus
//!   generator and label-embedding pretraining.
//! * [`loss`]: the label-distributed soft target and sequence losses.
//! * [`model`]: the multi-resource BiGRU encoder, the attention decoder,
//!   greedy prediction, the logistic-regression head and the trainers.
//! * [`baselines`]: ML-KNN, binary relevance, label powerset and classifier
//!   chains over character n-gram features.
//! * [`eval`]: micro precision/recall/F1, exact-match accuracy and the
//!   comparison report.

pub mod baselines;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod loss;
pub mod model;
pub mod ndcore;

pub use error::{Error, Result};
