use std::fmt;
use std::str::FromStr;

use crate::config::KvConfig;
use crate::error::{Error, Result};
use crate::loss::LossMode;

#[derive(Clone, Debug, PartialEq)]
pub struct HyperParams {
    pub char_dim: usize,
    pub label_dim: usize,
    /// Decoder state size; the encoder runs `hidden / 2` units per direction
    /// so its concatenated states also have this size.
    pub hidden: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub max_labels: usize,
    pub lr: f64,
    pub seed: u64,
    /// Feed gold previous labels during training instead of the model's own
    /// argmax.
    pub teacher_forcing: bool,
    pub pretrain_labels: bool,
    /// Global gradient-norm bound applied before every update; 0 disables it.
    pub clip_norm: f64,
}

impl HyperParams {
    /// Full-size settings: 200-d embeddings, 300-d states, batches of 20, 10 epochs.
    pub fn paper() -> Self {
        HyperParams {
            char_dim: 200,
            label_dim: 200,
            hidden: 300,
            batch_size: 20,
            epochs: 10,
            max_labels: 8,
            lr: 0.001,
            seed: 1,
            teacher_forcing: true,
            pretrain_labels: true,
            clip_norm: 5.0,
        }
    }

    /// Small settings for quick runs on one core.
    pub fn desk() -> Self {
        HyperParams {
            char_dim: 32,
            label_dim: 32,
            hidden: 64,
            batch_size: 16,
            epochs: 15,
            lr: 0.005,
            ..Self::paper()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper" => Ok(Self::paper()),
            "desk" => Ok(Self::desk()),
            other => Err(Error::Config(format!("unknown preset `{other}` (paper|desk)"))),
        }
    }

    /// Starts from `model.preset` (default desk) and applies `model.*` keys.
    pub fn from_kv(kv: &KvConfig) -> Result<Self> {
        let s = kv.section("model");
        let base = Self::preset(s.get("preset").unwrap_or("desk"))?;
        let h = HyperParams {
            char_dim: s.parsed_or("char_dim", base.char_dim)?,
            label_dim: s.parsed_or("label_dim", base.label_dim)?,
            hidden: s.parsed_or("hidden", base.hidden)?,
            batch_size: s.parsed_or("batch_size", base.batch_size)?,
            epochs: s.parsed_or("epochs", base.epochs)?,
            max_labels: s.parsed_or("max_labels", base.max_labels)?,
            lr: s.parsed_or("lr", base.lr)?,
            seed: s.parsed_or("seed", base.seed)?,
            teacher_forcing: s.bool_or("teacher_forcing", base.teacher_forcing)?,
            pretrain_labels: s.bool_or("pretrain_labels", base.pretrain_labels)?,
            clip_norm: s.parsed_or("clip_norm", base.clip_norm)?,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn write_kv(&self, kv: &mut KvConfig) {
        for (k, v) in [
            ("char_dim", self.char_dim.to_string()),
            ("label_dim", self.label_dim.to_string()),
            ("hidden", self.hidden.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("epochs", self.epochs.to_string()),
            ("max_labels", self.max_labels.to_string()),
            ("lr", self.lr.to_string()),
            ("seed", self.seed.to_string()),
            ("teacher_forcing", self.teacher_forcing.to_string()),
            ("pretrain_labels", self.pretrain_labels.to_string()),
            ("clip_norm", self.clip_norm.to_string()),
        ] {
            kv.set(&format!("model.{k}"), v);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.char_dim,
            self.label_dim,
            self.hidden,
            self.batch_size,
            self.max_labels,
        ];
        if dims.contains(&0) || self.lr.is_nan() || self.lr <= 0.0 || self.clip_norm < 0.0 {
            return Err(Error::Config(format!("hyperparameters must be positive: {self:?}")));
        }
        if !self.hidden.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "hidden size {} must be even (split across two directions)",
                self.hidden
            )));
        }
        Ok(())
    }

    pub fn encoder_dir_hidden(&self) -> usize {
        self.hidden / 2
    }
}

/// Which trainable model a run builds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    /// Seq2seq with the label-distributed soft loss.
    LdSeq2seq,
    /// Seq2seq with hard cross entropy.
    BasicSeq2seq,
    /// Shared encoder with one logistic output per label.
    RnnMllr,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::LdSeq2seq => "ld-seq2seq",
            ModelKind::BasicSeq2seq => "basic-seq2seq",
            ModelKind::RnnMllr => "rnn-mllr",
        }
    }

    pub fn loss_mode(self) -> Option<LossMode> {
        match self {
            ModelKind::LdSeq2seq => Some(LossMode::Soft),
            ModelKind::BasicSeq2seq => Some(LossMode::Hard),
            ModelKind::RnnMllr => None,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ld-seq2seq" => Ok(ModelKind::LdSeq2seq),
            "basic-seq2seq" => Ok(ModelKind::BasicSeq2seq),
            "rnn-mllr" => Ok(ModelKind::RnnMllr),
            other => Err(Error::Config(format!(
                "unknown model `{other}` (ld-seq2seq|basic-seq2seq|rnn-mllr)"
            ))),
        }
    }
}

/// Everything needed to rebuild a model's parameter layout.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub hyper: HyperParams,
    /// Indices of the description resources the encoder reads.
    pub resources: Vec<usize>,
    /// Overrides the loss implied by `kind` for seq2seq models.
    pub loss: Option<LossMode>,
}

impl ModelConfig {
    pub fn new(kind: ModelKind, hyper: HyperParams, resources: Vec<usize>) -> Self {
        ModelConfig {
            kind,
            hyper,
            resources,
            loss: None,
        }
    }

    pub fn loss_mode(&self) -> LossMode {
        self.loss.or(self.kind.loss_mode()).unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        if self.resources.is_empty() {
            return Err(Error::Config("a model needs at least one resource".into()));
        }
        let mut r = self.resources.clone();
        r.sort_unstable();
        r.dedup();
        if r.len() != self.resources.len() {
            return Err(Error::Config(format!("duplicate resources in {:?}", self.resources)));
        }
        Ok(())
    }
}

/// Parses a `1,2`-style list of one-based resource numbers into indices.
pub fn parse_resources(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|p| match p.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n - 1),
            _ => Err(Error::Config(format!("bad resource number `{p}` (numbers start at 1)"))),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let p = HyperParams::paper();
        assert_eq!((p.char_dim, p.label_dim, p.hidden, p.batch_size, p.epochs), (200, 200, 300, 20, 10));
        let d = HyperParams::desk();
        assert_eq!((d.char_dim, d.label_dim, d.hidden, d.batch_size, d.epochs), (32, 32, 64, 16, 15));
        let mut kv = KvConfig::new();
        kv.set("model.preset", "paper");
        kv.set("model.epochs", "3");
        let h = HyperParams::from_kv(&kv).unwrap();
        assert_eq!((h.hidden, h.epochs), (300, 3));
        let mut round = KvConfig::new();
        h.write_kv(&mut round);
        assert_eq!(HyperParams::from_kv(&round).unwrap(), h);
    }

    #[test]
    fn resources_are_one_based() {
        assert_eq!(parse_resources("1,2").unwrap(), vec![0, 1]);
        assert!(parse_resources("0").is_err());
    }
}
