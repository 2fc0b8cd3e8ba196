//! Encoders, the attention decoder, the per-label logistic head and training.

mod decoder;
mod encoder;
mod gradsuite;
mod gru;
mod hyper;
mod mllr;
mod seq2seq;
mod train;

use std::collections::BTreeMap;
use std::path::Path;

pub use decoder::{Attention, AttentionKeys, Decoder, DecoderState, StepOutput};
pub use encoder::{Encoder, EncoderOutput, GateFusion, ResourceEncoding};
pub use gradsuite::{gradient_suite, GradCase, GradSuiteReport};
pub use gru::Gru;
pub use hyper::{parse_resources, HyperParams, ModelConfig, ModelKind};
pub use mllr::{bce_loss, Mllr};
pub use seq2seq::{masked_argmax, Prediction, Seq2Seq};
pub use train::{dev_f1, train, EpochLog, TrainOutcome};

use crate::config::KvConfig;
use crate::data::{Example, Vocab, Vocabs};
use crate::error::{Error, Result};
use crate::loss::{LossMode, LOG_CLAMP};
use crate::ndcore::{checkpoint, ParamStore, Tape, Var};

/// What the trainer needs from a model.
pub trait LabelModel {
    fn config(&self) -> &ModelConfig;
    fn params(&self) -> &ParamStore;
    fn params_mut(&mut self) -> &mut ParamStore;
    /// Scalar training loss of one example.
    fn example_loss(&self, tape: &mut Tape, example: &Example) -> Result<Var>;
    /// Predicted label ids for one input, in emission order.
    fn predict_ids(&self, descriptions: &[&[usize]]) -> Result<Vec<usize>>;
    /// Hook run once before the first epoch.
    fn prepare(&mut self, _train: &[Example]) -> Result<()> {
        Ok(())
    }
}

/// Copies values from `source` into `target`, requiring identical layouts.
pub(crate) fn replace_params(target: &mut ParamStore, source: ParamStore) -> Result<()> {
    if target.len() != source.len() {
        return Err(Error::Config(format!(
            "parameter count mismatch: model has {}, source has {}",
            target.len(),
            source.len()
        )));
    }
    for (name, t) in source.iter() {
        let id = target.id(name)?;
        let slot = target.get_mut(id);
        if slot.shape() != t.shape() {
            return Err(Error::ShapeMismatch {
                op: "load_params",
                lhs: slot.shape().to_vec(),
                rhs: t.shape().to_vec(),
            });
        }
        slot.data_mut().copy_from_slice(t.data());
    }
    Ok(())
}

/// Any trainable model together with the vocabularies it was built on.
#[derive(Clone, Debug)]
pub enum Model {
    Seq2Seq(Seq2Seq),
    Mllr(Mllr),
}

impl Model {
    pub fn new(config: ModelConfig, vocabs: &Vocabs) -> Result<Self> {
        let (c, l) = (vocabs.chars.len(), vocabs.labels.len());
        Ok(match config.kind {
            ModelKind::RnnMllr => Model::Mllr(Mllr::new(config, c, l)?),
            _ => Model::Seq2Seq(Seq2Seq::new(config, c, l)?),
        })
    }

    pub fn as_label_model(&self) -> &dyn LabelModel {
        match self {
            Model::Seq2Seq(m) => m,
            Model::Mllr(m) => m,
        }
    }

    pub fn as_label_model_mut(&mut self) -> &mut dyn LabelModel {
        match self {
            Model::Seq2Seq(m) => m,
            Model::Mllr(m) => m,
        }
    }

    pub fn config(&self) -> &ModelConfig {
        self.as_label_model().config()
    }

    pub fn predict_ids(&self, descriptions: &[&[usize]]) -> Result<Vec<usize>> {
        self.as_label_model().predict_ids(descriptions)
    }

    /// Writes parameters plus everything needed to rebuild the model.
    pub fn save(&self, dir: &Path, vocabs: &Vocabs, extra: &BTreeMap<String, String>) -> Result<()> {
        let config = self.config();
        let mut meta = extra.clone();
        let mut hyper = KvConfig::new();
        config.hyper.write_kv(&mut hyper);
        for (k, v) in hyper.iter() {
            meta.insert(k.to_string(), v.to_string());
        }
        meta.insert("model.kind".into(), config.kind.to_string());
        meta.insert("model.loss".into(), config.loss_mode().as_str().into());
        let resources: Vec<String> = config.resources.iter().map(|r| (r + 1).to_string()).collect();
        meta.insert("model.resources".into(), resources.join(","));
        meta.insert("model.log_clamp".into(), LOG_CLAMP.to_string());
        meta.insert("vocab.chars".into(), vocab_json(&vocabs.chars));
        meta.insert("vocab.labels".into(), vocab_json(&vocabs.labels));
        checkpoint::save(dir, self.as_label_model().params(), &meta)
    }

    /// Restores a model saved by [`Model::save`], with its vocabularies and
    /// the full metadata map.
    pub fn load(dir: &Path) -> Result<(Model, Vocabs, BTreeMap<String, String>)> {
        let ckpt = checkpoint::load(dir)?;
        let meta = &ckpt.meta;
        let bad = |msg: String| Error::Checkpoint {
            path: dir.to_path_buf(),
            msg,
        };
        let get = |k: &str| meta.get(k).ok_or_else(|| bad(format!("missing metadata `{k}`")));
        let mut kv = KvConfig::new();
        for (k, v) in meta.iter().filter(|(k, _)| k.starts_with("model.")) {
            kv.set(k, v.clone());
        }
        let hyper = HyperParams::from_kv(&kv)?;
        let kind: ModelKind = get("model.kind")?.parse()?;
        let loss: LossMode = get("model.loss")?.parse()?;
        let resources = parse_resources(get("model.resources")?)?;
        let vocabs = Vocabs {
            chars: vocab_from_json(get("vocab.chars")?).map_err(|e| bad(e.to_string()))?,
            labels: vocab_from_json(get("vocab.labels")?).map_err(|e| bad(e.to_string()))?,
        };
        let mut config = ModelConfig::new(kind, hyper, resources);
        config.loss = Some(loss);
        let (c, l) = (vocabs.chars.len(), vocabs.labels.len());
        let model = match kind {
            ModelKind::RnnMllr => Model::Mllr(Mllr::with_params(config, c, l, ckpt.params)?),
            _ => Model::Seq2Seq(Seq2Seq::with_params(config, c, l, ckpt.params)?),
        };
        Ok((model, vocabs, ckpt.meta))
    }
}

fn vocab_json(v: &Vocab) -> String {
    serde_json::to_string(v.tokens()).expect("strings serialise")
}

fn vocab_from_json(text: &str) -> Result<Vocab> {
    let tokens: Vec<String> =
        serde_json::from_str(text).map_err(|e| Error::Data(format!("bad vocabulary: {e}")))?;
    Vocab::from_ordered(tokens)
}
