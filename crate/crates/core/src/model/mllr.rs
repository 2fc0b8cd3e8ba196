use super::encoder::Encoder;
use super::hyper::ModelConfig;
use super::LabelModel;
use crate::data::{Example, NUM_RESERVED};
use crate::error::{Error, Result};
use crate::loss::{LabelBag, LOG_CLAMP};
use crate::ndcore::{derive_seed, seeded_rng, ParamId, ParamStore, Tape, Tensor, Var};

/// Multi-resource encoder followed by one logistic unit per label.
#[derive(Clone, Debug)]
pub struct Mllr {
    pub config: ModelConfig,
    pub params: ParamStore,
    pub encoder: Encoder,
    pub w: ParamId,
    pub b: ParamId,
    num_labels: usize,
}

impl Mllr {
    pub fn new(config: ModelConfig, num_chars: usize, num_labels: usize) -> Result<Self> {
        config.validate()?;
        let h = &config.hyper;
        let mut rng = seeded_rng(derive_seed(h.seed, "init"));
        let mut params = ParamStore::new();
        let encoder = Encoder::new(
            &mut params,
            num_chars,
            h.char_dim,
            h.encoder_dir_hidden(),
            config.resources.len(),
            &mut rng,
        );
        let w = params.zeros("mllr.w", &[encoder.output_dim(), num_labels]);
        let b = params.zeros("mllr.b", &[1, num_labels]);
        Ok(Mllr {
            config,
            params,
            encoder,
            w,
            b,
            num_labels,
        })
    }

    pub fn with_params(config: ModelConfig, num_chars: usize, num_labels: usize, params: ParamStore) -> Result<Self> {
        let mut model = Self::new(config, num_chars, num_labels)?;
        super::replace_params(&mut model.params, params)?;
        Ok(model)
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    /// `1 × V` independent label probabilities.
    pub fn forward(&self, tape: &mut Tape, descriptions: &[&[usize]]) -> Result<Var> {
        let store = &self.params;
        let enc = self.encoder.encode_multi(tape, store, descriptions)?;
        let w = tape.param(store, self.w)?;
        let b = tape.param(store, self.b)?;
        let logits = tape.matmul(enc.summary, w)?;
        let logits = tape.add(logits, b)?;
        tape.sigmoid(logits)
    }

    /// Per-label probabilities; reserved ids are included but never predicted.
    pub fn probabilities(&self, descriptions: &[&[usize]]) -> Result<Vec<f64>> {
        if !self.params.is_finite() {
            return Err(Error::Numerical("model parameters contain non-finite values".into()));
        }
        let mut tape = Tape::inference();
        let p = self.forward(&mut tape, descriptions)?;
        Ok(tape.data(p).to_vec())
    }
}

/// Binary cross entropy summed over ordinary labels; reserved ids are masked.
pub fn bce_loss(tape: &mut Tape, probs: Var, bag: &LabelBag) -> Result<Var> {
    let v = bag.vocab_size();
    let mut pos = bag.indicator().to_vec();
    let mut neg: Vec<f64> = pos.iter().map(|y| 1.0 - y).collect();
    for id in 0..NUM_RESERVED.min(v) {
        pos[id] = 0.0;
        neg[id] = 0.0;
    }
    let pos = tape.constant(Tensor::row(pos)?)?;
    let neg = tape.constant(Tensor::row(neg)?)?;
    let log_p = tape.log(probs, LOG_CLAMP)?;
    let q = tape.affine(probs, -1.0, 1.0)?;
    let log_q = tape.log(q, LOG_CLAMP)?;
    let a = tape.mul(log_p, pos)?;
    let c = tape.mul(log_q, neg)?;
    let both = tape.add(a, c)?;
    let total = tape.sum(both)?;
    tape.scale(total, -1.0)
}

impl LabelModel for Mllr {
    fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn params(&self) -> &ParamStore {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    fn example_loss(&self, tape: &mut Tape, example: &Example) -> Result<Var> {
        let descriptions = example.select(&self.config.resources);
        let bag = LabelBag::new(&example.labels, self.num_labels)?;
        let p = self.forward(tape, &descriptions)?;
        bce_loss(tape, p, &bag)
    }

    fn predict_ids(&self, descriptions: &[&[usize]]) -> Result<Vec<usize>> {
        let p = self.probabilities(descriptions)?;
        Ok((NUM_RESERVED..p.len()).filter(|&id| p[id] > 0.5).collect())
    }
}
