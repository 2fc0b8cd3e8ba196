use super::decoder::{Decoder, StepOutput};
use super::encoder::Encoder;
use super::hyper::ModelConfig;
use super::LabelModel;
use crate::data::{pretrain_label_embeddings, Example, SgnsOptions, EOS, NUM_RESERVED};
use crate::error::{Error, Result};
use crate::loss::{sequence_loss, with_eos, LabelBag};
use crate::ndcore::{derive_seed, seeded_rng, ParamStore, Tape, Tensor, Var};

/// Greedy decoding result.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    /// Emitted label ids in order, end marker excluded.
    pub labels: Vec<usize>,
    /// Distribution of every step taken, including the one that chose the
    /// end marker.
    pub step_probs: Vec<Vec<f64>>,
}

/// Argmax over labels that may still be emitted: the end marker and every
/// ordinary label not yet produced. Ties go to the lowest id.
pub fn masked_argmax(probs: &[f64], emitted: &[bool]) -> usize {
    let mut best = EOS;
    let mut best_p = probs[EOS];
    for (id, &p) in probs.iter().enumerate().skip(NUM_RESERVED) {
        if !emitted[id] && p > best_p {
            best = id;
            best_p = p;
        }
    }
    best
}

/// Multi-resource encoder with an attention GRU decoder.
#[derive(Clone, Debug)]
pub struct Seq2Seq {
    pub config: ModelConfig,
    pub params: ParamStore,
    pub encoder: Encoder,
    pub decoder: Decoder,
    num_labels: usize,
}

impl Seq2Seq {
    /// Builds a model with freshly initialised parameters.
    pub fn new(config: ModelConfig, num_chars: usize, num_labels: usize) -> Result<Self> {
        config.validate()?;
        let h = &config.hyper;
        let mut rng = seeded_rng(derive_seed(h.seed, "init"));
        let mut params = ParamStore::new();
        let r = config.resources.len();
        let encoder = Encoder::new(&mut params, num_chars, h.char_dim, h.encoder_dir_hidden(), r, &mut rng);
        let decoder = Decoder::new(
            &mut params,
            encoder.output_dim(),
            h.hidden,
            h.label_dim,
            num_labels,
            r,
            &mut rng,
        );
        Ok(Seq2Seq {
            config,
            params,
            encoder,
            decoder,
            num_labels,
        })
    }

    /// Rebuilds the layout and takes parameter values from `params`.
    pub fn with_params(config: ModelConfig, num_chars: usize, num_labels: usize, params: ParamStore) -> Result<Self> {
        let mut model = Self::new(config, num_chars, num_labels)?;
        super::replace_params(&mut model.params, params)?;
        Ok(model)
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    /// Overwrites the label embedding table, e.g. with pretrained vectors.
    pub fn set_label_embeddings(&mut self, table: &Tensor) -> Result<()> {
        let t = self.params.get_mut(self.decoder.label_emb);
        if t.shape() != table.shape() {
            return Err(Error::ShapeMismatch {
                op: "set_label_embeddings",
                lhs: t.shape().to_vec(),
                rhs: table.shape().to_vec(),
            });
        }
        t.data_mut().copy_from_slice(table.data());
        Ok(())
    }

    /// Runs the decoder over a fixed label sequence, returning every step.
    ///
    /// With `teacher_forcing` the gold previous label is fed back, otherwise
    /// the masked argmax of the previous step.
    pub fn unroll(
        &self,
        tape: &mut Tape,
        descriptions: &[&[usize]],
        gold: &[usize],
        teacher_forcing: bool,
    ) -> Result<Vec<StepOutput>> {
        let store = &self.params;
        let enc = self.encoder.encode_multi(tape, store, descriptions)?;
        let keys = self.decoder.attention_keys(tape, store, &enc)?;
        let mut state = self.decoder.init_state(tape, store, &enc)?;
        let mut emitted = vec![false; self.num_labels];
        let mut steps = Vec::with_capacity(gold.len());
        for (t, &g) in gold.iter().enumerate() {
            let out = self.decoder.step(tape, store, &state, &enc, &keys)?;
            state = out.state.clone();
            if t + 1 < gold.len() {
                let next = if teacher_forcing {
                    g
                } else {
                    masked_argmax(tape.data(out.probs), &emitted)
                };
                if next != EOS {
                    emitted[next] = true;
                }
                state.prev_embedding = self.decoder.embed_label(tape, store, next)?;
            }
            steps.push(out);
        }
        Ok(steps)
    }

    /// Greedy decoding with duplicate masking, capped at `max_labels` labels.
    pub fn predict(&self, descriptions: &[&[usize]]) -> Result<Prediction> {
        if !self.params.is_finite() {
            return Err(Error::Numerical("model parameters contain non-finite values".into()));
        }
        let store = &self.params;
        let mut tape = Tape::inference();
        let enc = self.encoder.encode_multi(&mut tape, store, descriptions)?;
        let keys = self.decoder.attention_keys(&mut tape, store, &enc)?;
        let mut state = self.decoder.init_state(&mut tape, store, &enc)?;
        let mut emitted = vec![false; self.num_labels];
        let mut labels = Vec::new();
        let mut step_probs = Vec::new();
        while labels.len() < self.config.hyper.max_labels {
            let out = self.decoder.step(&mut tape, store, &state, &enc, &keys)?;
            let probs = tape.data(out.probs).to_vec();
            let next = masked_argmax(&probs, &emitted);
            step_probs.push(probs);
            if next == EOS {
                break;
            }
            emitted[next] = true;
            labels.push(next);
            state = out.state;
            state.prev_embedding = self.decoder.embed_label(&mut tape, store, next)?;
        }
        if labels.is_empty() {
            log::debug!("prediction is empty: end marker chosen at the first step");
        }
        Ok(Prediction { labels, step_probs })
    }
}

impl LabelModel for Seq2Seq {
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
        let gold = with_eos(&example.labels);
        let bag = LabelBag::new(&example.labels, self.num_labels)?;
        let steps = self.unroll(tape, &descriptions, &gold, self.config.hyper.teacher_forcing)?;
        let probs: Vec<Var> = steps.iter().map(|s| s.probs).collect();
        sequence_loss(tape, &probs, &gold, &bag, self.config.loss_mode())
    }

    fn predict_ids(&self, descriptions: &[&[usize]]) -> Result<Vec<usize>> {
        Ok(self.predict(descriptions)?.labels)
    }

    /// Replaces the label embeddings with skip-gram vectors when enabled.
    fn prepare(&mut self, train: &[Example]) -> Result<()> {
        let h = &self.config.hyper;
        if !h.pretrain_labels {
            return Ok(());
        }
        let seed = derive_seed(h.seed, "sgns");
        let table = pretrain_label_embeddings(train, self.num_labels, h.label_dim, seed, &SgnsOptions::default())?;
        self.set_label_embeddings(&table)
    }
}
