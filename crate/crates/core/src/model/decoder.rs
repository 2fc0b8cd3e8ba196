use rand::Rng;

use super::encoder::{EncoderOutput, GateFusion};
use super::gru::Gru;
use crate::error::Result;
use crate::ndcore::{ParamId, ParamStore, Tape, Tensor, Var};

/// Additive attention `score_i = vᵀ tanh(W s + U h_i)` for one resource.
#[derive(Clone, Debug)]
pub struct Attention {
    pub w_state: ParamId,
    pub w_keys: ParamId,
    pub v: ParamId,
}

#[derive(Clone, Debug)]
pub struct DecoderState {
    pub s: Var,
    /// Number of steps taken so far.
    pub t: usize,
    pub prev_embedding: Var,
}

#[derive(Clone, Debug)]
pub struct StepOutput {
    pub state: DecoderState,
    /// `1 × V` distribution over labels, end marker included.
    pub probs: Var,
    /// Attention weights per resource; `None` for empty descriptions.
    pub attention: Vec<Option<Var>>,
    pub gates: Vec<Var>,
}

/// Projected encoder states `U h_i`, computed once per example.
#[derive(Clone, Debug)]
pub struct AttentionKeys {
    keys: Vec<Option<Var>>,
}

/// Attention GRU decoder over gate-fused per-resource contexts.
#[derive(Clone, Debug)]
pub struct Decoder {
    pub init_w: ParamId,
    pub init_b: ParamId,
    pub gru: Gru,
    pub attention: Vec<Attention>,
    pub fusion: GateFusion,
    pub out_w: ParamId,
    pub out_b: ParamId,
    pub label_emb: ParamId,
    pub start_emb: ParamId,
    enc_dim: usize,
}

impl Decoder {
    #[allow(clippy::too_many_arguments)]
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        enc_dim: usize,
        hidden: usize,
        label_dim: usize,
        num_labels: usize,
        resources: usize,
        rng: &mut R,
    ) -> Self {
        let init_w = store.uniform("dec.init.w", &[enc_dim, hidden], rng);
        let init_b = store.uniform("dec.init.b", &[1, hidden], rng);
        let gru = Gru::new(store, "dec.gru", enc_dim + label_dim, hidden, rng);
        let attention = (0..resources)
            .map(|r| Attention {
                w_state: store.uniform(format!("att{r}.w_state"), &[hidden, hidden], rng),
                w_keys: store.uniform(format!("att{r}.w_keys"), &[enc_dim, hidden], rng),
                v: store.uniform(format!("att{r}.v"), &[hidden, 1], rng),
            })
            .collect();
        let fusion = GateFusion::new(store, "gate.context", resources, enc_dim, rng);
        let out_w = store.uniform("out.w", &[hidden, num_labels], rng);
        let out_b = store.uniform("out.b", &[1, num_labels], rng);
        let label_emb = store.uniform("label_emb", &[num_labels, label_dim], rng);
        let start_emb = store.uniform("start_emb", &[1, label_dim], rng);
        Decoder {
            init_w,
            init_b,
            gru,
            attention,
            fusion,
            out_w,
            out_b,
            label_emb,
            start_emb,
            enc_dim,
        }
    }

    /// `s_0 = tanh(W v_d + b)` with the learned start embedding as `e_0`.
    pub fn init_state(&self, tape: &mut Tape, store: &ParamStore, enc: &EncoderOutput) -> Result<DecoderState> {
        let w = tape.param(store, self.init_w)?;
        let b = tape.param(store, self.init_b)?;
        let pre = tape.matmul(enc.summary, w)?;
        let pre = tape.add(pre, b)?;
        let s = tape.tanh(pre)?;
        let prev_embedding = tape.param(store, self.start_emb)?;
        Ok(DecoderState {
            s,
            t: 0,
            prev_embedding,
        })
    }

    pub fn attention_keys(&self, tape: &mut Tape, store: &ParamStore, enc: &EncoderOutput) -> Result<AttentionKeys> {
        let keys = enc
            .hidden
            .iter()
            .zip(&self.attention)
            .map(|(h, att)| match h {
                None => Ok(None),
                Some(h) => {
                    let u = tape.param(store, att.w_keys)?;
                    tape.matmul(*h, u).map(Some)
                }
            })
            .collect::<Result<_>>()?;
        Ok(AttentionKeys { keys })
    }

    /// Embedding row of `label`, for feeding the next step.
    pub fn embed_label(&self, tape: &mut Tape, store: &ParamStore, label: usize) -> Result<Var> {
        let table = tape.param(store, self.label_emb)?;
        tape.embedding(table, &[label])
    }

    /// One decoding step. Attention is scored against the previous state.
    pub fn step(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        state: &DecoderState,
        enc: &EncoderOutput,
        keys: &AttentionKeys,
    ) -> Result<StepOutput> {
        let mut contexts = Vec::with_capacity(self.attention.len());
        let mut attention = Vec::with_capacity(self.attention.len());
        for ((att, key), hidden) in self.attention.iter().zip(&keys.keys).zip(&enc.hidden) {
            let (Some(key), Some(hidden)) = (key, hidden) else {
                contexts.push(tape.constant(Tensor::zeros(&[1, self.enc_dim]))?);
                attention.push(None);
                continue;
            };
            let ws = tape.param(store, att.w_state)?;
            let v = tape.param(store, att.v)?;
            let query = tape.matmul(state.s, ws)?;
            let mixed = tape.add(*key, query)?;
            let act = tape.tanh(mixed)?;
            let scores = tape.matmul(act, v)?;
            let l = tape.shape(scores)[0];
            let scores = tape.reshape(scores, &[1, l])?;
            let alpha = tape.softmax(scores)?;
            contexts.push(tape.matmul(alpha, *hidden)?);
            attention.push(Some(alpha));
        }
        let (context, gates) = self.fusion.fuse(tape, store, &contexts)?;
        let input = tape.concat(&[context, state.prev_embedding])?;
        let gx = self.gru.project_inputs(tape, store, input)?;
        let s = self.gru.step(tape, store, gx, state.s)?;
        let ow = tape.param(store, self.out_w)?;
        let ob = tape.param(store, self.out_b)?;
        let logits = tape.matmul(s, ow)?;
        let logits = tape.add(logits, ob)?;
        let probs = tape.softmax(logits)?;
        Ok(StepOutput {
            state: DecoderState {
                s,
                t: state.t + 1,
                prev_embedding: state.prev_embedding,
            },
            probs,
            attention,
            gates,
        })
    }
}
