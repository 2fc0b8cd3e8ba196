use rand::Rng;

use super::gru::Gru;
use crate::error::{Error, Result};
use crate::ndcore::{ParamId, ParamStore, Tape, Tensor, Var};

fn run_direction(gru: &Gru, tape: &mut Tape, store: &ParamStore, x: Var, l: usize, reverse: bool) -> Result<Vec<Var>> {
    let gx = gru.project_inputs(tape, store, x)?;
    let mut h = gru.zero_state(tape)?;
    let mut states = Vec::with_capacity(l);
    for i in 0..l {
        let t = if reverse { l - 1 - i } else { i };
        let row = tape.slice_rows(gx, t, 1)?;
        h = gru.step(tape, store, row, h)?;
        states.push(h);
    }
    if reverse {
        states.reverse();
    }
    Ok(states)
}

/// Sigmoid gates that fuse one vector per resource:
/// `out = Σ_r σ([v_1; …; v_R] W_r + b_r) ⊙ v_r`.
#[derive(Clone, Debug)]
pub struct GateFusion {
    gates: Vec<(ParamId, ParamId)>,
}

impl GateFusion {
    pub fn new<R: Rng>(store: &mut ParamStore, prefix: &str, parts: usize, dim: usize, rng: &mut R) -> Self {
        let gates = (0..parts)
            .map(|r| {
                (
                    store.uniform(format!("{prefix}{r}.w"), &[parts * dim, dim], rng),
                    store.uniform(format!("{prefix}{r}.b"), &[1, dim], rng),
                )
            })
            .collect();
        GateFusion { gates }
    }

    /// Returns the fused vector and the gate activations.
    pub fn fuse(&self, tape: &mut Tape, store: &ParamStore, parts: &[Var]) -> Result<(Var, Vec<Var>)> {
        debug_assert_eq!(parts.len(), self.gates.len());
        let joined = tape.concat(parts)?;
        let mut gates = Vec::with_capacity(parts.len());
        let mut fused: Option<Var> = None;
        for (&(w, b), &part) in self.gates.iter().zip(parts) {
            let w = tape.param(store, w)?;
            let b = tape.param(store, b)?;
            let pre = tape.matmul(joined, w)?;
            let pre = tape.add(pre, b)?;
            let g = tape.sigmoid(pre)?;
            let term = tape.mul(g, part)?;
            fused = Some(match fused {
                None => term,
                Some(acc) => tape.add(acc, term)?,
            });
            gates.push(g);
        }
        Ok((fused.expect("at least one part"), gates))
    }
}

/// BiGRU states of one description.
#[derive(Clone, Debug)]
pub struct ResourceEncoding {
    /// `l × 2H'`: row `i` is `[forward_i ; backward_i]`.
    pub states: Var,
    /// `[forward_l ; backward_1]`.
    pub final_state: Var,
    pub forward: Vec<Var>,
    pub backward: Vec<Var>,
}

#[derive(Clone, Debug)]
pub struct EncoderOutput {
    /// Hidden-state matrix per resource; `None` for an empty description.
    pub hidden: Vec<Option<Var>>,
    /// Per-resource summary vectors (zero for empty descriptions).
    pub summaries: Vec<Var>,
    pub gates: Vec<Var>,
    /// Gate-fused description vector.
    pub summary: Var,
}

/// One BiGRU per resource over shared character embeddings, fused by gates.
#[derive(Clone, Debug)]
pub struct Encoder {
    pub char_emb: ParamId,
    pub forward: Vec<Gru>,
    pub backward: Vec<Gru>,
    pub fusion: GateFusion,
    dir_hidden: usize,
}

impl Encoder {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        num_chars: usize,
        char_dim: usize,
        dir_hidden: usize,
        resources: usize,
        rng: &mut R,
    ) -> Self {
        let char_emb = store.uniform("char_emb", &[num_chars, char_dim], rng);
        let mut forward = Vec::new();
        let mut backward = Vec::new();
        for r in 0..resources {
            forward.push(Gru::new(store, &format!("enc{r}.fwd"), char_dim, dir_hidden, rng));
            backward.push(Gru::new(store, &format!("enc{r}.bwd"), char_dim, dir_hidden, rng));
        }
        let fusion = GateFusion::new(store, "gate.summary", resources, 2 * dir_hidden, rng);
        Encoder {
            char_emb,
            forward,
            backward,
            fusion,
            dir_hidden,
        }
    }

    pub fn output_dim(&self) -> usize {
        2 * self.dir_hidden
    }

    pub fn resources(&self) -> usize {
        self.forward.len()
    }

    pub fn encode_resource(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        resource: usize,
        tokens: &[usize],
    ) -> Result<ResourceEncoding> {
        if tokens.is_empty() {
            return Err(Error::Data(
                "cannot encode an empty description; use encode_multi".into(),
            ));
        }
        let l = tokens.len();
        let table = tape.param(store, self.char_emb)?;
        let x = tape.embedding(table, tokens)?;
        let forward = run_direction(&self.forward[resource], tape, store, x, l, false)?;
        let backward = run_direction(&self.backward[resource], tape, store, x, l, true)?;
        let f = tape.stack_rows(&forward)?;
        let b = tape.stack_rows(&backward)?;
        let states = tape.concat(&[f, b])?;
        let final_state = tape.concat(&[forward[l - 1], backward[0]])?;
        Ok(ResourceEncoding {
            states,
            final_state,
            forward,
            backward,
        })
    }

    /// Encodes every resource and gate-fuses their summaries.
    pub fn encode_multi(&self, tape: &mut Tape, store: &ParamStore, descriptions: &[&[usize]]) -> Result<EncoderOutput> {
        if descriptions.len() != self.resources() {
            return Err(Error::ShapeMismatch {
                op: "encode_multi",
                lhs: vec![descriptions.len()],
                rhs: vec![self.resources()],
            });
        }
        if descriptions.iter().all(|d| d.is_empty()) {
            return Err(Error::Data("all descriptions are empty".into()));
        }
        let mut hidden = Vec::with_capacity(descriptions.len());
        let mut summaries = Vec::with_capacity(descriptions.len());
        for (r, tokens) in descriptions.iter().enumerate() {
            if tokens.is_empty() {
                hidden.push(None);
                summaries.push(tape.constant(Tensor::zeros(&[1, self.output_dim()]))?);
            } else {
                let enc = self.encode_resource(tape, store, r, tokens)?;
                hidden.push(Some(enc.states));
                summaries.push(enc.final_state);
            }
        }
        let (summary, gates) = self.fusion.fuse(tape, store, &summaries)?;
        Ok(EncoderOutput {
            hidden,
            summaries,
            gates,
            summary,
        })
    }
}
