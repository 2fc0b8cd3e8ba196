//! Finite-difference checks over every tape primitive and the full losses.

use std::rc::Rc;

use rand::Rng as _;

use super::hyper::{HyperParams, ModelConfig, ModelKind};
use super::mllr::Mllr;
use super::seq2seq::Seq2Seq;
use super::LabelModel;
use crate::data::{Example, NUM_RESERVED};
use crate::error::Result;
use crate::loss::{sequence_loss, LabelBag, LossMode};
use crate::ndcore::{
    derive_seed, grad_check, seeded_rng, GradCheckOptions, GradCheckReport, ParamStore, Rng, SparseMatrix, Tape,
    Tensor, Var,
};

#[derive(Clone, Debug, PartialEq)]
pub struct GradCase {
    pub name: String,
    pub report: GradCheckReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradSuiteReport {
    pub tolerance: f64,
    pub cases: Vec<GradCase>,
}

impl GradSuiteReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(|c| c.report.max_rel_error <= self.tolerance)
    }

    pub fn failures(&self) -> Vec<&GradCase> {
        self.cases.iter().filter(|c| c.report.max_rel_error > self.tolerance).collect()
    }

    /// One line per case.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.cases {
            let status = if c.report.max_rel_error <= self.tolerance { "ok" } else { "FAIL" };
            let worst = c.report.worst.as_ref().map_or(String::new(), |(n, i)| format!(" at {n}[{i}]"));
            out.push_str(&format!(
                "{status:<4} {:<22} max rel err {:.3e} over {} coords{worst}\n",
                c.name, c.report.max_rel_error, c.report.coords_checked
            ));
        }
        out
    }
}

fn random(rng: &mut Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
    Tensor::new(shape.to_vec(), data).expect("shape matches data")
}

/// Reduces any tensor to a scalar through fixed random weights so every
/// output coordinate gets a distinct upstream gradient.
fn reduce(tape: &mut Tape, x: Var, weights: &Tensor) -> Result<Var> {
    let w = tape.constant(weights.clone())?;
    let m = tape.mul(x, w)?;
    tape.sum(m)
}

type Body = Box<dyn Fn(&mut Tape, &[Var]) -> Result<Var>>;

struct Primitive {
    name: &'static str,
    /// Shapes and value ranges of the inputs.
    inputs: Vec<(Vec<usize>, f64, f64)>,
    body: Body,
}

fn primitives(sparse: Rc<SparseMatrix>) -> Vec<Primitive> {
    let any = |r: usize, c: usize| (vec![r, c], -1.0, 1.0);
    let positive = |r: usize, c: usize| (vec![r, c], 0.2, 2.0);
    let p = |name, inputs, body: Body| Primitive { name, inputs, body };
    vec![
        p("matmul", vec![any(3, 4), any(4, 2)], Box::new(|t, v| t.matmul(v[0], v[1]))),
        p("add", vec![any(3, 4), any(3, 4)], Box::new(|t, v| t.add(v[0], v[1]))),
        p("add_broadcast", vec![any(3, 4), any(1, 4)], Box::new(|t, v| t.add(v[0], v[1]))),
        p("sub", vec![any(3, 4), any(3, 4)], Box::new(|t, v| t.sub(v[0], v[1]))),
        p("sub_broadcast", vec![any(3, 4), any(1, 4)], Box::new(|t, v| t.sub(v[0], v[1]))),
        p("mul", vec![any(3, 4), any(3, 4)], Box::new(|t, v| t.mul(v[0], v[1]))),
        p("mul_broadcast", vec![any(3, 4), any(1, 4)], Box::new(|t, v| t.mul(v[0], v[1]))),
        p("affine", vec![any(2, 3)], Box::new(|t, v| t.affine(v[0], -1.5, 0.25))),
        p("scale", vec![any(2, 3)], Box::new(|t, v| t.scale(v[0], 0.7))),
        p("concat", vec![any(1, 3), any(1, 2)], Box::new(|t, v| t.concat(&[v[0], v[1]]))),
        p("concat_rows", vec![any(2, 3), any(2, 2)], Box::new(|t, v| t.concat(&[v[0], v[1]]))),
        p("stack_rows", vec![any(1, 3), any(1, 3), any(1, 3)], Box::new(|t, v| t.stack_rows(&[v[0], v[1], v[2]]))),
        p("slice", vec![any(2, 5)], Box::new(|t, v| t.slice(v[0], 1, 3))),
        p("slice_rows", vec![any(4, 3)], Box::new(|t, v| t.slice_rows(v[0], 1, 2))),
        p("reshape", vec![any(2, 3)], Box::new(|t, v| t.reshape(v[0], &[3, 2]))),
        p("tanh", vec![any(2, 3)], Box::new(|t, v| t.tanh(v[0]))),
        p("sigmoid", vec![any(2, 3)], Box::new(|t, v| t.sigmoid(v[0]))),
        p("log", vec![positive(2, 3)], Box::new(|t, v| t.log(v[0], 1e-12))),
        p("softmax", vec![any(2, 5)], Box::new(|t, v| t.softmax(v[0]))),
        p("sum", vec![any(2, 3)], Box::new(|t, v| t.sum(v[0]))),
        p("mean", vec![any(2, 3)], Box::new(|t, v| t.mean(v[0]))),
        p("embedding", vec![any(5, 3)], Box::new(|t, v| t.embedding(v[0], &[4, 0, 4, 2]))),
        p(
            "sparse_matmul",
            vec![any(6, 3)],
            Box::new(move |t, v| t.sparse_matmul(Rc::clone(&sparse), v[0])),
        ),
    ]
}

fn check_primitive(prim: &Primitive, rng: &mut Rng, opts: &GradCheckOptions) -> Result<GradCheckReport> {
    let mut store = ParamStore::new();
    let ids: Vec<_> = prim
        .inputs
        .iter()
        .enumerate()
        .map(|(i, (shape, lo, hi))| store.insert(format!("x{i}"), random(rng, shape, *lo, *hi)))
        .collect();
    // Output shape is only known after a forward pass.
    let mut probe = Tape::inference();
    let vars = ids.iter().map(|&id| probe.param(&store, id)).collect::<Result<Vec<_>>>()?;
    let out = (prim.body)(&mut probe, &vars)?;
    let weights = random(rng, probe.shape(out), -1.0, 1.0);
    grad_check(&store, opts, |tape, store| {
        let vars = ids.iter().map(|&id| tape.param(store, id)).collect::<Result<Vec<_>>>()?;
        let out = (prim.body)(tape, &vars)?;
        reduce(tape, out, &weights)
    })
}

fn check_sequence_loss(mode: LossMode, rng: &mut Rng, opts: &GradCheckOptions) -> Result<GradCheckReport> {
    let v = NUM_RESERVED + 5;
    let labels = [NUM_RESERVED + 3, NUM_RESERVED, NUM_RESERVED + 1];
    let gold = crate::loss::with_eos(&labels);
    let bag = LabelBag::new(&labels, v)?;
    let mut store = ParamStore::new();
    let logits = store.insert("logits", random(rng, &[gold.len(), v], -2.0, 2.0));
    grad_check(&store, opts, |tape, store| {
        let all = tape.param(store, logits)?;
        let probs = (0..gold.len())
            .map(|t| {
                let row = tape.slice_rows(all, t, 1)?;
                tape.softmax(row)
            })
            .collect::<Result<Vec<_>>>()?;
        sequence_loss(tape, &probs, &gold, &bag, mode)
    })
}

/// A two-resource toy batch; the second example lacks its second description.
fn toy_batch(num_chars: usize) -> Vec<Example> {
    let c = |i: usize| NUM_RESERVED + i % (num_chars - NUM_RESERVED);
    vec![
        Example {
            word: "first".into(),
            descriptions: vec![vec![c(0), c(3), c(1), c(4)], vec![c(2), c(2), c(5)]],
            labels: vec![NUM_RESERVED + 2, NUM_RESERVED, NUM_RESERVED + 4],
        },
        Example {
            word: "second".into(),
            descriptions: vec![vec![c(6), c(1), c(0)], Vec::new()],
            labels: vec![NUM_RESERVED + 1],
        },
    ]
}

fn tiny_config(kind: ModelKind, seed: u64) -> ModelConfig {
    let hyper = HyperParams {
        char_dim: 4,
        label_dim: 3,
        hidden: 4,
        seed,
        // Self-fed argmax inputs are piecewise constant and can flip under
        // a finite-difference step.
        teacher_forcing: true,
        ..HyperParams::desk()
    };
    ModelConfig::new(kind, hyper, vec![0, 1])
}

fn check_model<M: LabelModel + Clone>(mut model: M, batch: &[Example], opts: &GradCheckOptions) -> Result<GradCheckReport> {
    let store = model.params().clone();
    grad_check(&store, opts, |tape, store| {
        model.params_mut().clone_from(store);
        let mut total: Option<Var> = None;
        for ex in batch {
            let l = model.example_loss(tape, ex)?;
            total = Some(match total {
                None => l,
                Some(acc) => tape.add(acc, l)?,
            });
        }
        let total = total.expect("nonempty batch");
        tape.scale(total, 1.0 / batch.len() as f64)
    })
}

/// Runs every case with central differences of step `eps`.
pub fn gradient_suite(seed: u64, eps: f64, tolerance: f64) -> Result<GradSuiteReport> {
    let mut rng = seeded_rng(derive_seed(seed, "gradcheck"));
    let opts = GradCheckOptions {
        eps,
        max_coords_per_param: 24,
        seed: derive_seed(seed, "gradcheck.coords"),
    };
    let sparse = Rc::new(SparseMatrix::from_rows(
        6,
        &[vec![(0, 1.0), (3, 2.0)], vec![], vec![(5, -0.5), (1, 1.0), (2, 3.0)]],
    )?);
    let mut cases = Vec::new();
    for prim in primitives(sparse) {
        let report = check_primitive(&prim, &mut rng, &opts)?;
        cases.push(GradCase {
            name: prim.name.to_string(),
            report,
        });
    }
    for mode in [LossMode::Soft, LossMode::Hard] {
        cases.push(GradCase {
            name: format!("sequence_loss_{}", mode.as_str()),
            report: check_sequence_loss(mode, &mut rng, &opts)?,
        });
    }
    let (num_chars, num_labels) = (NUM_RESERVED + 7, NUM_RESERVED + 5);
    let batch = toy_batch(num_chars);
    for kind in [ModelKind::LdSeq2seq, ModelKind::BasicSeq2seq] {
        let model = Seq2Seq::new(tiny_config(kind, seed), num_chars, num_labels)?;
        cases.push(GradCase {
            name: format!("{}_loss", kind.as_str()),
            report: check_model(model, &batch, &opts)?,
        });
    }
    let mllr = Mllr::new(tiny_config(ModelKind::RnnMllr, seed), num_chars, num_labels)?;
    cases.push(GradCase {
        name: "rnn-mllr_loss".into(),
        report: check_model(mllr, &batch, &opts)?,
    });
    Ok(GradSuiteReport { tolerance, cases })
}
