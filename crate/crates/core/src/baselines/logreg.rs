use std::rc::Rc;

use crate::error::{Error, Result};
use crate::loss::LOG_CLAMP;
use crate::ndcore::{sigmoid, softmax_in_place, AdamConfig, AdamState, ParamId, ParamStore, SparseMatrix, Tape, Tensor};

use super::features::FeatureVector;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogRegOptions {
    pub lr: f64,
    pub epochs: usize,
}

impl Default for LogRegOptions {
    fn default() -> Self {
        LogRegOptions { lr: 0.01, epochs: 200 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Output {
    /// One independent sigmoid per column.
    Sigmoid,
    /// A single softmax over the columns.
    Softmax,
}

/// `K` linear scorers over sparse features, optionally with a `K × K`
/// block that feeds 0/1 values of earlier columns into later ones.
#[derive(Clone, Debug)]
pub struct LinearModel {
    pub output: Output,
    pub params: ParamStore,
    pub w: ParamId,
    pub b: ParamId,
    /// Chain weights; entry `[j, k]` is used only when `j` precedes `k`.
    pub chain: Option<(ParamId, Vec<usize>)>,
}

fn rank_of(order: &[usize]) -> Vec<usize> {
    let mut rank = vec![0; order.len()];
    for (pos, &k) in order.iter().enumerate() {
        rank[k] = pos;
    }
    rank
}

fn chain_mask(order: &[usize]) -> Vec<f64> {
    let k = order.len();
    let rank = rank_of(order);
    let mut mask = vec![0.0; k * k];
    for j in 0..k {
        for c in 0..k {
            if rank[j] < rank[c] {
                mask[j * k + c] = 1.0;
            }
        }
    }
    mask
}

/// Checks that `order` is a permutation of `0..k`.
pub fn check_order(order: &[usize], k: usize) -> Result<()> {
    let mut seen = vec![false; k];
    for &o in order {
        if o >= k || seen[o] {
            return Err(Error::Config(format!("chain order {order:?} is not a permutation of 0..{k}")));
        }
        seen[o] = true;
    }
    if order.len() != k {
        return Err(Error::Config(format!("chain order has {} entries, expected {k}", order.len())));
    }
    Ok(())
}

impl LinearModel {
    fn init(features: usize, k: usize, output: Output, order: Option<Vec<usize>>) -> Self {
        let mut params = ParamStore::new();
        let w = params.zeros("w", &[features, k]);
        let b = params.zeros("b", &[1, k]);
        let chain = order.map(|o| (params.zeros("chain", &[k, k]), o));
        LinearModel {
            output,
            params,
            w,
            b,
            chain,
        }
    }

    /// Full-batch Adam on the mean per-example loss.
    ///
    /// Sigmoid targets are an `N × K` 0/1 matrix; softmax targets are one
    /// class index per row. With a chain, the sigmoid targets also serve as
    /// the gold inputs of the chain block.
    fn fit(&mut self, x: &Rc<SparseMatrix>, targets: &Targets, opts: &LogRegOptions) -> Result<()> {
        let n = x.rows();
        if n == 0 {
            return Err(Error::Data("logistic regression needs training rows".into()));
        }
        let k = self.params.get(self.b).cols();
        let gold = match targets {
            Targets::Binary(y) => Some(Tensor::matrix(n, k, y.clone())?),
            Targets::Classes(_) => None,
        };
        let (pos, neg) = match targets {
            Targets::Binary(y) => (y.clone(), y.iter().map(|v| 1.0 - v).collect()),
            Targets::Classes(c) => {
                let mut onehot = vec![0.0; n * k];
                for (i, &class) in c.iter().enumerate() {
                    onehot[i * k + class] = 1.0;
                }
                (onehot, Vec::new())
            }
        };
        let mask = self.chain.as_ref().map(|(_, o)| chain_mask(o));
        let mut adam = AdamState::new(AdamConfig::with_lr(opts.lr), &self.params);
        for _ in 0..opts.epochs {
            self.params.zero_grads();
            let mut tape = Tape::new();
            let w = tape.param(&self.params, self.w)?;
            let b = tape.param(&self.params, self.b)?;
            let mut logits = tape.sparse_matmul(Rc::clone(x), w)?;
            if let (Some((c, _)), Some(gold), Some(mask)) = (&self.chain, &gold, &mask) {
                let c = tape.param(&self.params, *c)?;
                let m = tape.constant(Tensor::matrix(k, k, mask.clone())?)?;
                let cm = tape.mul(c, m)?;
                let y = tape.constant(gold.clone())?;
                let fed = tape.matmul(y, cm)?;
                logits = tape.add(logits, fed)?;
            }
            let logits = tape.add(logits, b)?;
            let pos_t = tape.constant(Tensor::matrix(n, k, pos.clone())?)?;
            let total = match self.output {
                Output::Sigmoid => {
                    let p = tape.sigmoid(logits)?;
                    let neg_t = tape.constant(Tensor::matrix(n, k, neg.clone())?)?;
                    let lp = tape.log(p, LOG_CLAMP)?;
                    let q = tape.affine(p, -1.0, 1.0)?;
                    let lq = tape.log(q, LOG_CLAMP)?;
                    let a = tape.mul(lp, pos_t)?;
                    let c = tape.mul(lq, neg_t)?;
                    let s = tape.add(a, c)?;
                    tape.sum(s)?
                }
                Output::Softmax => {
                    let p = tape.softmax(logits)?;
                    let lp = tape.log(p, LOG_CLAMP)?;
                    let a = tape.mul(lp, pos_t)?;
                    tape.sum(a)?
                }
            };
            let loss = tape.scale(total, -1.0 / n as f64)?;
            if !tape.value(loss).item().is_finite() {
                return Err(Error::Numerical("non-finite logistic regression loss".into()));
            }
            tape.backward_into(loss, &mut self.params)?;
            adam.step(&mut self.params)?;
        }
        self.params.clear_grads();
        Ok(())
    }

    pub fn fit_sigmoid(
        x: &Rc<SparseMatrix>,
        y: Vec<f64>,
        k: usize,
        order: Option<Vec<usize>>,
        opts: &LogRegOptions,
    ) -> Result<Self> {
        if let Some(o) = &order {
            check_order(o, k)?;
        }
        let mut model = Self::init(x.cols(), k, Output::Sigmoid, order);
        model.fit(x, &Targets::Binary(y), opts)?;
        Ok(model)
    }

    pub fn fit_softmax(x: &Rc<SparseMatrix>, classes: &[usize], k: usize, opts: &LogRegOptions) -> Result<Self> {
        if let Some(&bad) = classes.iter().find(|&&c| c >= k) {
            return Err(Error::Data(format!("class {bad} out of range {k}")));
        }
        let mut model = Self::init(x.cols(), k, Output::Softmax, None);
        model.fit(x, &Targets::Classes(classes.to_vec()), opts)?;
        Ok(model)
    }

    pub fn columns(&self) -> usize {
        self.params.get(self.b).cols()
    }

    /// `x W + b` for one sparse row.
    pub fn logits(&self, x: &FeatureVector) -> Vec<f64> {
        let w = self.params.get(self.w);
        let mut out = self.params.get(self.b).data().to_vec();
        let k = out.len();
        for &(j, v) in x {
            if j < w.rows() {
                let row = &w.data()[j * k..(j + 1) * k];
                out.iter_mut().zip(row).for_each(|(o, &wv)| *o += v * wv);
            }
        }
        out
    }

    /// Column probabilities. A chain model decides columns in chain order and
    /// feeds each thresholded decision forward.
    pub fn probabilities(&self, x: &FeatureVector) -> Vec<f64> {
        let mut z = self.logits(x);
        match (&self.chain, self.output) {
            (Some((c, order)), _) => {
                let k = z.len();
                let c = self.params.get(*c).data();
                let mut p = vec![0.0; k];
                for (pos, &col) in order.iter().enumerate() {
                    let zc = z[col]
                        + order[..pos]
                            .iter()
                            .filter(|&&j| p[j] > 0.5)
                            .map(|&j| c[j * k + col])
                            .sum::<f64>();
                    p[col] = sigmoid(zc);
                }
                p
            }
            (None, Output::Sigmoid) => z.into_iter().map(sigmoid).collect(),
            (None, Output::Softmax) => {
                softmax_in_place(&mut z);
                z
            }
        }
    }
}

enum Targets {
    Binary(Vec<f64>),
    Classes(Vec<usize>),
}
