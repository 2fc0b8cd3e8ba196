use std::collections::HashMap;
use std::rc::Rc;

use super::{ParamId, ParamStore, SparseMatrix, Tensor};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    Param,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Affine(Var, f64),
    Concat(Vec<Var>),
    StackRows(Vec<Var>),
    Slice(Var, usize),
    SliceRows(Var, usize),
    Reshape(Var),
    Tanh(Var),
    Sigmoid(Var),
    Softmax(Var),
    Log(Var, f64),
    Sum(Var),
    Mean(Var),
    Embedding(Var, Vec<usize>),
    SparseMatMul(Rc<SparseMatrix>, Var),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// Linear record of executed operations for reverse-mode differentiation.
///
/// Nodes are appended in execution order; `backward` walks them in exact
/// reverse. A tape can be differentiated once; call [`Tape::clear`] to reuse
/// the allocation for the next forward pass.
#[derive(Debug)]
pub struct Tape {
    nodes: Vec<Node>,
    params: HashMap<ParamId, Var>,
    grads: Vec<Option<Vec<f64>>>,
    track_params: bool,
    checked: bool,
    consumed: bool,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

fn shape2(rows: usize, cols: usize) -> Vec<usize> {
    vec![rows, cols]
}

impl Tape {
    /// A tape that tracks gradients for parameters. Checked mode follows
    /// `debug_assertions`.
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            params: HashMap::new(),
            grads: Vec::new(),
            track_params: true,
            checked: cfg!(debug_assertions),
            consumed: false,
        }
    }

    /// A tape whose parameters are treated as constants.
    pub fn inference() -> Self {
        Tape {
            track_params: false,
            ..Tape::new()
        }
    }

    pub fn set_checked(&mut self, checked: bool) {
        self.checked = checked;
    }

    pub fn is_checked(&self) -> bool {
        self.checked
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Drops every recorded node and gradient.
    pub fn clear(&mut self) {
        self.nodes.clear();
        self.params.clear();
        self.grads.clear();
        self.consumed = false;
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn data(&self, v: Var) -> &[f64] {
        self.nodes[v.0].value.data()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// Gradient of the last backward pass with respect to `v`.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    fn push(&mut self, op: &'static str, value: Tensor, kind: Op, needs_grad: bool) -> Result<Var> {
        if self.checked && !value.is_finite() {
            return Err(Error::NonFinite { op });
        }
        self.nodes.push(Node {
            value,
            op: kind,
            needs_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    fn ng(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn rc(&self, v: Var) -> (usize, usize) {
        let t = &self.nodes[v.0].value;
        (t.rows(), t.cols())
    }

    /// Records an input tensor. Its `requires_grad` flag decides whether the
    /// tape keeps a gradient for it.
    pub fn leaf(&mut self, tensor: Tensor) -> Result<Var> {
        let ng = tensor.requires_grad();
        let value = Tensor::new(tensor.shape().to_vec(), tensor.into_data())?;
        self.push("leaf", value, Op::Leaf, ng)
    }

    pub fn constant(&mut self, tensor: Tensor) -> Result<Var> {
        self.leaf(tensor.with_requires_grad(false))
    }

    /// Copies a parameter onto the tape, once per tape.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Result<Var> {
        if let Some(&v) = self.params.get(&id) {
            return Ok(v);
        }
        let t = store.get(id);
        let value = Tensor::new(t.shape().to_vec(), t.data().to_vec())?;
        let v = self.push("param", value, Op::Param, self.track_params)?;
        self.params.insert(id, v);
        Ok(v)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.rc(a);
        let bt = &self.nodes[b.0].value;
        if bt.shape().len() != 2 || bt.shape()[0] != k {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                lhs: self.shape(a).to_vec(),
                rhs: bt.shape().to_vec(),
            });
        }
        let n = bt.cols();
        let ad = self.nodes[a.0].value.data();
        let bd = bt.data();
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let orow = &mut out[i * n..(i + 1) * n];
            for (kk, &aik) in ad[i * k..(i + 1) * k].iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                let brow = &bd[kk * n..(kk + 1) * n];
                orow.iter_mut().zip(brow).for_each(|(o, &bv)| *o += aik * bv);
            }
        }
        let ng = self.ng(a) || self.ng(b);
        self.push("matmul", Tensor::new(shape2(m, n), out)?, Op::MatMul(a, b), ng)
    }

    fn broadcast_check(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let ta = &self.nodes[a.0].value;
        let tb = &self.nodes[b.0].value;
        let same = ta.shape() == tb.shape();
        let row = tb.rows() == 1 && tb.cols() == ta.cols();
        if same || row {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                op,
                lhs: ta.shape().to_vec(),
                rhs: tb.shape().to_vec(),
            })
        }
    }

    fn zip_broadcast(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let ad = self.nodes[a.0].value.data();
        let bd = self.nodes[b.0].value.data();
        if ad.len() == bd.len() {
            ad.iter().zip(bd).map(|(&x, &y)| f(x, y)).collect()
        } else {
            let c = bd.len();
            ad.chunks(c)
                .flat_map(|row| row.iter().zip(bd).map(|(&x, &y)| f(x, y)))
                .collect()
        }
    }

    /// Elementwise sum; `b` may also be a single row broadcast over `a`.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.broadcast_check("add", a, b)?;
        let out = self.zip_broadcast(a, b, |x, y| x + y);
        let shape = self.shape(a).to_vec();
        let ng = self.ng(a) || self.ng(b);
        self.push("add", Tensor::new(shape, out)?, Op::Add(a, b), ng)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.broadcast_check("sub", a, b)?;
        let out = self.zip_broadcast(a, b, |x, y| x - y);
        let shape = self.shape(a).to_vec();
        let ng = self.ng(a) || self.ng(b);
        self.push("sub", Tensor::new(shape, out)?, Op::Sub(a, b), ng)
    }

    /// Elementwise product; `b` may also be a single row broadcast over `a`.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.broadcast_check("mul", a, b)?;
        let out = self.zip_broadcast(a, b, |x, y| x * y);
        let shape = self.shape(a).to_vec();
        let ng = self.ng(a) || self.ng(b);
        self.push("mul", Tensor::new(shape, out)?, Op::Mul(a, b), ng)
    }

    /// `scale * a + shift`, elementwise.
    pub fn affine(&mut self, a: Var, scale: f64, shift: f64) -> Result<Var> {
        let t = &self.nodes[a.0].value;
        let out = t.data().iter().map(|&x| scale * x + shift).collect();
        let shape = t.shape().to_vec();
        let ng = self.ng(a);
        self.push("affine", Tensor::new(shape, out)?, Op::Affine(a, scale), ng)
    }

    pub fn scale(&mut self, a: Var, scale: f64) -> Result<Var> {
        self.affine(a, scale, 0.0)
    }

    /// Concatenates along the last axis; all parts must have equal row counts.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts.first().ok_or(Error::InvalidShape {
            op: "concat",
            msg: "no inputs".into(),
        })?;
        let rows = self.rc(first).0;
        let mut cols = 0;
        for &p in parts {
            if self.rc(p).0 != rows {
                return Err(Error::ShapeMismatch {
                    op: "concat",
                    lhs: self.shape(first).to_vec(),
                    rhs: self.shape(p).to_vec(),
                });
            }
            cols += self.rc(p).1;
        }
        let mut out = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for &p in parts {
                out.extend_from_slice(self.nodes[p.0].value.row_slice(r));
            }
        }
        let ng = parts.iter().any(|&p| self.ng(p));
        self.push(
            "concat",
            Tensor::new(shape2(rows, cols), out)?,
            Op::Concat(parts.to_vec()),
            ng,
        )
    }

    /// Stacks along the first axis; all parts must have equal column counts.
    pub fn stack_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts.first().ok_or(Error::InvalidShape {
            op: "stack_rows",
            msg: "no inputs".into(),
        })?;
        let cols = self.rc(first).1;
        let mut out = Vec::new();
        for &p in parts {
            if self.rc(p).1 != cols {
                return Err(Error::ShapeMismatch {
                    op: "stack_rows",
                    lhs: self.shape(first).to_vec(),
                    rhs: self.shape(p).to_vec(),
                });
            }
            out.extend_from_slice(self.nodes[p.0].value.data());
        }
        let rows = out.len() / cols;
        let ng = parts.iter().any(|&p| self.ng(p));
        self.push(
            "stack_rows",
            Tensor::new(shape2(rows, cols), out)?,
            Op::StackRows(parts.to_vec()),
            ng,
        )
    }

    /// Columns `[start, start + len)` of every row.
    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let (rows, cols) = self.rc(a);
        if len == 0 || start + len > cols {
            return Err(Error::InvalidShape {
                op: "slice",
                msg: format!("columns {start}..{} out of {cols}", start + len),
            });
        }
        let t = &self.nodes[a.0].value;
        let mut out = Vec::with_capacity(rows * len);
        for r in 0..rows {
            out.extend_from_slice(&t.row_slice(r)[start..start + len]);
        }
        let ng = self.ng(a);
        self.push("slice", Tensor::new(shape2(rows, len), out)?, Op::Slice(a, start), ng)
    }

    /// Rows `[start, start + len)`.
    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let (rows, cols) = self.rc(a);
        if len == 0 || start + len > rows {
            return Err(Error::InvalidShape {
                op: "slice_rows",
                msg: format!("rows {start}..{} out of {rows}", start + len),
            });
        }
        let out = self.nodes[a.0].value.data()[start * cols..(start + len) * cols].to_vec();
        let ng = self.ng(a);
        self.push(
            "slice_rows",
            Tensor::new(shape2(len, cols), out)?,
            Op::SliceRows(a, start),
            ng,
        )
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let t = &self.nodes[a.0].value;
        if shape.iter().product::<usize>() != t.numel() {
            return Err(Error::ShapeMismatch {
                op: "reshape",
                lhs: t.shape().to_vec(),
                rhs: shape.to_vec(),
            });
        }
        let value = Tensor::new(shape.to_vec(), t.data().to_vec())?;
        let ng = self.ng(a);
        self.push("reshape", value, Op::Reshape(a), ng)
    }

    fn map(&mut self, op: &'static str, a: Var, kind: Op, f: impl Fn(f64) -> f64) -> Result<Var> {
        let t = &self.nodes[a.0].value;
        let out = t.data().iter().map(|&x| f(x)).collect();
        let shape = t.shape().to_vec();
        let ng = self.ng(a);
        self.push(op, Tensor::new(shape, out)?, kind, ng)
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        self.map("tanh", a, Op::Tanh(a), f64::tanh)
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        self.map("sigmoid", a, Op::Sigmoid(a), sigmoid)
    }

    /// Natural log of `max(x, clamp)`.
    pub fn log(&mut self, a: Var, clamp: f64) -> Result<Var> {
        self.map("log", a, Op::Log(a, clamp), move |x| x.max(clamp).ln())
    }

    /// Softmax over the last axis.
    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let t = &self.nodes[a.0].value;
        let c = t.cols();
        let mut out = t.data().to_vec();
        for row in out.chunks_mut(c) {
            softmax_in_place(row);
        }
        let shape = t.shape().to_vec();
        let ng = self.ng(a);
        self.push("softmax", Tensor::new(shape, out)?, Op::Softmax(a), ng)
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let s = self.nodes[a.0].value.data().iter().sum();
        let ng = self.ng(a);
        self.push("sum", Tensor::scalar(s), Op::Sum(a), ng)
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let t = &self.nodes[a.0].value;
        let s = t.data().iter().sum::<f64>() / t.numel() as f64;
        let ng = self.ng(a);
        self.push("mean", Tensor::scalar(s), Op::Mean(a), ng)
    }

    /// Gathers rows of `table` by id.
    pub fn embedding(&mut self, table: Var, ids: &[usize]) -> Result<Var> {
        let (rows, cols) = self.rc(table);
        if ids.is_empty() {
            return Err(Error::InvalidShape {
                op: "embedding",
                msg: "empty id list".into(),
            });
        }
        if let Some(&bad) = ids.iter().find(|&&i| i >= rows) {
            return Err(Error::InvalidShape {
                op: "embedding",
                msg: format!("id {bad} out of range for {rows} rows"),
            });
        }
        let t = &self.nodes[table.0].value;
        let mut out = Vec::with_capacity(ids.len() * cols);
        for &i in ids {
            out.extend_from_slice(t.row_slice(i));
        }
        let ng = self.ng(table);
        self.push(
            "embedding",
            Tensor::new(shape2(ids.len(), cols), out)?,
            Op::Embedding(table, ids.to_vec()),
            ng,
        )
    }

    /// `sparse · w` for a constant sparse left operand.
    pub fn sparse_matmul(&mut self, sparse: Rc<SparseMatrix>, w: Var) -> Result<Var> {
        let wt = &self.nodes[w.0].value;
        if wt.shape().len() != 2 || wt.shape()[0] != sparse.cols() {
            return Err(Error::ShapeMismatch {
                op: "sparse_matmul",
                lhs: vec![sparse.rows(), sparse.cols()],
                rhs: wt.shape().to_vec(),
            });
        }
        let n = wt.cols();
        let wd = wt.data();
        let mut out = vec![0.0; sparse.rows() * n];
        for (i, orow) in out.chunks_mut(n).enumerate() {
            for (j, v) in sparse.row(i) {
                let wrow = &wd[j * n..(j + 1) * n];
                orow.iter_mut().zip(wrow).for_each(|(o, &x)| *o += v * x);
            }
        }
        let rows = sparse.rows();
        let ng = self.ng(w);
        self.push(
            "sparse_matmul",
            Tensor::new(shape2(rows, n), out)?,
            Op::SparseMatMul(sparse, w),
            ng,
        )
    }

    /// Computes gradients of the scalar `loss` for every tracked node.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.consumed {
            return Err(Error::TapeConsumed);
        }
        if self.nodes.is_empty() {
            return Err(Error::EmptyTape);
        }
        let lt = &self.nodes[loss.0].value;
        if !lt.is_scalar() {
            return Err(Error::NonScalarLoss(lt.shape().to_vec()));
        }
        self.consumed = true;
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            if self.nodes[i].needs_grad {
                self.propagate(i, &g, &mut grads);
            }
            grads[i] = Some(g);
        }
        self.grads = grads;
        Ok(())
    }

    /// Runs [`Tape::backward`] and adds parameter gradients into `store`.
    pub fn backward_into(&mut self, loss: Var, store: &mut ParamStore) -> Result<()> {
        self.backward(loss)?;
        for (&id, &v) in &self.params {
            if let Some(g) = self.grads[v.0].as_deref() {
                store.get_mut(id).accumulate_grad(g);
            }
        }
        Ok(())
    }

    fn propagate(&self, i: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let nodes = &self.nodes;
        let needs = |v: Var| nodes[v.0].needs_grad;
        let val = |v: Var| &nodes[v.0].value;
        let out = &nodes[i].value;
        match &nodes[i].op {
            Op::Leaf | Op::Param => {}
            Op::MatMul(a, b) => {
                let (m, k) = (val(*a).rows(), val(*a).cols());
                let n = val(*b).cols();
                if needs(*a) {
                    let bd = val(*b).data();
                    let ga = grad_buf(grads, *a, m * k);
                    for r in 0..m {
                        let grow = &g[r * n..(r + 1) * n];
                        for kk in 0..k {
                            let brow = &bd[kk * n..(kk + 1) * n];
                            ga[r * k + kk] += dot(grow, brow);
                        }
                    }
                }
                if needs(*b) {
                    let ad = val(*a).data();
                    let gb = grad_buf(grads, *b, k * n);
                    for r in 0..m {
                        let grow = &g[r * n..(r + 1) * n];
                        for kk in 0..k {
                            let aik = ad[r * k + kk];
                            if aik != 0.0 {
                                axpy(&mut gb[kk * n..(kk + 1) * n], aik, grow);
                            }
                        }
                    }
                }
            }
            Op::Add(a, b) | Op::Sub(a, b) => {
                let sign = if matches!(nodes[i].op, Op::Sub(..)) { -1.0 } else { 1.0 };
                if needs(*a) {
                    axpy(grad_buf(grads, *a, g.len()), 1.0, g);
                }
                if needs(*b) {
                    let nb = val(*b).numel();
                    let gb = grad_buf(grads, *b, nb);
                    for chunk in g.chunks(nb) {
                        axpy(gb, sign, chunk);
                    }
                }
            }
            Op::Mul(a, b) => {
                let ad = val(*a).data();
                let bd = val(*b).data();
                let nb = bd.len();
                if needs(*a) {
                    let ga = grad_buf(grads, *a, ad.len());
                    for (idx, gv) in g.iter().enumerate() {
                        ga[idx] += gv * bd[idx % nb];
                    }
                }
                if needs(*b) {
                    let gb = grad_buf(grads, *b, nb);
                    for (idx, gv) in g.iter().enumerate() {
                        gb[idx % nb] += gv * ad[idx];
                    }
                }
            }
            Op::Affine(a, scale) => axpy(grad_buf(grads, *a, g.len()), *scale, g),
            Op::Concat(parts) => {
                let rows = out.rows();
                let cols = out.cols();
                let mut offset = 0;
                for &p in parts {
                    let pc = val(p).cols();
                    if needs(p) {
                        let gp = grad_buf(grads, p, rows * pc);
                        for r in 0..rows {
                            let src = &g[r * cols + offset..r * cols + offset + pc];
                            axpy(&mut gp[r * pc..(r + 1) * pc], 1.0, src);
                        }
                    }
                    offset += pc;
                }
            }
            Op::StackRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let n = val(p).numel();
                    if needs(p) {
                        axpy(grad_buf(grads, p, n), 1.0, &g[offset..offset + n]);
                    }
                    offset += n;
                }
            }
            Op::Slice(a, start) => {
                let (rows, cols) = (val(*a).rows(), val(*a).cols());
                let len = out.cols();
                let ga = grad_buf(grads, *a, rows * cols);
                for r in 0..rows {
                    axpy(
                        &mut ga[r * cols + start..r * cols + start + len],
                        1.0,
                        &g[r * len..(r + 1) * len],
                    );
                }
            }
            Op::SliceRows(a, start) => {
                let cols = val(*a).cols();
                let ga = grad_buf(grads, *a, val(*a).numel());
                axpy(&mut ga[start * cols..start * cols + g.len()], 1.0, g);
            }
            Op::Reshape(a) => axpy(grad_buf(grads, *a, g.len()), 1.0, g),
            Op::Tanh(a) => {
                let ga = grad_buf(grads, *a, g.len());
                for ((ga, &gv), &y) in ga.iter_mut().zip(g).zip(out.data()) {
                    *ga += gv * (1.0 - y * y);
                }
            }
            Op::Sigmoid(a) => {
                let ga = grad_buf(grads, *a, g.len());
                for ((ga, &gv), &y) in ga.iter_mut().zip(g).zip(out.data()) {
                    *ga += gv * y * (1.0 - y);
                }
            }
            Op::Log(a, clamp) => {
                let xd = val(*a).data();
                let ga = grad_buf(grads, *a, g.len());
                for ((ga, &gv), &x) in ga.iter_mut().zip(g).zip(xd) {
                    if x > *clamp {
                        *ga += gv / x;
                    }
                }
            }
            Op::Softmax(a) => {
                let c = out.cols();
                let ga = grad_buf(grads, *a, g.len());
                for ((gar, gr), yr) in ga.chunks_mut(c).zip(g.chunks(c)).zip(out.data().chunks(c)) {
                    let inner = dot(gr, yr);
                    for ((ga, &gv), &y) in gar.iter_mut().zip(gr).zip(yr) {
                        *ga += y * (gv - inner);
                    }
                }
            }
            Op::Sum(a) => {
                let ga = grad_buf(grads, *a, val(*a).numel());
                ga.iter_mut().for_each(|x| *x += g[0]);
            }
            Op::Mean(a) => {
                let n = val(*a).numel();
                let ga = grad_buf(grads, *a, n);
                let d = g[0] / n as f64;
                ga.iter_mut().for_each(|x| *x += d);
            }
            Op::Embedding(table, ids) => {
                let cols = val(*table).cols();
                let gt = grad_buf(grads, *table, val(*table).numel());
                for (r, &id) in ids.iter().enumerate() {
                    axpy(&mut gt[id * cols..(id + 1) * cols], 1.0, &g[r * cols..(r + 1) * cols]);
                }
            }
            Op::SparseMatMul(sparse, w) => {
                let n = out.cols();
                let gw = grad_buf(grads, *w, val(*w).numel());
                for r in 0..sparse.rows() {
                    let grow = &g[r * n..(r + 1) * n];
                    for (j, v) in sparse.row(r) {
                        axpy(&mut gw[j * n..(j + 1) * n], v, grow);
                    }
                }
            }
        }
    }
}

fn grad_buf(grads: &mut [Option<Vec<f64>>], v: Var, len: usize) -> &mut [f64] {
    grads[v.0].get_or_insert_with(|| vec![0.0; len])
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(y, &x)| *y += alpha * x);
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    row.iter_mut().for_each(|v| *v /= total);
}
