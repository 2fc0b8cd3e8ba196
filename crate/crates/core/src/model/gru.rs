use rand::Rng;

use crate::error::Result;
use crate::ndcore::{ParamId, ParamStore, Tape, Tensor, Var};

/// Gated recurrent unit.
///
/// ```text
/// z = σ(x Wz + h Uz + bz)
/// r = σ(x Wr + h Ur + br)
/// n = tanh(x Wn + r ⊙ (h Un) + bn)
/// h' = (1 - z) ⊙ n + z ⊙ h
/// ```
///
/// The three input blocks live side by side in `wx` (and `wh`), ordered
/// update, reset, candidate.
#[derive(Clone, Debug)]
pub struct Gru {
    pub wx: ParamId,
    pub wh: ParamId,
    pub b: ParamId,
    pub hidden: usize,
}

impl Gru {
    pub fn new<R: Rng>(store: &mut ParamStore, prefix: &str, input: usize, hidden: usize, rng: &mut R) -> Self {
        Gru {
            wx: store.uniform(format!("{prefix}.wx"), &[input, 3 * hidden], rng),
            wh: store.uniform(format!("{prefix}.wh"), &[hidden, 3 * hidden], rng),
            b: store.uniform(format!("{prefix}.b"), &[1, 3 * hidden], rng),
            hidden,
        }
    }

    /// `x Wx + b` for every row of `x` at once.
    pub fn project_inputs(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        let wx = tape.param(store, self.wx)?;
        let b = tape.param(store, self.b)?;
        let gx = tape.matmul(x, wx)?;
        tape.add(gx, b)
    }

    /// One recurrence step from a projected input row `gx` (`1 × 3H`).
    pub fn step(&self, tape: &mut Tape, store: &ParamStore, gx: Var, h: Var) -> Result<Var> {
        let hd = self.hidden;
        let wh = tape.param(store, self.wh)?;
        let gh = tape.matmul(h, wh)?;
        let gx_zr = tape.slice(gx, 0, 2 * hd)?;
        let gh_zr = tape.slice(gh, 0, 2 * hd)?;
        let pre = tape.add(gx_zr, gh_zr)?;
        let zr = tape.sigmoid(pre)?;
        let z = tape.slice(zr, 0, hd)?;
        let r = tape.slice(zr, hd, hd)?;
        let gx_n = tape.slice(gx, 2 * hd, hd)?;
        let gh_n = tape.slice(gh, 2 * hd, hd)?;
        let gated = tape.mul(r, gh_n)?;
        let pre_n = tape.add(gx_n, gated)?;
        let n = tape.tanh(pre_n)?;
        let diff = tape.sub(h, n)?;
        let keep = tape.mul(z, diff)?;
        tape.add(n, keep)
    }

    pub fn zero_state(&self, tape: &mut Tape) -> Result<Var> {
        tape.constant(Tensor::zeros(&[1, self.hidden]))
    }
}
