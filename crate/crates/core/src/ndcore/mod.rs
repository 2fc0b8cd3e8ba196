//! Dense tensors, reverse-mode differentiation and optimisation.

mod adam;
pub mod checkpoint;
mod gradcheck;
mod params;
mod sparse;
mod tape;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{grad_check, relative_error, GradCheckOptions, GradCheckReport};
pub use params::{ParamId, ParamStore, INIT_BOUND};
pub use sparse::SparseMatrix;
pub use tape::{sigmoid, softmax_in_place, Tape, Var};
pub use tensor::Tensor;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator every seeded component draws from.
pub type Rng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream for a named sub-component from a root seed.
pub fn derive_seed(root: u64, label: &str) -> u64 {
    // FNV-1a over the label, mixed with the root.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ root.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}
