use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::ndcore::seeded_rng;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub dev: Vec<T>,
    pub test: Vec<T>,
}

/// Seeded shuffle followed by an 80/10/10 cut (`floor(0.8n)`, `floor(0.1n)`,
/// remainder).
pub fn split_corpus<T: Clone>(items: &[T], seed: u64) -> Result<Split<T>> {
    let n = items.len();
    if n < 10 {
        return Err(Error::Data(format!("need at least 10 examples to split, got {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded_rng(seed));
    let n_train = n * 8 / 10;
    let n_dev = n / 10;
    let pick = |idx: &[usize]| idx.iter().map(|&i| items[i].clone()).collect::<Vec<_>>();
    Ok(Split {
        train: pick(&order[..n_train]),
        dev: pick(&order[n_train..n_train + n_dev]),
        test: pick(&order[n_train + n_dev..]),
    })
}
