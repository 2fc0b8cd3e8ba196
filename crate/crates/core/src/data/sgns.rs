//! Skip-gram with negative sampling over gold label sequences.

use rand::Rng;

use super::corpus::Example;
use crate::error::{Error, Result};
use crate::ndcore::{seeded_rng, sigmoid, Tensor};

#[derive(Clone, Debug, PartialEq)]
pub struct SgnsOptions {
    pub negatives: usize,
    pub epochs: usize,
    /// Initial learning rate, decayed linearly towards zero.
    pub lr: f64,
}

impl Default for SgnsOptions {
    fn default() -> Self {
        SgnsOptions {
            negatives: 5,
            epochs: 5,
            lr: 0.025,
        }
    }
}

/// Learns `num_labels × dim` label vectors where every other label of the
/// same gold sequence is a context.
///
/// Rows of labels that never occur keep their random initialisation.
pub fn pretrain_label_embeddings(
    train: &[Example],
    num_labels: usize,
    dim: usize,
    seed: u64,
    opts: &SgnsOptions,
) -> Result<Tensor> {
    if train.is_empty() {
        return Err(Error::Data("label pretraining needs a nonempty training set".into()));
    }
    if dim < 2 {
        return Err(Error::Config(format!("embedding dim must be at least 2, got {dim}")));
    }
    let mut rng = seeded_rng(seed);
    let bound = 0.5 / dim as f64;
    let mut input: Vec<f64> = (0..num_labels * dim).map(|_| rng.gen_range(-bound..bound)).collect();
    let mut output = vec![0.0; num_labels * dim];

    let mut counts = vec![0usize; num_labels];
    for ex in train {
        for &l in &ex.labels {
            if l >= num_labels {
                return Err(Error::Data(format!("label id {l} out of range {num_labels}")));
            }
            counts[l] += 1;
        }
    }
    let unseen = counts.iter().skip(super::vocab::NUM_RESERVED).filter(|&&c| c == 0).count();
    if unseen > 0 {
        log::warn!("{unseen} labels never occur in training; their embeddings stay random");
    }
    // Unigram^0.75 table for negatives.
    let mut cumulative = Vec::with_capacity(num_labels);
    let mut acc = 0.0;
    for &c in &counts {
        acc += (c as f64).powf(0.75);
        cumulative.push(acc);
    }

    let pairs_per_epoch: usize = train
        .iter()
        .map(|e| e.labels.len() * e.labels.len().saturating_sub(1))
        .sum();
    let total = (pairs_per_epoch * opts.epochs).max(1) as f64;
    let mut done = 0usize;
    let mut hidden_err = vec![0.0; dim];
    for _ in 0..opts.epochs {
        for ex in train {
            for (i, &center) in ex.labels.iter().enumerate() {
                for (j, &context) in ex.labels.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let lr = opts.lr * (1.0 - done as f64 / total).max(1e-4);
                    done += 1;
                    hidden_err.iter_mut().for_each(|v| *v = 0.0);
                    let c = &input[center * dim..(center + 1) * dim];
                    for k in 0..=opts.negatives {
                        let (target, label) = if k == 0 {
                            (context, 1.0)
                        } else {
                            let u = rng.gen_range(0.0..acc);
                            let t = cumulative.partition_point(|&x| x <= u).min(num_labels - 1);
                            if t == context {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let out = &mut output[target * dim..(target + 1) * dim];
                        let score: f64 = c.iter().zip(out.iter()).map(|(a, b)| a * b).sum();
                        let g = (label - sigmoid(score)) * lr;
                        for d in 0..dim {
                            hidden_err[d] += g * out[d];
                            out[d] += g * c[d];
                        }
                    }
                    input[center * dim..(center + 1) * dim]
                        .iter_mut()
                        .zip(&hidden_err)
                        .for_each(|(v, e)| *v += e);
                }
            }
        }
    }
    Tensor::matrix(num_labels, dim, input)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(labels: &[usize]) -> Example {
        Example {
            word: String::new(),
            descriptions: vec![vec![3]],
            labels: labels.to_vec(),
        }
    }

    #[test]
    fn shape_includes_reserved_rows() {
        let train = vec![ex(&[3, 4]), ex(&[5])];
        let e = pretrain_label_embeddings(&train, 6 + 3, 16, 1, &SgnsOptions::default()).unwrap();
        assert_eq!(e.shape(), &[9, 16]);
        assert!(e.is_finite());
    }

    #[test]
    fn zero_epochs_returns_initialisation() {
        let train = vec![ex(&[3, 4])];
        let opts = SgnsOptions {
            epochs: 0,
            ..Default::default()
        };
        let a = pretrain_label_embeddings(&train, 5, 4, 9, &opts).unwrap();
        let mut rng = seeded_rng(9);
        let init: Vec<f64> = (0..20).map(|_| rng.gen_range(-0.125..0.125)).collect();
        assert_eq!(a.data(), &init[..]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(pretrain_label_embeddings(&[], 5, 4, 0, &SgnsOptions::default()).is_err());
        assert!(pretrain_label_embeddings(&[ex(&[3])], 5, 1, 0, &SgnsOptions::default()).is_err());
    }
}
