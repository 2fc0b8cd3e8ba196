//! Step targets and sequence losses for label decoding.
//!
//! The soft target at step `t` averages the one-hot gold target with the
//! uniform distribution over the example's whole label bag:
//!
//! ```text
//! y'_t = (q / M + y_t) / 2
//! ```
//!
//! where `q` is the bag indicator and `M` the number of gold labels. The end
//! marker never enters the bag, so at the final step half of the mass sits
//! on the end marker and the other half is spread over the bag.

use std::str::FromStr;

use crate::data::EOS;
use crate::error::{Error, Result};
use crate::ndcore::{Tape, Tensor, Var};

/// Lower bound applied to probabilities before taking logs.
pub const LOG_CLAMP: f64 = 1e-12;

/// Bag-of-labels indicator of one gold sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelBag {
    indicator: Vec<f64>,
    size: usize,
}

impl LabelBag {
    pub fn new(labels: &[usize], vocab_size: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Data("label bag needs at least one label".into()));
        }
        let mut indicator = vec![0.0; vocab_size];
        for &l in labels {
            if l >= vocab_size {
                return Err(Error::Data(format!("label id {l} out of range {vocab_size}")));
            }
            if l == EOS {
                return Err(Error::Data("the end marker cannot be part of a label bag".into()));
            }
            if indicator[l] != 0.0 {
                return Err(Error::Data(format!("label id {l} repeated in bag")));
            }
            indicator[l] = 1.0;
        }
        Ok(LabelBag {
            indicator,
            size: labels.len(),
        })
    }

    pub fn indicator(&self) -> &[f64] {
        &self.indicator
    }

    /// Number of gold labels, end marker excluded.
    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn vocab_size(&self) -> usize {
        self.indicator.len()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.indicator.get(id).is_some_and(|&v| v > 0.0)
    }
}

/// Maps the one-hot gold id of a step to a target distribution.
pub trait Projection {
    fn project(&self, gold: usize, bag: &LabelBag) -> Vec<f64>;
}

/// Plain one-hot targets.
#[derive(Clone, Copy, Debug, Default)]
pub struct OneHot;

impl Projection for OneHot {
    fn project(&self, gold: usize, bag: &LabelBag) -> Vec<f64> {
        let mut y = vec![0.0; bag.vocab_size()];
        y[gold] = 1.0;
        y
    }
}

/// Average of the one-hot target and the normalised bag.
#[derive(Clone, Copy, Debug, Default)]
pub struct HalfBag;

impl Projection for HalfBag {
    fn project(&self, gold: usize, bag: &LabelBag) -> Vec<f64> {
        let m = bag.len() as f64;
        let mut y: Vec<f64> = bag.indicator().iter().map(|q| q / m / 2.0).collect();
        y[gold] += 0.5;
        y
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LossMode {
    #[default]
    Soft,
    Hard,
}

impl LossMode {
    pub fn projection(self) -> &'static dyn Projection {
        match self {
            LossMode::Soft => &HalfBag,
            LossMode::Hard => &OneHot,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LossMode::Soft => "soft",
            LossMode::Hard => "hard",
        }
    }
}

impl FromStr for LossMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "soft" => Ok(LossMode::Soft),
            "hard" => Ok(LossMode::Hard),
            other => Err(Error::Config(format!("loss.mode must be soft or hard, got `{other}`"))),
        }
    }
}

/// Soft target for a one-hot step target `y_t`.
pub fn soft_target(y_t: &[f64], bag: &LabelBag) -> Result<Vec<f64>> {
    if y_t.len() != bag.vocab_size() {
        return Err(Error::ShapeMismatch {
            op: "soft_target",
            lhs: vec![y_t.len()],
            rhs: vec![bag.vocab_size()],
        });
    }
    let ones: Vec<usize> = (0..y_t.len()).filter(|&i| y_t[i] == 1.0).collect();
    let zeros = y_t.iter().filter(|&&v| v == 0.0).count();
    if ones.len() != 1 || zeros + 1 != y_t.len() {
        return Err(Error::Data("step target is not one-hot".into()));
    }
    Ok(HalfBag.project(ones[0], bag))
}

/// Cross entropy of each step distribution against its projected target,
/// summed over steps.
///
/// `gold` holds one id per step, the end marker included.
pub fn sequence_loss_with(
    tape: &mut Tape,
    step_probs: &[Var],
    gold: &[usize],
    bag: &LabelBag,
    projection: &dyn Projection,
) -> Result<Var> {
    if step_probs.len() != gold.len() {
        return Err(Error::ShapeMismatch {
            op: "sequence_loss",
            lhs: vec![step_probs.len()],
            rhs: vec![gold.len()],
        });
    }
    if step_probs.is_empty() {
        return Err(Error::Data("sequence loss needs at least one step".into()));
    }
    let v = bag.vocab_size();
    let mut targets = Vec::with_capacity(gold.len() * v);
    for &g in gold {
        if g >= v {
            return Err(Error::Data(format!("gold id {g} out of range {v}")));
        }
        targets.extend(projection.project(g, bag));
    }
    let probs = tape.stack_rows(step_probs)?;
    let targets = tape.constant(Tensor::matrix(gold.len(), v, targets)?)?;
    let logp = tape.log(probs, LOG_CLAMP)?;
    let weighted = tape.mul(logp, targets)?;
    let total = tape.sum(weighted)?;
    tape.scale(total, -1.0)
}

pub fn sequence_loss(
    tape: &mut Tape,
    step_probs: &[Var],
    gold: &[usize],
    bag: &LabelBag,
    mode: LossMode,
) -> Result<Var> {
    sequence_loss_with(tape, step_probs, gold, bag, mode.projection())
}

/// Evaluates [`sequence_loss`] on fixed distributions.
pub fn sequence_loss_value(
    step_probs: &[Vec<f64>],
    gold: &[usize],
    bag: &LabelBag,
    mode: LossMode,
) -> Result<f64> {
    let mut tape = Tape::inference();
    let vars = step_probs
        .iter()
        .map(|p| tape.constant(Tensor::row(p.clone())?))
        .collect::<Result<Vec<_>>>()?;
    let loss = sequence_loss(&mut tape, &vars, gold, bag, mode)?;
    Ok(tape.value(loss).item())
}

/// Gold ids per decoding step: the labels followed by the end marker.
pub fn with_eos(labels: &[usize]) -> Vec<usize> {
    labels.iter().copied().chain(std::iter::once(EOS)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const V: usize = 6;
    const S1: usize = 3;
    const S2: usize = 4;

    fn one_hot(i: usize) -> Vec<f64> {
        let mut y = vec![0.0; V];
        y[i] = 1.0;
        y
    }

    #[test]
    fn two_label_bag() {
        let bag = LabelBag::new(&[S1, S2], V).unwrap();
        let y = soft_target(&one_hot(S1), &bag).unwrap();
        assert_eq!(y, vec![0.0, 0.0, 0.0, 0.75, 0.25, 0.0]);
        let y = soft_target(&one_hot(EOS), &bag).unwrap();
        assert_eq!(y, vec![0.0, 0.0, 0.5, 0.25, 0.25, 0.0]);
    }

    #[test]
    fn single_label_reduces_to_one_hot() {
        let bag = LabelBag::new(&[S1], V).unwrap();
        assert_eq!(soft_target(&one_hot(S1), &bag).unwrap(), one_hot(S1));
    }

    #[test]
    fn rejects_non_one_hot() {
        let bag = LabelBag::new(&[S1], V).unwrap();
        let mut y = one_hot(S1);
        y[S2] = 0.5;
        assert!(soft_target(&y, &bag).is_err());
        assert!(soft_target(&[0.0; V], &bag).is_err());
        assert!(LabelBag::new(&[S1, EOS], V).is_err());
        assert!(LabelBag::new(&[S1, S1], V).is_err());
    }

    #[test]
    fn entropy_floor_when_prediction_matches_target() {
        let bag = LabelBag::new(&[S1, S2], V).unwrap();
        let gold = with_eos(&[S1, S2]);
        let probs: Vec<Vec<f64>> = gold.iter().map(|&g| HalfBag.project(g, &bag)).collect();
        let entropy: f64 = probs
            .iter()
            .flat_map(|p| p.iter())
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.ln())
            .sum();
        let loss = sequence_loss_value(&probs, &gold, &bag, LossMode::Soft).unwrap();
        assert!((loss - entropy).abs() < 1e-12);
        assert!(loss > 0.0);
    }

    #[test]
    fn hard_loss_vanishes_on_exact_prediction() {
        let bag = LabelBag::new(&[S1, S2], V).unwrap();
        let gold = with_eos(&[S1, S2]);
        let probs: Vec<Vec<f64>> = gold.iter().map(|&g| one_hot(g)).collect();
        let loss = sequence_loss_value(&probs, &gold, &bag, LossMode::Hard).unwrap();
        assert!(loss.abs() < 1e-12);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let bag = LabelBag::new(&[S1], V).unwrap();
        let r = sequence_loss_value(&[one_hot(S1)], &with_eos(&[S1]), &bag, LossMode::Soft);
        assert!(r.is_err());
    }
}
