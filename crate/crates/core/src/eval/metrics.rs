use std::collections::HashSet;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Micro-averaged scores with the counts they came from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub examples: usize,
}

/// Rounds to four decimal places.
pub fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl MetricReport {
    /// Derives the scores from pooled counts. Zero denominators give zero.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, exact: usize, examples: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        MetricReport {
            precision,
            recall,
            f1,
            accuracy: ratio(exact, examples),
            tp,
            fp,
            fn_,
            examples,
        }
    }

    /// The same report with every score rounded to four decimals.
    pub fn rounded(&self) -> Self {
        MetricReport {
            precision: round4(self.precision),
            recall: round4(self.recall),
            f1: round4(self.f1),
            accuracy: round4(self.accuracy),
            ..*self
        }
    }
}

fn check_lengths(predictions: usize, golds: usize) -> Result<()> {
    if predictions != golds {
        return Err(Error::Data(format!(
            "{predictions} predictions for {golds} gold label sets"
        )));
    }
    Ok(())
}

/// Pools true/false positives and false negatives over all examples.
/// Sequences are compared as sets.
pub fn micro_prf<T: Eq + Hash>(predictions: &[Vec<T>], golds: &[Vec<T>]) -> Result<MetricReport> {
    check_lengths(predictions.len(), golds.len())?;
    let (mut tp, mut fp, mut fn_, mut exact) = (0, 0, 0, 0);
    for (p, g) in predictions.iter().zip(golds) {
        let p: HashSet<&T> = p.iter().collect();
        let g: HashSet<&T> = g.iter().collect();
        let hit = p.intersection(&g).count();
        tp += hit;
        fp += p.len() - hit;
        fn_ += g.len() - hit;
        if p == g {
            exact += 1;
        }
    }
    Ok(MetricReport::from_counts(tp, fp, fn_, exact, golds.len()))
}

/// Fraction of examples whose predicted set equals the gold set.
pub fn exact_match_accuracy<T: Eq + Hash>(predictions: &[Vec<T>], golds: &[Vec<T>]) -> Result<f64> {
    Ok(micro_prf(predictions, golds)?.accuracy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sets(v: &[&[&str]]) -> Vec<Vec<String>> {
        v.iter().map(|s| s.iter().map(|x| x.to_string()).collect()).collect()
    }

    #[test]
    fn one_shared_label() {
        let r = micro_prf(&sets(&[&["a", "c"]]), &sets(&[&["a", "b"]])).unwrap();
        assert_eq!((r.tp, r.fp, r.fn_), (1, 1, 1));
        assert_eq!((r.precision, r.recall, r.f1), (0.5, 0.5, 0.5));
    }

    #[test]
    fn empty_predictions_score_zero() {
        let r = micro_prf(&sets(&[&[], &[]]), &sets(&[&["a"], &["b"]])).unwrap();
        assert_eq!((r.precision, r.recall, r.f1, r.accuracy), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn accuracy_needs_whole_set() {
        let g = sets(&[&["a", "b"], &["c"], &["d"], &["e"]]);
        let p = sets(&[&["b", "a"], &["a"], &[], &["e", "d"]]);
        assert_eq!(exact_match_accuracy(&p, &g).unwrap(), 0.25);
        assert_eq!(exact_match_accuracy(&sets(&[&["a"]]), &sets(&[&["a", "b"]])).unwrap(), 0.0);
    }

    #[test]
    fn duplicates_count_once() {
        let r = micro_prf(&sets(&[&["a", "a"]]), &sets(&[&["a"]])).unwrap();
        assert_eq!((r.tp, r.fp, r.fn_, r.accuracy), (1, 0, 0, 1.0));
    }

    #[test]
    fn length_mismatch() {
        assert!(micro_prf(&sets(&[&["a"]]), &sets(&[])).is_err());
    }

    #[test]
    fn rounding() {
        assert_eq!(round4(2.0 / 3.0), 0.6667);
    }
}
