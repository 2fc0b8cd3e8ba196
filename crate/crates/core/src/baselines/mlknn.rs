use super::features::{dot, norm, FeatureVector};
use crate::error::{Error, Result};

/// Multi-label k-nearest neighbours with Laplace-smoothed counting.
///
/// For every label `l`, training examples are bucketed by how many of their
/// k nearest neighbours (leave-one-out) carry `l`, separately for examples
/// with and without `l`. A query predicts `l` when
/// `P(H1) P(E_c | H1) > P(H0) P(E_c | H0)` for its own neighbour count `c`.
#[derive(Clone, Debug)]
pub struct MlKnn {
    pub k: usize,
    pub smooth: f64,
    train: Vec<FeatureVector>,
    norms: Vec<f64>,
    num_labels: usize,
    indicator: Vec<Vec<bool>>,
    /// Training examples carrying each label.
    positives: Vec<usize>,
    /// `[label][count]` tallies for examples with / without the label.
    with_label: Vec<Vec<usize>>,
    without_label: Vec<Vec<usize>>,
}

impl MlKnn {
    /// `labels[i]` holds the label ids of training example `i`; ids must be
    /// below `num_labels`.
    pub fn fit(
        train: Vec<FeatureVector>,
        labels: &[Vec<usize>],
        num_labels: usize,
        k: usize,
        smooth: f64,
    ) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Data("ML-KNN needs a nonempty training set".into()));
        }
        if train.len() != labels.len() {
            return Err(Error::Data(format!(
                "{} feature vectors for {} label sets",
                train.len(),
                labels.len()
            )));
        }
        if k == 0 || k > train.len() {
            return Err(Error::Config(format!(
                "k must lie in 1..={}, got {k}",
                train.len()
            )));
        }
        if smooth.is_nan() || smooth <= 0.0 {
            return Err(Error::Config(format!("smoothing must be positive, got {smooth}")));
        }
        let mut indicator = vec![vec![false; num_labels]; train.len()];
        for (row, ls) in indicator.iter_mut().zip(labels) {
            for &l in ls {
                if l >= num_labels {
                    return Err(Error::Data(format!("label id {l} out of range {num_labels}")));
                }
                row[l] = true;
            }
        }
        let norms = train.iter().map(norm).collect();
        let mut model = MlKnn {
            k,
            smooth,
            train,
            norms,
            num_labels,
            indicator,
            positives: vec![0; num_labels],
            with_label: vec![vec![0; k + 1]; num_labels],
            without_label: vec![vec![0; k + 1]; num_labels],
        };
        let all_counts: Vec<Vec<usize>> = (0..model.train.len())
            .map(|i| {
                let neighbours = model.neighbours_of(&model.train[i], model.norms[i], Some(i));
                model.label_counts(&neighbours)
            })
            .collect();
        for (i, counts) in all_counts.iter().enumerate() {
            for (l, &c) in counts.iter().enumerate() {
                if model.indicator[i][l] {
                    model.positives[l] += 1;
                    model.with_label[l][c] += 1;
                } else {
                    model.without_label[l][c] += 1;
                }
            }
        }
        Ok(model)
    }

    fn label_counts(&self, neighbours: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.num_labels];
        for &n in neighbours {
            for (c, &has) in counts.iter_mut().zip(&self.indicator[n]) {
                *c += usize::from(has);
            }
        }
        counts
    }

    fn neighbours_of(&self, query: &FeatureVector, query_norm: f64, exclude: Option<usize>) -> Vec<usize> {
        let mut scored: Vec<(f64, usize)> = self
            .train
            .iter()
            .enumerate()
            .filter(|&(i, _)| Some(i) != exclude)
            .map(|(i, x)| {
                let n = query_norm * self.norms[i];
                let d = if n == 0.0 { 1.0 } else { 1.0 - dot(query, x) / n };
                (d, i)
            })
            .collect();
        let k = self.k.min(scored.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < scored.len() {
            scored.select_nth_unstable_by(k, cmp);
            scored.truncate(k);
        }
        scored.sort_unstable_by(cmp);
        scored.into_iter().map(|(_, i)| i).collect()
    }

    /// Indices of the k nearest training examples, nearest first; distance
    /// ties go to the lower index.
    pub fn neighbours(&self, query: &FeatureVector) -> Vec<usize> {
        self.neighbours_of(query, norm(query), None)
    }

    /// Whether label `l` wins for a query whose neighbours carry it `c` times.
    ///
    /// Both sides share the prior denominator, so the comparison is done on
    /// cross-multiplied numerators; with integer smoothing it is exact.
    pub fn decide(&self, l: usize, c: usize) -> bool {
        let s = self.smooth;
        let n = self.train.len();
        let pos = self.positives[l] as f64;
        let neg = (n - self.positives[l]) as f64;
        let total1: usize = self.with_label[l].iter().sum();
        let total0: usize = self.without_label[l].iter().sum();
        let den1 = s * (self.k + 1) as f64 + total1 as f64;
        let den0 = s * (self.k + 1) as f64 + total0 as f64;
        let lhs = (s + pos) * (s + self.with_label[l][c] as f64) * den0;
        let rhs = (s + neg) * (s + self.without_label[l][c] as f64) * den1;
        lhs > rhs
    }

    /// Label ids predicted for `query`, ascending.
    pub fn predict(&self, query: &FeatureVector) -> Vec<usize> {
        let neighbours = self.neighbours(query);
        let counts = self.label_counts(&neighbours);
        (0..self.num_labels).filter(|&l| self.decide(l, counts[l])).collect()
    }
}
