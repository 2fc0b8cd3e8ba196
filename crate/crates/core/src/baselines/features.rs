use std::collections::HashMap;
use std::rc::Rc;

use crate::data::Example;
use crate::error::Result;
use crate::ndcore::SparseMatrix;

/// Sparse term-frequency vector sorted by feature id.
pub type FeatureVector = Vec<(usize, f64)>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Gram {
    Uni(usize),
    Bi(usize, usize),
}

/// Character unigram and bigram vocabulary fitted on a training portion.
///
/// Every description of an example contributes to one pooled count vector;
/// bigrams never span two descriptions.
#[derive(Clone, Debug, Default)]
pub struct FeatureSpace {
    ids: HashMap<Gram, usize>,
}

fn grams(tokens: &[usize]) -> impl Iterator<Item = Gram> + '_ {
    tokens
        .iter()
        .map(|&t| Gram::Uni(t))
        .chain(tokens.windows(2).map(|w| Gram::Bi(w[0], w[1])))
}

impl FeatureSpace {
    /// Feature ids follow first appearance in `train`.
    pub fn fit(train: &[Example]) -> Self {
        let mut ids = HashMap::new();
        for ex in train {
            for d in &ex.descriptions {
                for g in grams(d) {
                    let next = ids.len();
                    ids.entry(g).or_insert(next);
                }
            }
        }
        FeatureSpace { ids }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Counts of known n-grams; unseen ones are dropped.
    pub fn transform(&self, example: &Example) -> FeatureVector {
        let mut counts: HashMap<usize, f64> = HashMap::new();
        for d in &example.descriptions {
            for g in grams(d) {
                if let Some(&id) = self.ids.get(&g) {
                    *counts.entry(id).or_insert(0.0) += 1.0;
                }
            }
        }
        let mut v: FeatureVector = counts.into_iter().collect();
        v.sort_unstable_by_key(|&(id, _)| id);
        v
    }

    pub fn transform_all(&self, examples: &[Example]) -> Vec<FeatureVector> {
        examples.iter().map(|e| self.transform(e)).collect()
    }

    pub fn matrix(&self, rows: &[FeatureVector]) -> Result<Rc<SparseMatrix>> {
        Ok(Rc::new(SparseMatrix::from_rows(self.len(), rows)?))
    }
}

pub fn norm(v: &FeatureVector) -> f64 {
    v.iter().map(|(_, x)| x * x).sum::<f64>().sqrt()
}

/// Dot product of two id-sorted sparse vectors.
pub fn dot(a: &FeatureVector, b: &FeatureVector) -> f64 {
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    s
}

/// `1 - cos(a, b)`; a zero vector is at distance 1 from everything.
pub fn cosine_distance(a: &FeatureVector, b: &FeatureVector) -> f64 {
    let n = norm(a) * norm(b);
    if n == 0.0 {
        1.0
    } else {
        1.0 - dot(a, b) / n
    }
}
