//! Independent reference implementations shared by test targets.
#![allow(dead_code)]

use ldseq::baselines::FeatureVector;

/// Dense cosine distance, recomputed independently of the library.
pub fn oracle_distance(a: &[u32], b: &[u32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(&x, &y)| f64::from(x) * f64::from(y)).sum();
    let na = a.iter().map(|&x| f64::from(x * x)).sum::<f64>().sqrt();
    let nb = b.iter().map(|&x| f64::from(x * x)).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        1.0
    } else {
        1.0 - dot / (na * nb)
    }
}

pub fn oracle_neighbours(train: &[Vec<u32>], q: &[u32], k: usize, exclude: Option<usize>) -> Vec<usize> {
    let mut all: Vec<(f64, usize)> = (0..train.len())
        .filter(|&i| Some(i) != exclude)
        .map(|i| (oracle_distance(q, &train[i]), i))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    all.into_iter().take(k).map(|(_, i)| i).collect()
}

/// Brute-force ML-KNN with unit smoothing; posteriors compared as exact
/// integer fractions.
pub fn oracle_mlknn(train: &[Vec<u32>], labels: &[Vec<bool>], k: usize, q: &[u32]) -> Vec<usize> {
    let n = train.len();
    let num_labels = labels[0].len();
    let nb = oracle_neighbours(train, q, k, None);
    let mut out = Vec::new();
    for l in 0..num_labels {
        let pos = labels.iter().filter(|y| y[l]).count() as u128;
        let neg = n as u128 - pos;
        let mut with = vec![0u128; k + 1];
        let mut without = vec![0u128; k + 1];
        for i in 0..n {
            let c = oracle_neighbours(train, &train[i], k, Some(i)).iter().filter(|&&j| labels[j][l]).count();
            if labels[i][l] { with[c] += 1 } else { without[c] += 1 }
        }
        let c = nb.iter().filter(|&&j| labels[j][l]).count();
        // P(H1) = (1 + pos) / (2 + n), P(c | H1) = (1 + with[c]) / (k + 1 + sum with)
        let kk = k as u128 + 1;
        let p1 = ((1 + pos) * (1 + with[c]), (2 + n as u128) * (kk + with.iter().sum::<u128>()));
        let p0 = ((1 + neg) * (1 + without[c]), (2 + n as u128) * (kk + without.iter().sum::<u128>()));
        if p1.0 * p0.1 > p0.0 * p1.1 {
            out.push(l);
        }
    }
    out
}

pub fn to_sparse(d: &[u32]) -> FeatureVector {
    d.iter().enumerate().filter(|(_, &v)| v > 0).map(|(j, &v)| (j, f64::from(v))).collect()
}
