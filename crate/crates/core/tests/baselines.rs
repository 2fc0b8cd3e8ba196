use std::collections::BTreeSet;

use ldseq::baselines::*;
use proptest::prelude::*;
use ldseq::data::{Example, Vocab, NUM_RESERVED};
use ldseq::eval::micro_prf;

mod common;
use common::{oracle_mlknn, oracle_neighbours, to_sparse};

fn labels_vocab(n: usize) -> Vocab {
    Vocab::from_tokens((0..n).map(|i| format!("l{i}")))
}

fn ex(chars: &[usize], labels: &[usize]) -> Example {
    Example {
        word: String::new(),
        descriptions: vec![chars.to_vec()],
        labels: labels.to_vec(),
    }
}

const A: usize = NUM_RESERVED;
const B: usize = NUM_RESERVED + 1;
const C: usize = NUM_RESERVED + 2;

#[test]
fn mlknn_two_point_example_follows_counting_formulas() {
    // Leave-one-out, each training point's only neighbour is the other one,
    // so carrying a neighbour's label is evidence against having it.
    let train = vec![vec![(0, 1.0)], vec![(1, 1.0)]];
    let labels = vec![vec![0], vec![1]];
    let m = MlKnn::fit(train, &labels, 2, 1, 1.0).unwrap();
    assert_eq!(m.neighbours(&vec![(0, 1.0)]), vec![0]);
    assert_eq!(m.predict(&vec![(0, 1.0)]), vec![1]);
}

#[test]
fn mlknn_rejects_bad_arguments() {
    assert!(MlKnn::fit(vec![], &[], 2, 1, 1.0).is_err());
    let one = vec![vec![(0, 1.0)]];
    assert!(MlKnn::fit(one.clone(), &[vec![0]], 2, 2, 1.0).is_err());
    assert!(MlKnn::fit(one.clone(), &[vec![0]], 2, 0, 1.0).is_err());
    assert!(MlKnn::fit(one, &[vec![0]], 2, 1, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mlknn_matches_brute_force(
        rows in prop::collection::vec((prop::collection::vec(0u32..3, 3), prop::collection::vec(any::<bool>(), 3)), 2..=5),
        query in prop::collection::vec(0u32..3, 3),
        k_pick in 0usize..5,
    ) {
        let train: Vec<Vec<u32>> = rows.iter().map(|r| r.0.clone()).collect();
        let ind: Vec<Vec<bool>> = rows.iter().map(|r| r.1.clone()).collect();
        let k = 1 + k_pick % (train.len() - 1);
        let ids: Vec<Vec<usize>> = ind.iter().map(|y| (0..3).filter(|&l| y[l]).collect()).collect();
        let m = MlKnn::fit(train.iter().map(|d| to_sparse(d)).collect(), &ids, 3, k, 1.0).unwrap();
        let q = to_sparse(&query);
        prop_assert_eq!(m.neighbours(&q), oracle_neighbours(&train, &query, k, None));
        prop_assert_eq!(m.predict(&q), oracle_mlknn(&train, &ind, k, &query));
    }
}

fn separable() -> (Vec<Example>, Vocab) {
    let v = labels_vocab(3);
    let train = vec![
        ex(&[10, 11], &[A]),
        ex(&[20, 21], &[B]),
        ex(&[30, 31], &[C]),
        ex(&[10, 11, 20, 21], &[A, B]),
        ex(&[20, 21, 30, 31], &[B, C]),
        ex(&[10, 11, 30, 31], &[A, C]),
    ];
    (train, v)
}

#[test]
fn br_fits_separable_data() {
    let (train, v) = separable();
    let b = Baseline::fit(BaselineConfig::new(BaselineKind::Br), &train, &v).unwrap();
    let preds = b.predict_all(&train);
    let golds: Vec<Vec<usize>> = train.iter().map(|e| e.labels.clone()).collect();
    assert_eq!(micro_prf(&preds, &golds).unwrap().f1, 1.0);
}

#[test]
fn br_on_featureless_query_rejects_minority_labels() {
    // Each label is in a third of the examples, so every bias goes negative.
    let v = labels_vocab(3);
    let train = vec![
        ex(&[10, 11], &[A]),
        ex(&[10, 12], &[A]),
        ex(&[20, 21], &[B]),
        ex(&[20, 22], &[B]),
        ex(&[30, 31], &[C]),
        ex(&[30, 32], &[C]),
    ];
    let b = Baseline::fit(BaselineConfig::new(BaselineKind::Br), &train, &v).unwrap();
    let empty = ex(&[99], &[A]);
    assert!(b.features().transform(&empty).is_empty());
    assert!(b.predict(&empty).is_empty());
    assert_eq!(b.predict(&train[0]), vec![A]);
}

#[test]
fn lp_only_emits_training_combinations() {
    let v = labels_vocab(3);
    let train = vec![
        ex(&[10, 11], &[A, B]),
        ex(&[10, 12], &[B, A]),
        ex(&[30, 31], &[C]),
        ex(&[30, 32], &[C]),
    ];
    let lp = Baseline::fit(BaselineConfig::new(BaselineKind::Lp), &train, &v).unwrap();
    let allowed: BTreeSet<Vec<usize>> = [vec![A, B], vec![C]].into_iter().collect();
    for q in [&[10][..], &[30], &[10, 30], &[77], &[11, 31, 12]] {
        let p = lp.predict(&ex(q, &[A]));
        assert!(allowed.contains(&p), "{p:?}");
    }
    assert_eq!(lp.predict(&train[0]), vec![A, B]);
    assert_eq!(lp.predict(&train[2]), vec![C]);
}

#[test]
fn lp_with_one_combination_is_constant() {
    let v = labels_vocab(2);
    let train = vec![ex(&[10], &[A, B]), ex(&[20], &[B, A])];
    let lp = Baseline::fit(BaselineConfig::new(BaselineKind::Lp), &train, &v).unwrap();
    assert_eq!(lp.predict(&ex(&[55], &[A])), vec![A, B]);
}

#[test]
fn chain_with_zero_chain_weights_equals_br() {
    let (train, _) = separable();
    let mut cfg = BaselineConfig::new(BaselineKind::Cc);
    cfg.order = ChainOrder::Canonical;
    let fs = FeatureSpace::fit(&train);
    let x = fs.matrix(&fs.transform_all(&train)).unwrap();
    let k = 3;
    let mut y = vec![0.0; train.len() * k];
    for (i, e) in train.iter().enumerate() {
        for &l in &e.labels {
            y[i * k + l - NUM_RESERVED] = 1.0;
        }
    }
    let mut cc = LinearModel::fit_sigmoid(&x, y.clone(), k, Some(vec![0, 1, 2]), &cfg.logreg).unwrap();
    let (chain, _) = cc.chain.clone().unwrap();
    cc.params.get_mut(chain).data_mut().iter_mut().for_each(|w| *w = 0.0);
    let mut br = LinearModel::fit_sigmoid(&x, y, k, None, &cfg.logreg).unwrap();
    let (w, b) = (cc.params.get(cc.w).clone(), cc.params.get(cc.b).clone());
    *br.params.get_mut(br.w) = w;
    *br.params.get_mut(br.b) = b;
    for e in &train {
        let f = fs.transform(e);
        assert_eq!(cc.probabilities(&f), br.probabilities(&f));
    }
}

#[test]
fn chain_order_must_be_a_permutation() {
    assert!(check_order(&[0, 2, 1], 3).is_ok());
    assert!(check_order(&[0, 0, 1], 3).is_err());
    assert!(check_order(&[0, 1], 3).is_err());
    assert!(check_order(&[0, 1, 3], 3).is_err());
    let (train, v) = separable();
    let mut cfg = BaselineConfig::new(BaselineKind::Cc);
    cfg.order = ChainOrder::Names(vec!["l0".into(), "l1".into()]);
    assert!(Baseline::fit(cfg, &train, &v).is_err());
}

#[test]
fn chain_separates_label_sets() {
    // Character 10 marks {A, B}, character 20 marks {C}; the rest is noise.
    let v = labels_vocab(3);
    let train: Vec<Example> = (0..40)
        .map(|i| {
            let noise = 50 + (i * 7) % 13;
            if i % 2 == 0 {
                ex(&[10, noise], &[A, B])
            } else {
                ex(&[20, noise], &[C])
            }
        })
        .collect();
    let mut cfg = BaselineConfig::new(BaselineKind::Cc);
    cfg.order = ChainOrder::Canonical;
    let cc = Baseline::fit(cfg, &train, &v).unwrap();
    assert_eq!(cc.predict(&ex(&[10, 60], &[A])), vec![A, B]);
    assert_eq!(cc.predict(&ex(&[20, 60], &[C])), vec![C]);
}

#[test]
fn kinds_parse_and_display() {
    for k in BaselineKind::ALL {
        assert_eq!(k.as_str().parse::<BaselineKind>().unwrap(), k);
    }
    assert!("svm".parse::<BaselineKind>().is_err());
}

#[test]
fn lp_fits_three_separable_combinations() {
    let v = labels_vocab(3);
    let train = vec![
        ex(&[10, 11], &[A]),
        ex(&[10, 12], &[A]),
        ex(&[20, 21], &[B, C]),
        ex(&[20, 22], &[B, C]),
        ex(&[30, 31], &[A, C]),
        ex(&[30, 32], &[A, C]),
    ];
    let b = Baseline::fit(BaselineConfig::new(BaselineKind::Lp), &train, &v).unwrap();
    let preds = b.predict_all(&train);
    let golds: Vec<Vec<usize>> = train.iter().map(|e| e.labels.clone()).collect();
    assert_eq!(ldseq::eval::exact_match_accuracy(&preds, &golds).unwrap(), 1.0);
}

#[test]
fn br_on_disjoint_single_labels_acts_as_one_vs_all() {
    // Five labels, each with its own characters plus one shared filler.
    let v = labels_vocab(5);
    let train: Vec<Example> = (0..50)
        .map(|i| {
            let l = i % 5;
            ex(&[100 + 10 * l, 101 + 10 * l + (i / 5) % 3, 999], &[NUM_RESERVED + l])
        })
        .collect();
    let b = Baseline::fit(BaselineConfig::new(BaselineKind::Br), &train, &v).unwrap();
    for e in &train {
        assert_eq!(b.predict(e), e.labels);
    }
}
