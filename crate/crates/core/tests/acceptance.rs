//! Acceptance criteria, one PASS/FAIL line each, run in order.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use ldseq::baselines::{Baseline, BaselineConfig, BaselineKind, FeatureVector, MlKnn};
use ldseq::data::{
    generate_synthetic, records_to_string, split_corpus, Example, Record, SynthConfig, Vocabs, EOS, NUM_RESERVED,
};
use ldseq::eval::{compare, micro_prf, BaselinePredictor, NeuralPredictor, Predictor, Section};
use ldseq::loss::{sequence_loss_value, soft_target, with_eos, LabelBag, LossMode};
use ldseq::model::{gradient_suite, train, HyperParams, Model, ModelConfig, ModelKind, Seq2Seq};
use ldseq::ndcore::{seeded_rng, Tape};
use rand::seq::SliceRandom;
use rand::Rng;

mod common;
use common::{oracle_mlknn, oracle_neighbours, to_sparse};

const SEEDS: [u64; 3] = [1, 2, 3];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn criterion_1() -> Outcome {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    let mut failed = Vec::new();
    for seed in 0..5 {
        match gradient_suite(seed, 1e-5, 1e-4) {
            Ok(r) => {
                worst = r.cases.iter().map(|c| c.report.max_rel_error).fold(worst, f64::max);
                failed.extend(r.failures().iter().map(|c| format!("{}@{seed}", c.name)));
            }
            Err(e) => failed.push(format!("seed {seed}: {e}")),
        }
    }
    let elapsed = t0.elapsed();
    outcome(
        failed.is_empty() && elapsed < Duration::from_secs(120),
        format!("5 seeds, worst rel err {worst:.2e}, {:.1}s, failures {failed:?}", elapsed.as_secs_f64()),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = seeded_rng(2);
    let mut bad = 0;
    for _ in 0..1000 {
        let v = NUM_RESERVED + rng.gen_range(1..30);
        let mut ordinary: Vec<usize> = (NUM_RESERVED..v).collect();
        ordinary.shuffle(&mut rng);
        let m = rng.gen_range(1..=ordinary.len().min(8));
        let labels = &ordinary[..m];
        let bag = LabelBag::new(labels, v).unwrap();
        let gold = if rng.gen_bool(0.2) { EOS } else { labels[rng.gen_range(0..m)] };
        let mut y = vec![0.0; v];
        y[gold] = 1.0;
        let t = soft_target(&y, &bag).unwrap();
        let mf = m as f64;
        let mut ok = (t.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
        for id in 0..v {
            let want = match (id == gold, labels.contains(&id)) {
                (true, true) => 0.5 + 0.5 / mf,
                (true, false) => 0.5,
                (false, true) => 0.5 / mf,
                (false, false) => 0.0,
            };
            ok &= (t[id] - want).abs() <= 1e-12;
        }
        if m == 1 && gold != EOS {
            ok &= t == y;
        }
        bad += usize::from(!ok);
    }
    outcome(bad == 0, format!("1000 random pairs, {bad} violations"))
}

fn criterion_3() -> Outcome {
    let mut rng = seeded_rng(3);
    let mut bad = 0;
    let mut checked = 0;
    for pass in 0..100u64 {
        let num_chars = NUM_RESERVED + rng.gen_range(2..40);
        let num_labels = NUM_RESERVED + rng.gen_range(1..20);
        let hyper = HyperParams {
            seed: pass,
            ..HyperParams::desk()
        };
        let model = Seq2Seq::new(ModelConfig::new(ModelKind::LdSeq2seq, hyper, vec![0, 1]), num_chars, num_labels).unwrap();
        let mut desc = |allow_empty: bool| -> Vec<usize> {
            let len = rng.gen_range(usize::from(!allow_empty)..12);
            (0..len).map(|_| rng.gen_range(NUM_RESERVED..num_chars)).collect()
        };
        let d = [desc(false), desc(true)];
        let d: Vec<&[usize]> = d.iter().map(Vec::as_slice).collect();
        let mut labels: Vec<usize> = (NUM_RESERVED..num_labels).collect();
        labels.shuffle(&mut rng);
        labels.truncate(rng.gen_range(1..=labels.len().min(6)));
        let mut tape = Tape::inference();
        let steps = model.unroll(&mut tape, &d, &with_eos(&labels), pass % 2 == 0).unwrap();
        let unit = |row: &[f64]| (row.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
        for s in &steps {
            checked += 1;
            let mut ok = unit(tape.data(s.probs));
            for a in s.attention.iter().flatten() {
                ok &= unit(tape.data(*a));
            }
            for g in &s.gates {
                ok &= tape.data(*g).iter().all(|&x| x > 0.0 && x < 1.0);
            }
            bad += usize::from(!ok);
        }
    }
    outcome(bad == 0, format!("100 forward passes, {checked} steps, {bad} violations"))
}

fn mlknn_corpora() -> (usize, usize) {
    // Every corpus of up to five examples over three feature patterns and
    // four label sets, every k, and every query pattern.
    let patterns: [Vec<u32>; 3] = [vec![1, 0], vec![0, 1], vec![1, 1]];
    let label_sets: [Vec<bool>; 4] = [vec![false, false], vec![true, false], vec![false, true], vec![true, true]];
    let queries: [Vec<u32>; 4] = [vec![1, 0], vec![0, 1], vec![2, 1], vec![0, 0]];
    let (mut checked, mut bad) = (0, 0);
    for n in 1..=5usize {
        for code in 0..12usize.pow(n as u32) {
            let mut c = code;
            let mut train = Vec::with_capacity(n);
            let mut ind = Vec::with_capacity(n);
            for _ in 0..n {
                train.push(patterns[c % 3].clone());
                ind.push(label_sets[(c / 3) % 4].clone());
                c /= 12;
            }
            let ids: Vec<Vec<usize>> = ind.iter().map(|y| (0..2).filter(|&l| y[l]).collect()).collect();
            let sparse: Vec<FeatureVector> = train.iter().map(|d| to_sparse(d)).collect();
            for k in 1..=n {
                let m = MlKnn::fit(sparse.clone(), &ids, 2, k, 1.0).unwrap();
                for q in &queries {
                    checked += 1;
                    let qs = to_sparse(q);
                    if m.neighbours(&qs) != oracle_neighbours(&train, q, k, None)
                        || m.predict(&qs) != oracle_mlknn(&train, &ind, k, q)
                    {
                        bad += 1;
                    }
                }
            }
        }
    }
    (checked, bad)
}

fn handcrafted_prf() -> bool {
    let s = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    // (prediction, gold, tp, fp, fn)
    let cases: [(&[&str], &[&str], usize, usize, usize); 20] = [
        (&["a"], &["a"], 1, 0, 0),
        (&[], &["a"], 0, 0, 1),
        (&["a"], &[], 0, 1, 0),
        (&["a", "b"], &["a"], 1, 1, 0),
        (&["a"], &["a", "b"], 1, 0, 1),
        (&["b", "a"], &["a", "b"], 2, 0, 0),
        (&["c"], &["a", "b"], 0, 1, 2),
        (&["a", "b", "c"], &["c", "d"], 1, 2, 1),
        (&[], &[], 0, 0, 0),
        (&["d", "e", "f", "g"], &["d", "e", "f", "g"], 4, 0, 0),
        (&["a", "a"], &["a"], 1, 0, 0),
        (&["x"], &["y"], 0, 1, 1),
        (&["a", "b", "c", "d"], &["a"], 1, 3, 0),
        (&["a"], &["a", "b", "c", "d"], 1, 0, 3),
        (&["b", "c"], &["c", "b"], 2, 0, 0),
        (&["e"], &["e", "f"], 1, 0, 1),
        (&["f", "g", "h"], &["g"], 1, 2, 0),
        (&[], &["a", "b", "c"], 0, 0, 3),
        (&["h", "i"], &["i", "j"], 1, 1, 1),
        (&["k"], &["k"], 1, 0, 0),
    ];
    let mut ok = true;
    for (p, g, tp, fp, fn_) in cases {
        let r = micro_prf(&[s(p)], &[s(g)]).unwrap();
        ok &= (r.tp, r.fp, r.fn_) == (tp, fp, fn_);
    }
    let preds: Vec<_> = cases.iter().map(|c| s(c.0)).collect();
    let golds: Vec<_> = cases.iter().map(|c| s(c.1)).collect();
    let r = micro_prf(&preds, &golds).unwrap();
    // Totals counted by hand: 19 hits, 12 spurious, 14 missed, 7 exact sets.
    ok &= (r.tp, r.fp, r.fn_) == (19, 12, 14);
    ok &= r.precision == 19.0 / 31.0 && r.recall == 19.0 / 33.0;
    ok &= (r.f1 - 38.0 / 64.0).abs() <= 1e-15;
    ok &= r.accuracy == 7.0 / 20.0;
    ok
}

fn criterion_4() -> Outcome {
    let (checked, bad) = mlknn_corpora();
    let prf = handcrafted_prf();
    outcome(
        bad == 0 && prf,
        format!("ML-KNN {checked} corpus/k/query cases, {bad} mismatches; micro_prf 20 pairs {}", if prf { "exact" } else { "mismatch" }),
    )
}

fn criterion_5() -> Outcome {
    let t0 = Instant::now();
    let cfg = SynthConfig {
        num_examples: 20,
        seed: 5,
        ..SynthConfig::default()
    };
    let records = generate_synthetic(&cfg).unwrap();
    let vocabs = Vocabs::build(&records);
    let data = vocabs.encode_all(&records);
    let hyper = HyperParams {
        epochs: 200,
        seed: 5,
        ..HyperParams::desk()
    };
    let mut model = Model::new(ModelConfig::new(ModelKind::LdSeq2seq, hyper, vec![0, 1]), &vocabs).unwrap();
    let out = train(model.as_label_model_mut(), &data, &data, |_| {}).unwrap();
    let preds: Vec<Vec<usize>> = data.iter().map(|e| model.predict_ids(&e.select(&[0, 1])).unwrap()).collect();
    let golds: Vec<Vec<usize>> = data.iter().map(|e| e.labels.clone()).collect();
    let acc = micro_prf(&preds, &golds).unwrap().accuracy;
    let elapsed = t0.elapsed();
    outcome(
        acc == 1.0 && elapsed < Duration::from_secs(300),
        format!(
            "train exact match {acc:.3}, first reached at epoch {}, {:.1}s",
            out.best_epoch,
            elapsed.as_secs_f64()
        ),
    )
}

struct Bench {
    records: HashMap<u64, (Vocabs, Vec<Example>, Vec<Example>, Vec<Record>)>,
    scores: HashMap<(u64, String), f64>,
}

impl Bench {
    fn new() -> Self {
        let mut records = HashMap::new();
        for seed in SEEDS {
            let cfg = SynthConfig {
                seed,
                ..SynthConfig::default()
            };
            let all = generate_synthetic(&cfg).unwrap();
            let split = split_corpus(&all, seed).unwrap();
            assert_eq!((split.train.len(), split.dev.len(), split.test.len()), (2000, 250, 250));
            let vocabs = Vocabs::build(&split.train);
            let train = vocabs.encode_all(&split.train);
            let dev = vocabs.encode_all(&split.dev);
            records.insert(seed, (vocabs, train, dev, split.test));
        }
        Bench {
            records,
            scores: HashMap::new(),
        }
    }

    fn neural(&mut self, seed: u64, kind: ModelKind, resources: Vec<usize>, name: &str) -> f64 {
        let key = (seed, name.to_string());
        if let Some(&f) = self.scores.get(&key) {
            return f;
        }
        let (vocabs, train_set, dev, test) = &self.records[&seed];
        let hyper = HyperParams {
            seed,
            ..HyperParams::desk()
        };
        let mut model = Model::new(ModelConfig::new(kind, hyper, resources), vocabs).unwrap();
        train(model.as_label_model_mut(), train_set, dev, |_| {}).unwrap();
        let p = NeuralPredictor {
            model: &model,
            vocabs,
        };
        let f = score(name, &p, test, seed);
        self.scores.insert(key, f);
        f
    }

    fn baseline(&mut self, seed: u64, kind: BaselineKind) -> f64 {
        let (vocabs, train_set, _, test) = &self.records[&seed];
        let b = Baseline::fit(BaselineConfig::new(kind), train_set, &vocabs.labels).unwrap();
        let p = BaselinePredictor { baseline: &b, vocabs };
        score(kind.display_name(), &p, test, seed)
    }
}

fn score(name: &str, p: &dyn Predictor, test: &[Record], seed: u64) -> f64 {
    let entries: Vec<(String, Section, &dyn Predictor)> = vec![(name.to_string(), Section::Models, p)];
    let report = compare(&entries, test, "test", seed, "acceptance");
    report.get(Section::Models, name).map_or(0.0, |m| m.f1)
}

fn criterion_6(bench: &mut Bench) -> Outcome {
    let t0 = Instant::now();
    let mut per_model: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for seed in SEEDS {
        for kind in BaselineKind::ALL {
            per_model.entry(kind.display_name()).or_default().push(bench.baseline(seed, kind));
        }
        for (kind, name) in [
            (ModelKind::RnnMllr, "RNN-MLLR"),
            (ModelKind::BasicSeq2seq, "Basic Seq2seq"),
            (ModelKind::LdSeq2seq, "LD-Seq2seq"),
        ] {
            per_model.entry(name).or_default().push(bench.neural(seed, kind, vec![0, 1], name));
        }
    }
    let elapsed = t0.elapsed();
    let med: BTreeMap<&str, f64> = per_model.iter().map(|(k, v)| (*k, median(v.clone()))).collect();
    let classical = BaselineKind::ALL.iter().map(|k| med[k.display_name()]).fold(f64::MIN, f64::max);
    let (ld, basic, mllr) = (med["LD-Seq2seq"], med["Basic Seq2seq"], med["RNN-MLLR"]);
    let ordered = ld >= basic && basic >= mllr && mllr >= classical;
    let detail = format!(
        "median F1 LD {ld:.4} basic {basic:.4} MLLR {mllr:.4} best classical {classical:.4} \
         (ML-KNN {:.4} LP {:.4} BR {:.4} CC {:.4}), {:.0}s",
        med["ML-KNN"],
        med["LP"],
        med["BR"],
        med["CC"],
        elapsed.as_secs_f64()
    );
    outcome(ordered && elapsed < Duration::from_secs(1800), detail)
}

fn criterion_7(bench: &mut Bench) -> Outcome {
    let mut multi = Vec::new();
    let mut r1 = Vec::new();
    let mut r2 = Vec::new();
    for seed in SEEDS {
        multi.push(bench.neural(seed, ModelKind::LdSeq2seq, vec![0, 1], "LD-Seq2seq"));
        r1.push(bench.neural(seed, ModelKind::LdSeq2seq, vec![0], "SingleRes-r1"));
        r2.push(bench.neural(seed, ModelKind::LdSeq2seq, vec![1], "SingleRes-r2"));
    }
    let (m, a, b) = (median(multi), median(r1), median(r2));
    outcome(m >= a.max(b), format!("median F1 MultiRes {m:.4} SingleRes-r1 {a:.4} SingleRes-r2 {b:.4}"))
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn criterion_8() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let cfg = SynthConfig {
            num_examples: 120,
            seed: 8,
            ..SynthConfig::default()
        };
        let records = generate_synthetic(&cfg).unwrap();
        let split = split_corpus(&records, 8).unwrap();
        let vocabs = Vocabs::build(&split.train);
        let (tr, dv) = (vocabs.encode_all(&split.train), vocabs.encode_all(&split.dev));
        let hyper = HyperParams {
            epochs: 3,
            seed: 8,
            ..HyperParams::desk()
        };
        let mut reports = String::new();
        for kind in [ModelKind::LdSeq2seq, ModelKind::RnnMllr] {
            let mut model = Model::new(ModelConfig::new(kind, hyper.clone(), vec![0, 1]), &vocabs).unwrap();
            train(model.as_label_model_mut(), &tr, &dv, |_| {}).unwrap();
            model
                .save(&tmp.path().join(format!("{tag}-{kind}")), &vocabs, &BTreeMap::new())
                .unwrap();
            let p = NeuralPredictor {
                model: &model,
                vocabs: &vocabs,
            };
            let entries: Vec<(String, Section, &dyn Predictor)> = vec![(kind.to_string(), Section::Models, &p)];
            let r = compare(&entries, &split.test, "test", 8, "h");
            reports.push_str(&r.to_jsonl());
            reports.push_str(&r.to_table());
        }
        (records_to_string(&records), reports)
    };
    let a = run("a");
    let b = run("b");
    let same_ckpt = [ModelKind::LdSeq2seq, ModelKind::RnnMllr].iter().all(|k| {
        dir_bytes(&tmp.path().join(format!("a-{k}"))) == dir_bytes(&tmp.path().join(format!("b-{k}")))
    });
    outcome(
        a == b && same_ckpt,
        format!("corpus, checkpoints and reports identical: {}", a == b && same_ckpt),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = seeded_rng(9);
    let v = NUM_RESERVED + 6;
    let (a, b, c) = (NUM_RESERVED, NUM_RESERVED + 1, NUM_RESERVED + 4);
    let labels = [a, b];
    let gold = with_eos(&labels);
    let bag = LabelBag::new(&labels, v).unwrap();
    let mut bad = 0;
    for _ in 0..1000 {
        let base: Vec<f64> = (0..v).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = base.iter().sum();
        let base: Vec<f64> = base.iter().map(|x| x / total).collect();
        let mass = rng.gen_range(0.05..0.5);
        // The first step should say `a`; the same share of its mass is moved
        // either onto the later in-bag label `b` or onto the out-of-bag `c`.
        let shifted = |to: usize| {
            let mut p = base.clone();
            let moved = mass * p[a];
            p[a] -= moved;
            p[to] += moved;
            vec![p, base.clone(), base.clone()]
        };
        let in_bag = shifted(b);
        let out_bag = shifted(c);
        let soft_in = sequence_loss_value(&in_bag, &gold, &bag, LossMode::Soft).unwrap();
        let soft_out = sequence_loss_value(&out_bag, &gold, &bag, LossMode::Soft).unwrap();
        let hard_in = sequence_loss_value(&in_bag, &gold, &bag, LossMode::Hard).unwrap();
        let hard_out = sequence_loss_value(&out_bag, &gold, &bag, LossMode::Hard).unwrap();
        if !(soft_in < soft_out && hard_in == hard_out) {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("1000 constructed distributions, {bad} violations"))
}

fn main() {
    let names = [
        "gradient oracle",
        "soft-target algebra",
        "normalisation invariants",
        "oracle equivalence",
        "overfit smoke test",
        "model comparison ordering",
        "multi-resource ordering",
        "determinism",
        "soft-vs-hard loss property",
    ];
    // Numeric arguments select a subset of criteria and `--strict` turns a
    // FAIL line into a failing exit status; other arguments are harness flags
    // and are ignored.
    let args: Vec<String> = std::env::args().skip(1).collect();
    let only: Vec<usize> = args.iter().filter_map(|a| a.parse().ok()).collect();
    let strict = args.iter().any(|a| a == "--strict") || std::env::var_os("LDSEQ_ACCEPTANCE_STRICT").is_some();
    let mut bench = None;
    let mut failures = 0;
    let mut run = 0;
    for (i, name) in names.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        run += 1;
        let t0 = Instant::now();
        let o = match i + 1 {
            1 => criterion_1(),
            2 => criterion_2(),
            3 => criterion_3(),
            4 => criterion_4(),
            5 => criterion_5(),
            6 => criterion_6(bench.get_or_insert_with(Bench::new)),
            7 => criterion_7(bench.get_or_insert_with(Bench::new)),
            8 => criterion_8(),
            _ => criterion_9(),
        };
        failures += usize::from(!o.pass);
        println!(
            "{} criterion {}: {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            t0.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {run} criteria pass", run - failures);
    if failures > 0 && strict {
        std::process::exit(1);
    }
}
