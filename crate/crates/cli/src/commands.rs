use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use ldseq::baselines::{Baseline, BaselineConfig, BaselineKind};
use ldseq::config::KvConfig;
use ldseq::data::{generate_synthetic, read_records, split_corpus, write_records, Record, SpanOracle, SynthConfig, Vocabs};
use ldseq::eval::{
    compare, config_hash, BaselinePredictor, NeuralPredictor, OraclePredictor, Predictor, Report, Section,
};
use ldseq::model::{gradient_suite, parse_resources, train, HyperParams, Model, ModelConfig, ModelKind};
use ldseq::{Error, Result};
use serde_json::json;

use crate::{Command, EvalArgs, GenerateArgs, GradcheckArgs, PredictArgs, SeedArg, Status, TrainArgs};

pub const SEED_ENV: &str = "LDSEQ_SEED";

pub fn run(command: Command, kv: KvConfig) -> Result<Status> {
    match command {
        Command::Generate(a) => generate(a, kv),
        Command::Train(a) => train_cmd(a, kv),
        Command::Eval(a) => eval(a, kv),
        Command::Predict(a) => predict(a),
        Command::Gradcheck(a) => gradcheck(a, kv),
    }
}

/// Flag, then environment, then the `seed` key.
fn resolve_seed(arg: &SeedArg, kv: &KvConfig) -> Result<Option<u64>> {
    if let Some(s) = arg.seed {
        return Ok(Some(s));
    }
    if let Ok(v) = std::env::var(SEED_ENV) {
        return v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV}=`{v}` is not an unsigned integer")));
    }
    kv.parsed("seed")
}

fn require_seed(arg: &SeedArg, kv: &KvConfig) -> Result<u64> {
    resolve_seed(arg, kv)?
        .ok_or_else(|| Error::Config(format!("a seed is required: pass --seed, set {SEED_ENV} or the `seed` key")))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn split_path(data: &Path, split: &str) -> PathBuf {
    data.join(format!("{split}.jsonl"))
}

fn generate(args: GenerateArgs, kv: KvConfig) -> Result<Status> {
    let seed = require_seed(&args.seed, &kv)?;
    let mut synth = SynthConfig::from_kv(&kv)?;
    synth.seed = seed;
    synth.validate()?;
    let records = generate_synthetic(&synth)?;
    let split = split_corpus(&records, seed)?;
    create_dir(&args.out)?;
    for (name, part) in [("train", &split.train), ("dev", &split.dev), ("test", &split.test)] {
        write_records(&split_path(&args.out, name), part)?;
    }
    write_text(&args.out.join("synth.conf"), &synth.to_kv().to_text())?;
    let labels: usize = records.iter().map(|r| r.labels.len()).sum();
    println!(
        "wrote {} records to {}: train {}, dev {}, test {}",
        records.len(),
        args.out.display(),
        split.train.len(),
        split.dev.len(),
        split.test.len()
    );
    println!(
        "{} labels, {:.2} labels per word, {} resources",
        synth.num_labels,
        labels as f64 / records.len() as f64,
        synth.resource_count()
    );
    for r in 0..synth.resource_count() {
        let chars: usize = records.iter().map(|x| x.descriptions[r].chars().count()).sum();
        let empty = records.iter().filter(|x| x.descriptions[r].is_empty()).count();
        println!(
            "resource {}: {:.1} characters on average, {empty} empty",
            r + 1,
            chars as f64 / records.len() as f64
        );
    }
    Ok(Status::Ok)
}

fn append_line(path: &Path, line: &str) -> Result<()> {
    let io = |e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
    writeln!(f, "{line}").map_err(io)
}

fn resource_count(records: &[Record]) -> usize {
    records.iter().map(|r| r.descriptions.len()).max().unwrap_or(0)
}

fn train_cmd(args: TrainArgs, mut kv: KvConfig) -> Result<Status> {
    let seed = require_seed(&args.seed, &kv)?;
    let train_records = read_records(&split_path(&args.data, "train"))?;
    let dev_records = read_records(&split_path(&args.data, "dev"))?;
    if train_records.is_empty() {
        return Err(Error::Data("the train split is empty".into()));
    }
    let vocabs = Vocabs::build(&train_records);
    let train_set = vocabs.encode_all(&train_records);
    let dev_set = vocabs.encode_all(&dev_records);
    create_dir(&args.out)?;
    let log_path = args.log.clone().unwrap_or_else(|| args.out.join("train_log.jsonl"));

    if let Ok(kind) = args.model.parse::<BaselineKind>() {
        kv.set("baseline.name", kind.as_str());
        let config = BaselineConfig::from_kv(&kv)?;
        let baseline = Baseline::fit(config, &train_set, &vocabs.labels)?;
        let p = BaselinePredictor {
            baseline: &baseline,
            vocabs: &vocabs,
        };
        let dev_f1 = ldseq::eval::evaluate(&p, &dev_records)?.f1;
        let mut saved = kv.section("baseline");
        saved.set("name", kind.as_str());
        let text: String = saved.iter().map(|(k, v)| format!("baseline.{k}={v}\n")).collect();
        write_text(&args.out.join("baseline.conf"), &text)?;
        append_line(
            &log_path,
            &json!({"model": kind.as_str(), "seed": seed, "epoch": 1, "dev_f1": dev_f1}).to_string(),
        )?;
        println!("{}: dev micro-F1 {:.4}; refitted from the train split at eval time", kind.display_name(), dev_f1);
        return Ok(Status::Ok);
    }

    let kind: ModelKind = args.model.parse()?;
    if let Some(p) = &args.preset {
        kv.set("model.preset", p.as_str());
    }
    kv.set("model.seed", seed.to_string());
    let hyper = HyperParams::from_kv(&kv)?;
    let resources = match &args.resources {
        Some(r) => parse_resources(r)?,
        None => (0..resource_count(&train_records)).collect(),
    };
    let mut config = ModelConfig::new(kind, hyper, resources);
    if let Some(mode) = kv.get("loss.mode") {
        config.loss = Some(mode.parse()?);
    }
    let hash = config_hash(&kv);
    let mut model = Model::new(config, &vocabs)?;
    let name = kind.as_str();
    let mut log_error = None;
    let outcome = train(model.as_label_model_mut(), &train_set, &dev_set, |e| {
        let line = json!({
            "model": name,
            "seed": seed,
            "config_hash": hash,
            "epoch": e.epoch,
            "loss": e.loss,
            "dev_f1": e.dev_f1,
            "grad_norm": e.grad_norm,
        });
        if let Err(err) = append_line(&log_path, &line.to_string()) {
            log_error.get_or_insert(err);
        }
    })?;
    if let Some(err) = log_error {
        return Err(err);
    }
    let mut extra = BTreeMap::new();
    extra.insert("train.best_epoch".to_string(), outcome.best_epoch.to_string());
    extra.insert("train.best_dev_f1".to_string(), outcome.best_dev_f1.to_string());
    extra.insert("train.config_hash".to_string(), hash);
    model.save(&args.out, &vocabs, &extra)?;
    println!(
        "{}: best dev micro-F1 {:.4} at epoch {}; checkpoint in {}",
        name,
        outcome.best_dev_f1,
        outcome.best_epoch,
        args.out.display()
    );
    Ok(Status::Ok)
}

fn model_name(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::LdSeq2seq => "LD-Seq2seq",
        ModelKind::BasicSeq2seq => "Basic Seq2seq",
        ModelKind::RnnMllr => "RNN-MLLR",
    }
}

/// Blanks every description outside `keep` before delegating.
struct Masked<'a> {
    inner: &'a dyn Predictor,
    keep: Vec<usize>,
}

impl Predictor for Masked<'_> {
    fn predict(&self, record: &Record) -> Result<Vec<String>> {
        let mut r = record.clone();
        for (i, d) in r.descriptions.iter_mut().enumerate() {
            if !self.keep.contains(&i) {
                d.clear();
            }
        }
        self.inner.predict(&r)
    }
}

fn ablation_name(keep: &[usize], all: usize) -> String {
    match keep {
        [r] => format!("SingleRes-r{}", r + 1),
        _ if keep.len() == all => "MultiRes".to_string(),
        _ => {
            let ids: Vec<String> = keep.iter().map(|r| (r + 1).to_string()).collect();
            format!("MultiRes-r{}", ids.join(","))
        }
    }
}

fn baseline_kinds(list: &str) -> Result<Vec<BaselineKind>> {
    if list == "all" {
        return Ok(BaselineKind::ALL.to_vec());
    }
    list.split(',').map(|s| s.trim().parse()).collect()
}

fn eval(args: EvalArgs, kv: KvConfig) -> Result<Status> {
    let seed = resolve_seed(&args.seed, &kv)?.unwrap_or(0);
    let records = read_records(&split_path(&args.data, &args.split))?;
    let mut loaded = Vec::new();
    for dir in &args.checkpoints {
        let (model, vocabs, _) = Model::load(dir)?;
        loaded.push((dir.clone(), model, vocabs));
    }
    let mut baselines = Vec::new();
    if let Some(list) = &args.baselines {
        let train_records = read_records(&split_path(&args.data, "train"))?;
        let vocabs = Vocabs::build(&train_records);
        let train_set = vocabs.encode_all(&train_records);
        for kind in baseline_kinds(list)? {
            let mut bkv = kv.clone();
            bkv.set("baseline.name", kind.as_str());
            let b = Baseline::fit(BaselineConfig::from_kv(&bkv)?, &train_set, &vocabs.labels)?;
            baselines.push((kind, b));
        }
        return finish_eval(&args, &kv, seed, &records, &loaded, &baselines, Some(vocabs));
    }
    finish_eval(&args, &kv, seed, &records, &loaded, &baselines, None)
}

fn finish_eval(
    args: &EvalArgs,
    kv: &KvConfig,
    seed: u64,
    records: &[Record],
    loaded: &[(PathBuf, Model, Vocabs)],
    baselines: &[(BaselineKind, Baseline)],
    baseline_vocabs: Option<Vocabs>,
) -> Result<Status> {
    let oracle = if args.oracle {
        let conf = args.data.join("synth.conf");
        let synth = if conf.exists() {
            SynthConfig::from_kv(&KvConfig::load(&conf)?)?
        } else {
            SynthConfig::from_kv(kv)?
        };
        Some((SpanOracle::new(&synth), synth.resource_count()))
    } else {
        None
    };
    let subsets = args
        .resources
        .iter()
        .map(|s| parse_resources(s))
        .collect::<Result<Vec<_>>>()?;

    let neural: Vec<NeuralPredictor> = loaded
        .iter()
        .map(|(_, model, vocabs)| NeuralPredictor { model, vocabs })
        .collect();
    let mut names: Vec<String> = loaded.iter().map(|(_, m, _)| model_name(m.config().kind).to_string()).collect();
    for i in 0..names.len() {
        if names.iter().filter(|n| **n == names[i]).count() > 1 {
            let dir = loaded[i].0.file_name().map_or_else(String::new, |f| f.to_string_lossy().into_owned());
            names[i] = format!("{} ({dir})", names[i]);
        }
    }
    let baseline_preds: Vec<BaselinePredictor> = match &baseline_vocabs {
        Some(vocabs) => baselines
            .iter()
            .map(|(_, b)| BaselinePredictor { baseline: b, vocabs })
            .collect(),
        None => Vec::new(),
    };
    let oracle_pred = oracle.as_ref().map(|(o, n)| OraclePredictor {
        oracle: o,
        resources: (0..*n).collect(),
    });
    let mut masked = Vec::new();
    let all = resource_count(records);
    for keep in &subsets {
        for (i, p) in neural.iter().enumerate() {
            let row = if neural.len() > 1 {
                format!("{} {}", names[i], ablation_name(keep, all))
            } else {
                ablation_name(keep, all)
            };
            masked.push((row, Masked { inner: p, keep: keep.clone() }));
        }
    }

    let mut entries: Vec<(String, Section, &dyn Predictor)> = Vec::new();
    for ((kind, _), p) in baselines.iter().zip(&baseline_preds) {
        entries.push((kind.display_name().to_string(), Section::Models, p));
    }
    for (name, p) in names.iter().zip(&neural) {
        entries.push((name.clone(), Section::Models, p));
    }
    if let Some(p) = &oracle_pred {
        entries.push(("Span oracle".to_string(), Section::Models, p));
    }
    for (name, p) in &masked {
        entries.push((name.clone(), Section::Resources, p));
    }
    if entries.is_empty() {
        return Err(Error::Config(
            "nothing to evaluate: pass --checkpoint, --baselines or --oracle".into(),
        ));
    }
    let report = compare(&entries, records, &args.split, seed, &config_hash(kv));
    write_report(args, &report)?;
    print!("{}", report.to_table());
    let failed = report.rows.iter().filter(|r| r.outcome.is_err()).count();
    if failed > 0 {
        eprintln!("{failed} model(s) failed; see the report");
        return Ok(Status::Numerical);
    }
    Ok(Status::Ok)
}

fn write_report(args: &EvalArgs, report: &Report) -> Result<()> {
    let prefix = args
        .out
        .clone()
        .unwrap_or_else(|| args.data.join(format!("report-{}", args.split)));
    if let Some(parent) = prefix.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let with_ext = |ext: &str| {
        let mut p = prefix.clone().into_os_string();
        p.push(ext);
        PathBuf::from(p)
    };
    write_text(&with_ext(".jsonl"), &report.to_jsonl())?;
    write_text(&with_ext(".txt"), &report.to_table())
}

fn predict(args: PredictArgs) -> Result<Status> {
    let (model, vocabs, _) = Model::load(&args.checkpoint)?;
    let record = Record {
        word: String::new(),
        descriptions: args.descriptions,
        labels: Vec::new(),
    };
    let p = NeuralPredictor {
        model: &model,
        vocabs: &vocabs,
    };
    let labels = p.predict(&record)?;
    if labels.is_empty() {
        log::warn!("no labels predicted");
    }
    println!("{}", labels.join(" "));
    Ok(Status::Ok)
}

fn gradcheck(args: GradcheckArgs, kv: KvConfig) -> Result<Status> {
    let seed = resolve_seed(&args.seed, &kv)?.unwrap_or(0);
    let report = gradient_suite(seed, args.eps, args.tolerance)?;
    print!("{}", report.to_text());
    if report.passed() {
        println!("gradient check passed: {} cases within {:e}", report.cases.len(), args.tolerance);
        Ok(Status::Ok)
    } else {
        println!(
            "gradient check failed: {} of {} cases above {:e}",
            report.failures().len(),
            report.cases.len(),
            args.tolerance
        );
        Ok(Status::Numerical)
    }
}
