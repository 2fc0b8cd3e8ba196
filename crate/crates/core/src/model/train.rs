use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::LabelModel;
use crate::data::Example;
use crate::error::{Error, Result};
use crate::eval::micro_prf;
use crate::ndcore::{derive_seed, seeded_rng, AdamConfig, AdamState, Tape, Tensor};

/// One line of the training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean per-example training loss.
    pub loss: f64,
    pub dev_f1: f64,
    pub grad_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    /// Epoch whose parameters were kept; 0 means the initial parameters.
    pub best_epoch: usize,
    pub best_dev_f1: f64,
    pub log: Vec<EpochLog>,
}

/// Dev micro-F1 of `model` over label ids.
pub fn dev_f1<M: LabelModel + ?Sized>(model: &M, dev: &[Example]) -> Result<f64> {
    let resources = &model.config().resources;
    let mut preds = Vec::with_capacity(dev.len());
    let mut golds = Vec::with_capacity(dev.len());
    for ex in dev {
        let d = ex.select(resources);
        if d.iter().all(|x| x.is_empty()) {
            preds.push(Vec::new());
        } else {
            preds.push(model.predict_ids(&d)?);
        }
        golds.push(ex.labels.clone());
    }
    Ok(micro_prf(&preds, &golds)?.f1)
}

/// Mini-batch Adam training. After every epoch the dev set is decoded and
/// the parameters of the epoch with the highest dev micro-F1 are kept
/// (the earliest on ties). An empty dev set keeps the last epoch.
///
/// `on_epoch` sees every log line as soon as it is produced.
pub fn train<M: LabelModel + ?Sized>(
    model: &mut M,
    train: &[Example],
    dev: &[Example],
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome> {
    let hyper = model.config().hyper.clone();
    let resources = model.config().resources.clone();
    let usable: Vec<&Example> = train
        .iter()
        .filter(|e| !e.labels.is_empty() && e.select(&resources).iter().any(|d| !d.is_empty()))
        .collect();
    if usable.len() < train.len() {
        log::warn!(
            "skipping {} training examples with no labels or no text in the selected resources",
            train.len() - usable.len()
        );
    }
    if usable.is_empty() && hyper.epochs > 0 {
        return Err(Error::Data("no usable training examples".into()));
    }
    if hyper.epochs == 0 {
        log::warn!("epochs=0: keeping the initial parameters");
        return Ok(TrainOutcome {
            best_epoch: 0,
            best_dev_f1: dev_f1(model, dev)?,
            log: Vec::new(),
        });
    }
    let owned: Vec<Example> = usable.iter().map(|e| (*e).clone()).collect();
    model.prepare(&owned)?;

    let mut rng = seeded_rng(derive_seed(hyper.seed, "shuffle"));
    let mut adam = AdamState::new(AdamConfig::with_lr(hyper.lr), model.params());
    let mut order: Vec<usize> = (0..owned.len()).collect();
    let mut best: Option<(usize, f64, Vec<Tensor>)> = None;
    let mut log = Vec::with_capacity(hyper.epochs);
    for epoch in 1..=hyper.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut norm_sum = 0.0;
        let mut batches = 0;
        for batch in order.chunks(hyper.batch_size) {
            model.params_mut().zero_grads();
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let ex = &owned[i];
                let mut tape = Tape::new();
                let loss = model.example_loss(&mut tape, ex)?;
                let value = tape.value(loss).item();
                if !value.is_finite() {
                    let words: Vec<&str> = batch.iter().map(|&j| owned[j].word.as_str()).collect();
                    return Err(Error::Numerical(format!(
                        "non-finite loss {value} at epoch {epoch} on `{}`; batch: {words:?}",
                        ex.word
                    )));
                }
                total += value;
                let loss = tape.scale(loss, scale)?;
                tape.backward_into(loss, model.params_mut())?;
            }
            let norm = if hyper.clip_norm > 0.0 {
                model.params_mut().clip_grad_norm(hyper.clip_norm)
            } else {
                model.params().grad_norm()
            };
            if !norm.is_finite() {
                return Err(Error::Numerical(format!("non-finite gradient norm at epoch {epoch}")));
            }
            norm_sum += norm;
            batches += 1;
            adam.step(model.params_mut())?;
        }
        let f1 = dev_f1(model, dev)?;
        let entry = EpochLog {
            epoch,
            loss: total / owned.len() as f64,
            dev_f1: f1,
            grad_norm: norm_sum / batches as f64,
        };
        log::info!(
            "epoch {epoch}: loss {:.4} dev F1 {:.4}",
            entry.loss,
            entry.dev_f1
        );
        on_epoch(&entry);
        log.push(entry);
        let improves = match &best {
            None => true,
            Some((_, f, _)) => f1 > *f || dev.is_empty(),
        };
        if improves {
            let snapshot = model.params().iter().map(|(_, t)| t.clone()).collect();
            best = Some((epoch, f1, snapshot));
        }
    }
    let (best_epoch, best_dev_f1, snapshot) = best.expect("at least one epoch ran");
    for ((_, t), saved) in model.params_mut().iter_mut().zip(snapshot) {
        t.data_mut().copy_from_slice(saved.data());
    }
    model.params_mut().clear_grads();
    Ok(TrainOutcome {
        best_epoch,
        best_dev_f1,
        log,
    })
}
