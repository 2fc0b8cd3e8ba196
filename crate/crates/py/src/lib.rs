//! Python bindings. Records cross the boundary as dicts with `word`,
//! `descriptions` and `labels` keys; settings as `{"section.key": "value"}`.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use ldseq::baselines::{Baseline, BaselineConfig, BaselineKind};
use ldseq::config::KvConfig;
use ldseq::data::{generate_synthetic, split_corpus, Record, SynthConfig, Vocabs};
use ldseq::eval::{evaluate, BaselinePredictor, MetricReport, NeuralPredictor, Predictor};
use ldseq::model::{gradient_suite, parse_resources, train, HyperParams, Model, ModelConfig, ModelKind, TrainOutcome};
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

pyo3::create_exception!(ldseq_py, LdseqError, PyException);
pyo3::create_exception!(ldseq_py, DataError, LdseqError);
pyo3::create_exception!(ldseq_py, NumericalError, LdseqError);

fn to_py(e: ldseq::Error) -> PyErr {
    if e.is_numerical() {
        NumericalError::new_err(e.to_string())
    } else if e.is_data_error() {
        DataError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn record_from(obj: &Bound<'_, PyAny>) -> PyResult<Record> {
    let labels = match obj.get_item("labels") {
        Ok(l) => l.extract()?,
        Err(_) => Vec::new(),
    };
    Ok(Record {
        word: obj.get_item("word")?.extract()?,
        descriptions: obj.get_item("descriptions")?.extract()?,
        labels,
    })
}

fn records_from(objs: &[Bound<'_, PyAny>]) -> PyResult<Vec<Record>> {
    objs.iter().map(record_from).collect()
}

fn record_to<'py>(py: Python<'py>, r: &Record) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("word", &r.word)?;
    d.set_item("descriptions", &r.descriptions)?;
    d.set_item("labels", &r.labels)?;
    Ok(d)
}

fn records_to<'py>(py: Python<'py>, rs: &[Record]) -> PyResult<Vec<Bound<'py, PyDict>>> {
    rs.iter().map(|r| record_to(py, r)).collect()
}

fn metrics_to<'py>(py: Python<'py>, m: &MetricReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("precision", m.precision)?;
    d.set_item("recall", m.recall)?;
    d.set_item("f1", m.f1)?;
    d.set_item("accuracy", m.accuracy)?;
    d.set_item("tp", m.tp)?;
    d.set_item("fp", m.fp)?;
    d.set_item("fn", m.fn_)?;
    d.set_item("examples", m.examples)?;
    Ok(d)
}

fn kv_from(settings: Option<HashMap<String, String>>) -> KvConfig {
    let mut kv = KvConfig::new();
    for (k, v) in settings.into_iter().flatten() {
        kv.set(&k, v);
    }
    kv
}

/// Generates a synthetic corpus; `settings` may hold `synth.*` keys.
#[pyfunction]
#[pyo3(signature = (seed, settings=None))]
fn generate_corpus<'py>(
    py: Python<'py>,
    seed: u64,
    settings: Option<HashMap<String, String>>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut config = SynthConfig::from_kv(&kv_from(settings)).map_err(to_py)?;
    config.seed = seed;
    let records = generate_synthetic(&config).map_err(to_py)?;
    records_to(py, &records)
}

/// Splits records 80/10/10 into `(train, dev, test)`.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn split<'py>(
    py: Python<'py>,
    records: Vec<Bound<'py, PyAny>>,
    seed: u64,
) -> PyResult<(Vec<Bound<'py, PyDict>>, Vec<Bound<'py, PyDict>>, Vec<Bound<'py, PyDict>>)> {
    let s = split_corpus(&records_from(&records)?, seed).map_err(to_py)?;
    Ok((records_to(py, &s.train)?, records_to(py, &s.dev)?, records_to(py, &s.test)?))
}

/// Micro-averaged precision, recall, F1 and exact-match accuracy.
#[pyfunction]
fn micro_prf<'py>(
    py: Python<'py>,
    predictions: Vec<Vec<String>>,
    golds: Vec<Vec<String>>,
) -> PyResult<Bound<'py, PyDict>> {
    let m = ldseq::eval::micro_prf(&predictions, &golds).map_err(to_py)?;
    metrics_to(py, &m)
}

/// Finite-difference check of every primitive and loss.
/// Returns `(passed, [(case, max relative error), ...])`.
#[pyfunction]
#[pyo3(signature = (seed=0, eps=1e-5, tolerance=1e-4))]
fn gradcheck(seed: u64, eps: f64, tolerance: f64) -> PyResult<(bool, Vec<(String, f64)>)> {
    let report = gradient_suite(seed, eps, tolerance).map_err(to_py)?;
    let cases = report
        .cases
        .iter()
        .map(|c| (c.name.clone(), c.report.max_rel_error))
        .collect();
    Ok((report.passed(), cases))
}

/// A trained neural model and its vocabularies.
#[pyclass(name = "Model", unsendable)]
struct PyModel {
    model: Model,
    vocabs: Vocabs,
    outcome: Option<TrainOutcome>,
}

#[pymethods]
impl PyModel {
    /// Trains `kind` (ld-seq2seq, basic-seq2seq or rnn-mllr). `settings`
    /// may hold `model.*` keys; `resources` is one-based, e.g. "1,2".
    #[staticmethod]
    #[pyo3(signature = (kind, train_records, dev_records, seed, resources=None, settings=None))]
    fn train(
        kind: &str,
        train_records: Vec<Bound<'_, PyAny>>,
        dev_records: Vec<Bound<'_, PyAny>>,
        seed: u64,
        resources: Option<&str>,
        settings: Option<HashMap<String, String>>,
    ) -> PyResult<Self> {
        let kind: ModelKind = kind.parse().map_err(to_py)?;
        let train_records = records_from(&train_records)?;
        let dev_records = records_from(&dev_records)?;
        let mut kv = kv_from(settings);
        kv.set("model.seed", seed.to_string());
        let hyper = HyperParams::from_kv(&kv).map_err(to_py)?;
        let resources = match resources {
            Some(r) => parse_resources(r).map_err(to_py)?,
            None => {
                let n = train_records.iter().map(|r| r.descriptions.len()).max().unwrap_or(0);
                (0..n).collect()
            }
        };
        let vocabs = Vocabs::build(&train_records);
        let mut model = Model::new(ModelConfig::new(kind, hyper, resources), &vocabs).map_err(to_py)?;
        let outcome = train(
            model.as_label_model_mut(),
            &vocabs.encode_all(&train_records),
            &vocabs.encode_all(&dev_records),
            |_| {},
        )
        .map_err(to_py)?;
        Ok(PyModel {
            model,
            vocabs,
            outcome: Some(outcome),
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let (model, vocabs, _) = Model::load(&path).map_err(to_py)?;
        Ok(PyModel {
            model,
            vocabs,
            outcome: None,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.model.save(&path, &self.vocabs, &BTreeMap::new()).map_err(to_py)
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.model.config().kind.as_str()
    }

    /// Zero-based resource indices the encoder reads.
    #[getter]
    fn resources(&self) -> Vec<usize> {
        self.model.config().resources.clone()
    }

    /// Epoch whose parameters were kept; None for loaded models.
    #[getter]
    fn best_epoch(&self) -> Option<usize> {
        self.outcome.as_ref().map(|o| o.best_epoch)
    }

    /// `(epoch, loss, dev_f1, grad_norm)` per training epoch.
    #[getter]
    fn log(&self) -> Vec<(usize, f64, f64, f64)> {
        self.outcome
            .iter()
            .flat_map(|o| o.log.iter().map(|e| (e.epoch, e.loss, e.dev_f1, e.grad_norm)))
            .collect()
    }

    /// Labels for one input, given one description per resource.
    fn predict(&self, descriptions: Vec<String>) -> PyResult<Vec<String>> {
        let record = Record {
            word: String::new(),
            descriptions,
            labels: Vec::new(),
        };
        self.predictor().predict(&record).map_err(to_py)
    }

    fn evaluate<'py>(&self, py: Python<'py>, records: Vec<Bound<'py, PyAny>>) -> PyResult<Bound<'py, PyDict>> {
        let m = evaluate(&self.predictor(), &records_from(&records)?).map_err(to_py)?;
        metrics_to(py, &m)
    }
}

impl PyModel {
    fn predictor(&self) -> NeuralPredictor<'_> {
        NeuralPredictor {
            model: &self.model,
            vocabs: &self.vocabs,
        }
    }
}

/// A classical multi-label baseline: ml-knn, lp, br or cc.
#[pyclass(name = "Baseline", unsendable)]
struct PyBaseline {
    baseline: Baseline,
    vocabs: Vocabs,
}

#[pymethods]
impl PyBaseline {
    /// Fits on `train_records`; `settings` may hold `baseline.*` keys.
    #[staticmethod]
    #[pyo3(signature = (kind, train_records, settings=None))]
    fn fit(kind: &str, train_records: Vec<Bound<'_, PyAny>>, settings: Option<HashMap<String, String>>) -> PyResult<Self> {
        let kind: BaselineKind = kind.parse().map_err(to_py)?;
        let records = records_from(&train_records)?;
        let mut kv = kv_from(settings);
        kv.set("baseline.name", kind.as_str());
        let config = BaselineConfig::from_kv(&kv).map_err(to_py)?;
        let vocabs = Vocabs::build(&records);
        let baseline = Baseline::fit(config, &vocabs.encode_all(&records), &vocabs.labels).map_err(to_py)?;
        Ok(PyBaseline { baseline, vocabs })
    }

    fn predict(&self, descriptions: Vec<String>) -> PyResult<Vec<String>> {
        let record = Record {
            word: String::new(),
            descriptions,
            labels: Vec::new(),
        };
        self.predictor().predict(&record).map_err(to_py)
    }

    fn evaluate<'py>(&self, py: Python<'py>, records: Vec<Bound<'py, PyAny>>) -> PyResult<Bound<'py, PyDict>> {
        let m = evaluate(&self.predictor(), &records_from(&records)?).map_err(to_py)?;
        metrics_to(py, &m)
    }
}

impl PyBaseline {
    fn predictor(&self) -> BaselinePredictor<'_> {
        BaselinePredictor {
            baseline: &self.baseline,
            vocabs: &self.vocabs,
        }
    }
}

#[pymodule]
fn ldseq_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("LdseqError", py.get_type::<LdseqError>())?;
    m.add("DataError", py.get_type::<DataError>())?;
    m.add("NumericalError", py.get_type::<NumericalError>())?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyBaseline>()?;
    m.add_function(wrap_pyfunction!(generate_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(split, m)?)?;
    m.add_function(wrap_pyfunction!(micro_prf, m)?)?;
    m.add_function(wrap_pyfunction!(gradcheck, m)?)?;
    Ok(())
}
