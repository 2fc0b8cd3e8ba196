//! Classical multi-label baselines over character n-gram counts.

mod features;
mod logreg;
mod mlknn;

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;

pub use features::{cosine_distance, dot, norm, FeatureSpace, FeatureVector};
pub use logreg::{check_order, LinearModel, LogRegOptions, Output};
pub use mlknn::MlKnn;

use crate::config::KvConfig;
use crate::data::{Example, Vocab, NUM_RESERVED};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaselineKind {
    MlKnn,
    Lp,
    Br,
    Cc,
}

impl BaselineKind {
    /// Table order.
    pub const ALL: [BaselineKind; 4] = [BaselineKind::MlKnn, BaselineKind::Lp, BaselineKind::Br, BaselineKind::Cc];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::MlKnn => "ml-knn",
            BaselineKind::Lp => "lp",
            BaselineKind::Br => "br",
            BaselineKind::Cc => "cc",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            BaselineKind::MlKnn => "ML-KNN",
            BaselineKind::Lp => "LP",
            BaselineKind::Br => "BR",
            BaselineKind::Cc => "CC",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ml-knn" | "mlknn" => Ok(BaselineKind::MlKnn),
            "lp" => Ok(BaselineKind::Lp),
            "br" => Ok(BaselineKind::Br),
            "cc" => Ok(BaselineKind::Cc),
            other => Err(Error::Config(format!("unknown baseline `{other}` (ml-knn|lp|br|cc)"))),
        }
    }
}

/// Label order of a classifier chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChainOrder {
    /// Descending training frequency, ties by label id.
    Frequency,
    /// Ascending label id.
    Canonical,
    /// Explicit label names; must cover every label exactly once.
    Names(Vec<String>),
}

impl FromStr for ChainOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "frequency" => ChainOrder::Frequency,
            "canonical" => ChainOrder::Canonical,
            list => ChainOrder::Names(list.split(',').map(|x| x.trim().to_string()).collect()),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineConfig {
    pub kind: BaselineKind,
    pub k: usize,
    pub smooth: f64,
    pub order: ChainOrder,
    pub logreg: LogRegOptions,
}

impl BaselineConfig {
    pub fn new(kind: BaselineKind) -> Self {
        BaselineConfig {
            kind,
            k: 10,
            smooth: 1.0,
            order: ChainOrder::Frequency,
            logreg: LogRegOptions::default(),
        }
    }

    /// Reads `baseline.{name,k,smooth,order,lr,epochs}`.
    pub fn from_kv(kv: &KvConfig) -> Result<Self> {
        let s = kv.section("baseline");
        let kind = s.get("name").unwrap_or("br").parse()?;
        let base = Self::new(kind);
        Ok(BaselineConfig {
            kind,
            k: s.parsed_or("k", base.k)?,
            smooth: s.parsed_or("smooth", base.smooth)?,
            order: match s.get("order") {
                Some(o) => o.parse()?,
                None => base.order,
            },
            logreg: LogRegOptions {
                lr: s.parsed_or("lr", base.logreg.lr)?,
                epochs: s.parsed_or("epochs", base.logreg.epochs)?,
            },
        })
    }
}

#[derive(Clone, Debug)]
enum Inner {
    MlKnn(MlKnn),
    Br(LinearModel),
    Lp(LinearModel, Vec<Vec<usize>>),
    Cc(LinearModel),
}

/// A fitted baseline together with its feature space.
#[derive(Clone, Debug)]
pub struct Baseline {
    pub config: BaselineConfig,
    features: FeatureSpace,
    inner: Inner,
}

fn column_order(order: &ChainOrder, train: &[Example], labels: &Vocab) -> Result<Vec<usize>> {
    let k = labels.len() - NUM_RESERVED;
    let cols = match order {
        ChainOrder::Canonical => (0..k).collect(),
        ChainOrder::Frequency => {
            let mut freq = vec![0usize; k];
            for ex in train {
                for &l in &ex.labels {
                    freq[l - NUM_RESERVED] += 1;
                }
            }
            let mut cols: Vec<usize> = (0..k).collect();
            cols.sort_by(|&a, &b| freq[b].cmp(&freq[a]).then(a.cmp(&b)));
            cols
        }
        ChainOrder::Names(names) => names
            .iter()
            .map(|n| match labels.get(n) {
                Some(id) if id >= NUM_RESERVED => Ok(id - NUM_RESERVED),
                _ => Err(Error::Config(format!("chain order names unknown label `{n}`"))),
            })
            .collect::<Result<_>>()?,
    };
    check_order(&cols, k)?;
    Ok(cols)
}

impl Baseline {
    /// Fits on `train`; `labels` is the label vocabulary built on the same
    /// portion.
    pub fn fit(config: BaselineConfig, train: &[Example], labels: &Vocab) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Data("baselines need a nonempty training set".into()));
        }
        let features = FeatureSpace::fit(train);
        let rows = features.transform_all(train);
        let k = labels.len().saturating_sub(NUM_RESERVED);
        let gold: Vec<Vec<usize>> = train.iter().map(|e| e.labels.clone()).collect();
        if let Some(bad) = gold.iter().flatten().find(|&&l| l < NUM_RESERVED || l >= labels.len()) {
            return Err(Error::Data(format!("label id {bad} is not an ordinary label")));
        }
        let binary = || {
            let mut y = vec![0.0; train.len() * k];
            for (i, ls) in gold.iter().enumerate() {
                for &l in ls {
                    y[i * k + l - NUM_RESERVED] = 1.0;
                }
            }
            y
        };
        let inner = match config.kind {
            BaselineKind::MlKnn => Inner::MlKnn(MlKnn::fit(rows, &gold, labels.len(), config.k, config.smooth)?),
            BaselineKind::Br => {
                let y = binary();
                for c in 0..k {
                    if (0..train.len()).all(|i| y[i * k + c] == 0.0) {
                        log::warn!("label `{}` has no positive training example", labels.token(c + NUM_RESERVED));
                    }
                }
                let x = features.matrix(&rows)?;
                Inner::Br(LinearModel::fit_sigmoid(&x, y, k, None, &config.logreg)?)
            }
            BaselineKind::Cc => {
                let order = column_order(&config.order, train, labels)?;
                let x = features.matrix(&rows)?;
                Inner::Cc(LinearModel::fit_sigmoid(&x, binary(), k, Some(order), &config.logreg)?)
            }
            BaselineKind::Lp => {
                let mut combos: IndexMap<Vec<usize>, usize> = IndexMap::new();
                let classes: Vec<usize> = gold
                    .iter()
                    .map(|ls| {
                        let mut set = ls.clone();
                        set.sort_unstable();
                        let next = combos.len();
                        *combos.entry(set).or_insert(next)
                    })
                    .collect();
                let x = features.matrix(&rows)?;
                let model = LinearModel::fit_softmax(&x, &classes, combos.len(), &config.logreg)?;
                Inner::Lp(model, combos.into_keys().collect())
            }
        };
        Ok(Baseline {
            config,
            features,
            inner,
        })
    }

    pub fn features(&self) -> &FeatureSpace {
        &self.features
    }

    /// Predicted label ids, ascending.
    pub fn predict(&self, example: &Example) -> Vec<usize> {
        let x = self.features.transform(example);
        let threshold = |p: Vec<f64>| -> Vec<usize> {
            p.iter()
                .enumerate()
                .filter(|(_, &v)| v > 0.5)
                .map(|(c, _)| c + NUM_RESERVED)
                .collect()
        };
        match &self.inner {
            Inner::MlKnn(m) => m.predict(&x).into_iter().filter(|&l| l >= NUM_RESERVED).collect(),
            Inner::Br(m) | Inner::Cc(m) => threshold(m.probabilities(&x)),
            Inner::Lp(m, combos) => {
                let p = m.probabilities(&x);
                let mut best = 0;
                for (c, &v) in p.iter().enumerate() {
                    if v > p[best] {
                        best = c;
                    }
                }
                combos[best].clone()
            }
        }
    }

    pub fn predict_all(&self, examples: &[Example]) -> Vec<Vec<usize>> {
        examples.iter().map(|e| self.predict(e)).collect()
    }
}
