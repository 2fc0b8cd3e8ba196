//! Seeded synthetic corpora standing in for real word descriptions.
//!
//! Every label owns a private inventory of characters. An example samples a
//! label set (biased towards one label group so labels co-occur), and each
//! resource describes the labels it reveals as short character spans,
//! separated by filler characters and corrupted at the noise rate. Gold
//! label order is the global label index order restricted to the set.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;

use super::corpus::Record;
use crate::config::KvConfig;
use crate::error::{Error, Result};
use crate::ndcore::seeded_rng;

const LABEL_CHAR_BASE: u32 = 0x4E00;
const FILLER_CHAR_BASE: u32 = 0x3041;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub num_labels: usize,
    pub num_examples: usize,
    /// Inclusive bounds of the uniform label-set size.
    pub min_labels: usize,
    pub max_labels: usize,
    pub tokens_per_label: usize,
    /// Inclusive bounds of the span length emitted per revealed label.
    pub span_min: usize,
    pub span_max: usize,
    pub filler_tokens: usize,
    pub max_filler: usize,
    /// Labels are partitioned round-robin into this many groups.
    pub groups: usize,
    /// Probability that each extra label is drawn from the anchor's group.
    pub group_affinity: f64,
    /// Per-token probability of replacing a span token with another label's token.
    pub noise: f64,
    /// Per resource, the half-open fraction `[start, end)` of the label
    /// index range it reveals.
    pub reveal: Vec<(f64, f64)>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_labels: 50,
            num_examples: 2500,
            min_labels: 1,
            max_labels: 6,
            tokens_per_label: 4,
            span_min: 2,
            span_max: 4,
            filler_tokens: 16,
            max_filler: 2,
            groups: 10,
            group_affinity: 0.7,
            noise: 0.2,
            reveal: vec![(0.0, 0.6), (0.4, 1.0)],
            seed: 7,
        }
    }
}

fn parse_reveal(text: &str) -> Result<Vec<(f64, f64)>> {
    text.split(',')
        .map(|part| {
            let (a, b) = part
                .trim()
                .split_once('-')
                .ok_or_else(|| Error::Config(format!("reveal range `{part}` is not start-end")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad reveal bound `{s}`")))
            };
            Ok((parse(a)?, parse(b)?))
        })
        .collect()
}

impl SynthConfig {
    pub fn resource_count(&self) -> usize {
        self.reveal.len()
    }

    /// Reads `synth.*` keys over the defaults.
    pub fn from_kv(kv: &KvConfig) -> Result<Self> {
        let d = SynthConfig::default();
        let s = kv.section("synth");
        let reveal = match s.get("reveal") {
            Some(text) => parse_reveal(text)?,
            None => d.reveal.clone(),
        };
        let cfg = SynthConfig {
            num_labels: s.parsed_or("num_labels", d.num_labels)?,
            num_examples: s.parsed_or("num_examples", d.num_examples)?,
            min_labels: s.parsed_or("min_labels", d.min_labels)?,
            max_labels: s.parsed_or("max_labels", d.max_labels)?,
            tokens_per_label: s.parsed_or("tokens_per_label", d.tokens_per_label)?,
            span_min: s.parsed_or("span_min", d.span_min)?,
            span_max: s.parsed_or("span_max", d.span_max)?,
            filler_tokens: s.parsed_or("filler_tokens", d.filler_tokens)?,
            max_filler: s.parsed_or("max_filler", d.max_filler)?,
            groups: s.parsed_or("groups", d.groups)?,
            group_affinity: s.parsed_or("group_affinity", d.group_affinity)?,
            noise: s.parsed_or("noise", d.noise)?,
            reveal,
            seed: s.parsed_or("seed", d.seed)?,
        };
        if let Some(r) = s.parsed::<usize>("resources")? {
            if r != cfg.resource_count() {
                return Err(Error::Config(format!(
                    "synth.resources = {r} but synth.reveal lists {} ranges",
                    cfg.resource_count()
                )));
            }
        }
        Ok(cfg)
    }

    pub fn to_kv(&self) -> KvConfig {
        let mut kv = KvConfig::new();
        let reveal: Vec<String> = self.reveal.iter().map(|(a, b)| format!("{a}-{b}")).collect();
        for (k, v) in [
            ("num_labels", self.num_labels.to_string()),
            ("num_examples", self.num_examples.to_string()),
            ("min_labels", self.min_labels.to_string()),
            ("max_labels", self.max_labels.to_string()),
            ("tokens_per_label", self.tokens_per_label.to_string()),
            ("span_min", self.span_min.to_string()),
            ("span_max", self.span_max.to_string()),
            ("filler_tokens", self.filler_tokens.to_string()),
            ("max_filler", self.max_filler.to_string()),
            ("groups", self.groups.to_string()),
            ("group_affinity", self.group_affinity.to_string()),
            ("noise", self.noise.to_string()),
            ("reveal", reveal.join(",")),
            ("resources", self.resource_count().to_string()),
            ("seed", self.seed.to_string()),
        ] {
            kv.set(&format!("synth.{k}"), v);
        }
        kv
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.num_labels < 2 {
            return bad(format!("num_labels must be at least 2, got {}", self.num_labels));
        }
        if self.num_examples < 10 {
            return bad(format!("num_examples must be at least 10, got {}", self.num_examples));
        }
        if !(0.0..1.0).contains(&self.noise) {
            return bad(format!("noise must lie in [0, 1), got {}", self.noise));
        }
        if !(0.0..=1.0).contains(&self.group_affinity) {
            return bad(format!("group_affinity must lie in [0, 1], got {}", self.group_affinity));
        }
        if self.min_labels == 0 || self.min_labels > self.max_labels || self.max_labels > self.num_labels {
            return bad(format!(
                "label-set size bounds {}..={} invalid for {} labels",
                self.min_labels, self.max_labels, self.num_labels
            ));
        }
        if self.tokens_per_label == 0 || self.span_min == 0 || self.span_min > self.span_max {
            return bad("token inventory and span bounds must be positive and ordered".into());
        }
        if self.filler_tokens == 0 || self.groups == 0 {
            return bad("filler_tokens and groups must be positive".into());
        }
        if self.reveal.is_empty() {
            return bad("at least one resource is required".into());
        }
        for &(a, b) in &self.reveal {
            if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a >= b {
                return bad(format!("reveal range {a}-{b} invalid"));
            }
        }
        if let Some(l) = (0..self.num_labels).find(|&l| self.revealing(l).is_empty()) {
            return bad(format!("label {l} is revealed by no resource"));
        }
        Ok(())
    }

    /// Resources whose description reveals label `l`.
    pub fn revealing(&self, l: usize) -> Vec<usize> {
        let pos = l as f64 / self.num_labels as f64;
        self.reveal
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| pos >= a && pos < b)
            .map(|(r, _)| r)
            .collect()
    }

    pub fn reveals(&self, resource: usize, l: usize) -> bool {
        let (a, b) = self.reveal[resource];
        let pos = l as f64 / self.num_labels as f64;
        pos >= a && pos < b
    }

    pub fn label_name(&self, l: usize) -> String {
        let width = (self.num_labels - 1).to_string().len().max(2);
        format!("s{l:0width$}")
    }

    pub fn label_token(&self, l: usize, k: usize) -> char {
        char::from_u32(LABEL_CHAR_BASE + (l * self.tokens_per_label + k) as u32).unwrap()
    }

    fn filler(&self, k: usize) -> char {
        char::from_u32(FILLER_CHAR_BASE + k as u32).unwrap()
    }
}

/// Generates the full corpus; gold labels are listed in canonical order.
pub fn generate_synthetic(config: &SynthConfig) -> Result<Vec<Record>> {
    config.validate()?;
    let mut rng = seeded_rng(config.seed);
    let n = config.num_labels;
    let group_of = |l: usize| l % config.groups;
    let members: Vec<Vec<usize>> = (0..config.groups)
        .map(|g| (0..n).filter(|&l| group_of(l) == g).collect())
        .collect();

    let mut records = Vec::with_capacity(config.num_examples);
    for i in 0..config.num_examples {
        let size = rng.gen_range(config.min_labels..=config.max_labels);
        let anchor = i % n;
        let mut set = BTreeSet::from([anchor]);
        while set.len() < size {
            let pool = &members[group_of(anchor)];
            let l = if rng.gen_bool(config.group_affinity) && set.len() < pool.len() {
                *pool.choose(&mut rng).unwrap()
            } else {
                rng.gen_range(0..n)
            };
            set.insert(l);
        }
        let labels: Vec<usize> = set.into_iter().collect();
        let descriptions = (0..config.resource_count())
            .map(|r| describe(config, r, &labels, &mut rng))
            .collect();
        let width = (config.num_examples - 1).to_string().len();
        records.push(Record {
            word: format!("w{i:0width$}"),
            descriptions,
            labels: labels.iter().map(|&l| config.label_name(l)).collect(),
        });
    }
    Ok(records)
}

fn describe<R: Rng>(config: &SynthConfig, resource: usize, labels: &[usize], rng: &mut R) -> String {
    let mut shown: Vec<usize> = labels
        .iter()
        .copied()
        .filter(|&l| config.reveals(resource, l))
        .collect();
    shown.shuffle(rng);
    let mut out = String::new();
    let filler = |out: &mut String, rng: &mut R, min: usize| {
        for _ in 0..rng.gen_range(min..=config.max_filler.max(min)) {
            out.push(config.filler(rng.gen_range(0..config.filler_tokens)));
        }
    };
    if shown.is_empty() {
        filler(&mut out, rng, 2);
        return out;
    }
    filler(&mut out, rng, 0);
    for l in shown {
        for _ in 0..rng.gen_range(config.span_min..=config.span_max) {
            let owner = if config.noise > 0.0 && rng.gen_bool(config.noise) {
                let other = rng.gen_range(0..config.num_labels - 1);
                if other >= l {
                    other + 1
                } else {
                    other
                }
            } else {
                l
            };
            out.push(config.label_token(owner, rng.gen_range(0..config.tokens_per_label)));
        }
        filler(&mut out, rng, 1);
    }
    out
}

/// Reads label spans back out of a description using the known inventories.
///
/// A label is predicted when any of its inventory characters appears in one
/// of the selected resources. On noise-free corpora this recovers the gold
/// set exactly.
#[derive(Clone, Debug)]
pub struct SpanOracle {
    owner: HashMap<char, usize>,
    names: Vec<String>,
}

impl SpanOracle {
    pub fn new(config: &SynthConfig) -> Self {
        let mut owner = HashMap::new();
        for l in 0..config.num_labels {
            for k in 0..config.tokens_per_label {
                owner.insert(config.label_token(l, k), l);
            }
        }
        SpanOracle {
            owner,
            names: (0..config.num_labels).map(|l| config.label_name(l)).collect(),
        }
    }

    /// Predicted labels in canonical order.
    pub fn predict(&self, record: &Record, resources: &[usize]) -> Vec<String> {
        let found: BTreeSet<usize> = resources
            .iter()
            .filter_map(|&r| record.descriptions.get(r))
            .flat_map(|d| d.chars())
            .filter_map(|c| self.owner.get(&c).copied())
            .collect();
        found.into_iter().map(|l| self.names[l].clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::corpus::records_to_string;

    fn small(noise: f64, reveal: Vec<(f64, f64)>) -> SynthConfig {
        SynthConfig {
            num_labels: 12,
            num_examples: 200,
            noise,
            reveal,
            groups: 3,
            seed: 11,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn config_errors() {
        let mut c = small(0.0, vec![(0.0, 1.0)]);
        c.num_labels = 1;
        assert!(generate_synthetic(&c).is_err());
        let mut c = small(0.0, vec![(0.0, 1.0)]);
        c.num_examples = 9;
        assert!(generate_synthetic(&c).is_err());
        let c = small(1.0, vec![(0.0, 1.0)]);
        assert!(generate_synthetic(&c).is_err());
        let c = small(0.0, vec![(0.0, 0.5)]);
        assert!(generate_synthetic(&c).is_err());
    }

    #[test]
    fn deterministic_under_seed() {
        let c = small(0.2, vec![(0.0, 0.6), (0.4, 1.0)]);
        let a = records_to_string(&generate_synthetic(&c).unwrap());
        let b = records_to_string(&generate_synthetic(&c).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn kv_round_trip() {
        let c = small(0.2, vec![(0.0, 0.6), (0.4, 1.0)]);
        assert_eq!(SynthConfig::from_kv(&c.to_kv()).unwrap(), c);
    }

    #[test]
    fn labels_are_canonical_and_unique() {
        let c = small(0.2, vec![(0.0, 0.6), (0.4, 1.0)]);
        for r in generate_synthetic(&c).unwrap() {
            let mut sorted = r.labels.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted, r.labels);
            assert!(r.descriptions.iter().any(|d| !d.is_empty()));
            assert!((c.min_labels..=c.max_labels).contains(&r.labels.len()));
        }
    }
}
