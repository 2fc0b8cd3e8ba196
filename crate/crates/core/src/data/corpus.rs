use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::vocab::{Vocab, UNK};
use crate::error::{Error, Result};

/// Descriptions longer than this many characters are truncated on encoding.
pub const MAX_DESCRIPTION_TOKENS: usize = 256;

/// One line of a corpus file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub word: String,
    pub descriptions: Vec<String>,
    pub labels: Vec<String>,
}

impl Record {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.labels.is_empty() {
            return Err("record has no labels".into());
        }
        if self.descriptions.iter().all(String::is_empty) {
            return Err("all descriptions are empty".into());
        }
        let mut seen = HashSet::new();
        for l in &self.labels {
            if !seen.insert(l.as_str()) {
                return Err(format!("duplicate label `{l}`"));
            }
        }
        Ok(())
    }
}

/// A record encoded against a pair of vocabularies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Example {
    pub word: String,
    /// One character-id sequence per resource; absent resources are empty.
    pub descriptions: Vec<Vec<usize>>,
    /// Gold label ids in target order, without the end marker.
    pub labels: Vec<usize>,
}

impl Example {
    pub fn resource_count(&self) -> usize {
        self.descriptions.len()
    }

    /// Descriptions restricted to the given resource indices.
    pub fn select(&self, resources: &[usize]) -> Vec<&[usize]> {
        resources
            .iter()
            .map(|&r| self.descriptions.get(r).map_or(&[][..], Vec::as_slice))
            .collect()
    }
}

/// Character and label vocabularies built from a training portion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabs {
    pub chars: Vocab,
    pub labels: Vocab,
}

impl Vocabs {
    pub fn build(train: &[Record]) -> Self {
        let chars = Vocab::from_tokens(
            train
                .iter()
                .flat_map(|r| r.descriptions.iter())
                .flat_map(|d| d.chars().take(MAX_DESCRIPTION_TOKENS))
                .map(String::from),
        );
        let labels = Vocab::from_tokens(train.iter().flat_map(|r| r.labels.iter().cloned()));
        Vocabs { chars, labels }
    }

    pub fn encode(&self, record: &Record) -> Example {
        let descriptions = record
            .descriptions
            .iter()
            .map(|d| {
                let ids: Vec<usize> = d
                    .chars()
                    .take(MAX_DESCRIPTION_TOKENS)
                    .map(|c| self.chars.encode(c.encode_utf8(&mut [0; 4])))
                    .collect();
                if ids.len() == MAX_DESCRIPTION_TOKENS && d.chars().nth(MAX_DESCRIPTION_TOKENS).is_some() {
                    log::debug!("truncated description of `{}`", record.word);
                }
                ids
            })
            .collect();
        let labels = record.labels.iter().map(|l| self.labels.encode(l)).collect();
        Example {
            word: record.word.clone(),
            descriptions,
            labels,
        }
    }

    pub fn encode_all(&self, records: &[Record]) -> Vec<Example> {
        records.iter().map(|r| self.encode(r)).collect()
    }

    /// Label strings for a sequence of ids.
    pub fn label_names(&self, ids: &[usize]) -> Vec<String> {
        ids.iter().map(|&i| self.labels.token(i).to_string()).collect()
    }

    /// Number of ids in `labels` that fall outside the vocabulary.
    pub fn unknown_labels(example: &Example) -> usize {
        example.labels.iter().filter(|&&l| l == UNK).count()
    }
}

/// A loaded corpus with vocabularies built from the same file.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub records: Vec<Record>,
    pub examples: Vec<Example>,
    pub vocabs: Vocabs,
}

pub fn parse_records(path: &Path, text: &str) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::Corpus {
            path: path.to_path_buf(),
            line: n + 1,
            msg,
        };
        let rec: Record = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        rec.validate().map_err(err)?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_records(path: &Path) -> Result<Vec<Record>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let records = parse_records(path, &text)?;
    if records.is_empty() {
        log::warn!("{} contains no records", path.display());
    }
    Ok(records)
}

/// Serialises records as one JSON object per line.
pub fn records_to_string(records: &[Record]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serialises"));
        out.push('\n');
    }
    out
}

pub fn write_records(path: &Path, records: &[Record]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(records_to_string(records).as_bytes())
        .map_err(|e| Error::io(path, e))
}

/// Reads a corpus and builds vocabularies from it, treating it as training data.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let records = read_records(path)?;
    let vocabs = Vocabs::build(&records);
    let examples = vocabs.encode_all(&records);
    Ok(Corpus {
        records,
        examples,
        vocabs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Vec<Record>> {
        parse_records(Path::new("corpus.jsonl"), text)
    }

    #[test]
    fn direct_parse() {
        let recs = parse(r#"{"word":"w","descriptions":["ab",""],"labels":["s1","s2"]}"#).unwrap();
        let vocabs = Vocabs::build(&recs);
        let ex = vocabs.encode(&recs[0]);
        assert_eq!(ex.descriptions[0].len(), 2);
        assert!(ex.descriptions[1].is_empty());
        assert_eq!(ex.labels.len(), 2);
    }

    #[test]
    fn empty_file_is_empty_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.jsonl");
        fs::write(&p, "").unwrap();
        let c = load_corpus(&p).unwrap();
        assert!(c.examples.is_empty());
        assert!(c.vocabs.chars.is_empty() && c.vocabs.labels.is_empty());
    }

    #[test]
    fn invalid_records_report_their_line() {
        let ok = r#"{"word":"w","descriptions":["ab"],"labels":["s1"]}"#;
        let dup = r#"{"word":"v","descriptions":["ab"],"labels":["a","a"]}"#;
        let err = parse(&format!("{ok}\n{dup}\n")).unwrap_err();
        assert!(matches!(err, Error::Corpus { line: 2, .. }), "{err}");

        let blank = r#"{"word":"v","descriptions":["",""],"labels":["a"]}"#;
        assert!(matches!(parse(blank), Err(Error::Corpus { line: 1, .. })));
        let nolabels = r#"{"word":"v","descriptions":["x"]}"#;
        assert!(matches!(parse(nolabels), Err(Error::Corpus { line: 1, .. })));
        let empty = r#"{"word":"v","descriptions":["x"],"labels":[]}"#;
        assert!(matches!(parse(empty), Err(Error::Corpus { line: 1, .. })));
    }

    #[test]
    fn unseen_tokens_map_to_unk_without_growing_vocab() {
        let train = parse(r#"{"word":"w","descriptions":["ab"],"labels":["s1"]}"#).unwrap();
        let dev = parse(r#"{"word":"v","descriptions":["az"],"labels":["s9"]}"#).unwrap();
        let vocabs = Vocabs::build(&train);
        let before = vocabs.clone();
        let ex = vocabs.encode(&dev[0]);
        assert_eq!(ex.descriptions[0][1], UNK);
        assert_eq!(ex.labels, vec![UNK]);
        assert_eq!(vocabs, before);
    }

    #[test]
    fn long_descriptions_are_truncated() {
        let long: String = "x".repeat(300);
        let rec = Record {
            word: "w".into(),
            descriptions: vec![long],
            labels: vec!["a".into()],
        };
        let vocabs = Vocabs::build(std::slice::from_ref(&rec));
        assert_eq!(vocabs.encode(&rec).descriptions[0].len(), MAX_DESCRIPTION_TOKENS);
    }
}
