use std::collections::HashMap;

use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const EOS: usize = 2;
pub const NUM_RESERVED: usize = 3;

const RESERVED: [&str; NUM_RESERVED] = ["<pad>", "<unk>", "<eos>"];

/// Bijection between surface tokens and contiguous ids.
///
/// Ids `0..3` are reserved for padding, unknown tokens and end-of-sequence;
/// ordinary tokens follow in sorted order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Default for Vocab {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocab {
    pub fn new() -> Self {
        let tokens: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        let index = tokens.iter().cloned().zip(0..).collect();
        Vocab { tokens, index }
    }

    /// Builds a vocabulary from every distinct token, sorted.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut uniq: Vec<String> = tokens.into_iter().map(Into::into).collect();
        uniq.sort_unstable();
        uniq.dedup();
        let mut vocab = Vocab::new();
        for t in uniq {
            vocab.insert(t);
        }
        vocab
    }

    /// Rebuilds from the full ordered token list, reserved entries included.
    pub fn from_ordered(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < NUM_RESERVED || tokens[..NUM_RESERVED] != RESERVED {
            return Err(Error::Data("vocabulary does not start with reserved tokens".into()));
        }
        let index: HashMap<String, usize> = tokens.iter().cloned().zip(0..).collect();
        if index.len() != tokens.len() {
            return Err(Error::Data("vocabulary contains duplicate tokens".into()));
        }
        Ok(Vocab { tokens, index })
    }

    fn insert(&mut self, token: String) -> usize {
        if let Some(&id) = self.index.get(&token) {
            return id;
        }
        let id = self.tokens.len();
        self.index.insert(token.clone(), id);
        self.tokens.push(token);
        id
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Id of `token`, or [`UNK`] for tokens outside the vocabulary.
    pub fn encode(&self, token: &str) -> usize {
        self.get(token).unwrap_or(UNK)
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Size including the reserved entries.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() == NUM_RESERVED
    }

    pub fn is_reserved(id: usize) -> bool {
        id < NUM_RESERVED
    }
}
