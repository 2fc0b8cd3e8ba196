//! Corpora, vocabularies, splitting, synthetic generation and label
//! embedding pretraining.

mod corpus;
mod sgns;
mod split;
mod synth;
pub mod vocab;

pub use corpus::{
    load_corpus, parse_records, read_records, records_to_string, write_records, Corpus, Example,
    Record, Vocabs, MAX_DESCRIPTION_TOKENS,
};
pub use sgns::{pretrain_label_embeddings, SgnsOptions};
pub use split::{split_corpus, Split};
pub use synth::{generate_synthetic, SpanOracle, SynthConfig};
pub use vocab::{Vocab, EOS, NUM_RESERVED, PAD, UNK};
