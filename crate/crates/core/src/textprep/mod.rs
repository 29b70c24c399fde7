//! Tokenization, vocabularies, sequence encoding, stemming, label encoding
//! and pretrained word-vector ingestion.

mod config;
mod glove;
mod stem;
mod tokenize;
mod vocab;

pub use config::{PreprocessConfig, Side, StemMode};
pub use glove::{load_glove, GloveLoad, FALLBACK_SCALE};
pub use stem::stem;
pub use tokenize::{is_filtered, tokenize, PUNCTUATION};
pub use vocab::{encode_and_pad, one_hot, pad_ids, Vocabulary, OOV, PAD};
