use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{PreprocessConfig, Side};
use crate::error::{Error, Result};
use crate::numkit::Tensor;

pub const PAD: usize = 0;
pub const OOV: usize = 1;
const FIRST_WORD: usize = 2;

/// Frequency-ranked word index. Ids 0 and 1 are reserved for padding and
/// unknown words; fitted words occupy `2..len+2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
    max_words: Option<usize>,
    fitted_on: String,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    words: Vec<String>,
    max_words: Option<usize>,
    fitted_on: String,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        let index = r
            .words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i + FIRST_WORD))
            .collect();
        Vocabulary {
            words: r.words,
            index,
            max_words: r.max_words,
            fitted_on: r.fitted_on,
        }
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            words: v.words,
            max_words: v.max_words,
            fitted_on: v.fitted_on,
        }
    }
}

impl Vocabulary {
    /// Rank words by descending frequency, ties by first occurrence. With
    /// `max_words`, only the top `max_words - 2` words are kept.
    pub fn fit<S: AsRef<str>>(corpus: &[Vec<S>], max_words: Option<usize>) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::Config(
                "cannot fit a vocabulary on an empty corpus".into(),
            ));
        }
        if let Some(m) = max_words {
            if m <= FIRST_WORD {
                return Err(Error::Config(format!(
                    "max_words must exceed {FIRST_WORD}, got {m}"
                )));
            }
        }
        let mut counts: HashMap<&str, (usize, usize)> = HashMap::new();
        let mut hasher = Sha256::new();
        let mut seen = 0usize;
        for doc in corpus {
            for tok in doc {
                let tok = tok.as_ref();
                hasher.update(tok.as_bytes());
                hasher.update([0u8]);
                if tok.is_empty() {
                    continue;
                }
                let entry = counts.entry(tok).or_insert((0, seen));
                entry.0 += 1;
                seen += 1;
            }
            hasher.update([1u8]);
        }
        if counts.is_empty() {
            return Err(Error::Config("corpus contains no tokens".into()));
        }
        let mut ranked: Vec<(&str, usize, usize)> = counts
            .into_iter()
            .map(|(w, (c, first))| (w, c, first))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
        if let Some(m) = max_words {
            ranked.truncate(m - FIRST_WORD);
        }
        let words: Vec<String> = ranked.into_iter().map(|(w, _, _)| w.to_owned()).collect();
        let fingerprint = hasher.finalize();
        let fitted_on = fingerprint
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect();
        Ok(VocabularyRepr {
            words,
            max_words,
            fitted_on,
        }
        .into())
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn id(&self, word: &str) -> usize {
        self.get(word).unwrap_or(OOV)
    }

    pub fn word(&self, id: usize) -> Option<&str> {
        id.checked_sub(FIRST_WORD)
            .and_then(|i| self.words.get(i))
            .map(String::as_str)
    }

    /// Words in index order, starting at id 2.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Number of fitted words, excluding reserved ids.
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Embedding rows needed: fitted words plus the two reserved ids.
    pub fn table_size(&self) -> usize {
        self.words.len() + FIRST_WORD
    }

    pub fn max_words(&self) -> Option<usize> {
        self.max_words
    }

    pub fn fingerprint(&self) -> &str {
        &self.fitted_on
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }
}

/// Map tokens to ids and pad or truncate to exactly `config.max_len`.
pub fn encode_and_pad<S: AsRef<str>>(
    tokens: &[S],
    vocab: &Vocabulary,
    config: &PreprocessConfig,
) -> Vec<usize> {
    pad_ids(vocab.encode(tokens), config)
}

pub fn pad_ids(mut ids: Vec<usize>, config: &PreprocessConfig) -> Vec<usize> {
    let n = config.max_len;
    if ids.len() > n {
        match config.truncation {
            Side::Pre => {
                ids.drain(..ids.len() - n);
            }
            Side::Post => ids.truncate(n),
        }
    }
    let missing = n - ids.len();
    match config.padding {
        Side::Pre => {
            let mut out = vec![PAD; missing];
            out.extend(ids);
            out
        }
        Side::Post => {
            ids.resize(n, PAD);
            ids
        }
    }
}

pub fn one_hot(labels: &[usize], num_classes: usize) -> Result<Tensor> {
    if labels.is_empty() || num_classes == 0 {
        return Err(Error::EmptyInput("one_hot labels"));
    }
    let mut t = Tensor::zeros(&[labels.len(), num_classes]);
    for (row, &label) in labels.iter().enumerate() {
        if label >= num_classes {
            return Err(Error::Index {
                what: "one_hot label",
                index: label,
                limit: num_classes,
            });
        }
        t.row_mut(row)[label] = 1.0;
    }
    Ok(t)
}
