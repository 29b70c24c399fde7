//! Dataset ingestion: sentiment CSVs (IMDB, Twitter), ISEAR emotions,
//! banking-77 intents and the GMB entity corpus, plus seeded splitting.

mod classification;
mod gmb;
mod split;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use classification::{load_banking, load_isear, load_sentiment, SentimentSchema, EMOTIONS};
pub use gmb::{is_valid_tag, load_gmb};
pub use split::{split, split_indices, SplitSpec, Splittable};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetId {
    Imdb,
    Twitter,
    Isear,
    Banking77,
    Gmb,
    Custom,
}

impl fmt::Display for DatasetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DatasetId::Imdb => "imdb",
            DatasetId::Twitter => "twitter",
            DatasetId::Isear => "isear",
            DatasetId::Banking77 => "banking77",
            DatasetId::Gmb => "gmb",
            DatasetId::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// Row accounting for a loader run: `rows_read == rows_kept + rows_dropped`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows_read: usize,
    pub rows_kept: usize,
    pub rows_dropped: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Stop after this many kept examples (rows for classification
    /// corpora, sentences for tagged corpora).
    pub limit: Option<usize>,
}

impl LoadOptions {
    pub fn limit(n: Option<usize>) -> Self {
        LoadOptions { limit: n }
    }

    fn reached(&self, kept: usize) -> bool {
        self.limit.is_some_and(|l| kept >= l)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationCorpus {
    pub texts: Vec<String>,
    pub labels: Vec<usize>,
    pub label_names: Vec<String>,
    pub source: DatasetId,
    pub report: LoadReport,
}

impl ClassificationCorpus {
    pub fn new(
        texts: Vec<String>,
        labels: Vec<usize>,
        label_names: Vec<String>,
        source: DatasetId,
    ) -> Result<Self> {
        if texts.len() != labels.len() {
            return Err(Error::dim(
                "classification corpus",
                &[texts.len()],
                &[labels.len()],
            ));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= label_names.len()) {
            return Err(Error::Index {
                what: "corpus label",
                index: bad,
                limit: label_names.len(),
            });
        }
        if texts.iter().any(|t| t.trim().is_empty()) {
            return Err(Error::Validation("corpus contains an empty text".into()));
        }
        let n = texts.len();
        Ok(ClassificationCorpus {
            texts,
            labels,
            label_names,
            source,
            report: LoadReport {
                rows_read: n,
                rows_kept: n,
                rows_dropped: 0,
            },
        })
    }

    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }

    pub fn label_id(&self, name: &str) -> Option<usize> {
        self.label_names.iter().position(|n| n == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedCorpus {
    pub sentences: Vec<Vec<String>>,
    pub tag_sequences: Vec<Vec<String>>,
    pub tag_names: Vec<String>,
    pub report: LoadReport,
}

impl TaggedCorpus {
    /// Build from parallel token and tag lists; the tag inventory is `O`
    /// followed by the remaining tags in sorted order.
    pub fn new(sentences: Vec<Vec<String>>, tag_sequences: Vec<Vec<String>>) -> Result<Self> {
        if sentences.len() != tag_sequences.len() {
            return Err(Error::dim(
                "tagged corpus",
                &[sentences.len()],
                &[tag_sequences.len()],
            ));
        }
        for (s, t) in sentences.iter().zip(&tag_sequences) {
            if s.len() != t.len() {
                return Err(Error::dim("tagged sentence", &[s.len()], &[t.len()]));
            }
            if let Some(bad) = t.iter().find(|t| !is_valid_tag(t)) {
                return Err(Error::Validation(format!(
                    "tag `{bad}` is not in the B-/I-/O scheme"
                )));
            }
        }
        let tag_names = tag_inventory(&tag_sequences);
        let n = sentences.len();
        Ok(TaggedCorpus {
            sentences,
            tag_sequences,
            tag_names,
            report: LoadReport {
                rows_read: n,
                rows_kept: n,
                rows_dropped: 0,
            },
        })
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

pub(crate) fn tag_inventory(tag_sequences: &[Vec<String>]) -> Vec<String> {
    let mut tags: Vec<String> = tag_sequences
        .iter()
        .flatten()
        .filter(|t| *t != "O")
        .cloned()
        .collect();
    tags.sort();
    tags.dedup();
    let mut out = vec!["O".to_owned()];
    out.extend(tags);
    out
}

pub(crate) fn display(path: &Path) -> String {
    path.display().to_string()
}

/// Collapse whitespace runs to single spaces and trim.
pub(crate) fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}
