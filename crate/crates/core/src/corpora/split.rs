use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ClassificationCorpus, LoadReport, TaggedCorpus};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub shuffled: bool,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train fraction {train_fraction} outside (0, 1)"
            )));
        }
        Ok(SplitSpec {
            train_fraction,
            seed,
            shuffled: true,
        })
    }
}

/// Number of training items for `n` items: `floor(n·fraction)`, tolerant of
/// representation error such as `10 × 0.9`.
fn train_count(n: usize, fraction: f64) -> usize {
    let exact = n as f64 * fraction;
    let nearest = exact.round();
    if (exact - nearest).abs() < 1e-9 {
        nearest as usize
    } else {
        exact.floor() as usize
    }
}

/// Seeded partition of `0..n` into (train, held-out) index lists.
pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if n == 0 {
        return Err(Error::EmptyInput("split corpus"));
    }
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction {} outside (0, 1)",
            spec.train_fraction
        )));
    }
    let k = train_count(n, spec.train_fraction);
    if k == 0 || k == n {
        return Err(Error::Config(format!(
            "fraction {} of {n} items leaves one side of the split empty",
            spec.train_fraction
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    if spec.shuffled {
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    }
    let held = idx.split_off(k);
    Ok((idx, held))
}

pub trait Splittable: Sized {
    fn item_count(&self) -> usize;
    fn subset(&self, indices: &[usize]) -> Self;
}

pub fn split<C: Splittable>(corpus: &C, spec: &SplitSpec) -> Result<(C, C)> {
    let (train, held) = split_indices(corpus.item_count(), spec)?;
    Ok((corpus.subset(&train), corpus.subset(&held)))
}

fn subset_report(n: usize) -> LoadReport {
    LoadReport {
        rows_read: n,
        rows_kept: n,
        rows_dropped: 0,
    }
}

impl Splittable for ClassificationCorpus {
    fn item_count(&self) -> usize {
        self.len()
    }

    fn subset(&self, indices: &[usize]) -> Self {
        ClassificationCorpus {
            texts: indices.iter().map(|&i| self.texts[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            label_names: self.label_names.clone(),
            source: self.source,
            report: subset_report(indices.len()),
        }
    }
}

impl Splittable for TaggedCorpus {
    fn item_count(&self) -> usize {
        self.len()
    }

    fn subset(&self, indices: &[usize]) -> Self {
        TaggedCorpus {
            sentences: indices.iter().map(|&i| self.sentences[i].clone()).collect(),
            tag_sequences: indices
                .iter()
                .map(|&i| self.tag_sequences[i].clone())
                .collect(),
            tag_names: self.tag_names.clone(),
            report: subset_report(indices.len()),
        }
    }
}
