use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::Tensor;

/// Word-vector lookup table. Row 0 is padding, row 1 is out-of-vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    weights: Tensor,
    trainable: bool,
}

/// Row-sparse embedding gradient keyed by token id.
pub type RowGradients = BTreeMap<usize, Vec<f64>>;

impl EmbeddingTable {
    pub fn new(weights: Tensor, trainable: bool) -> Result<Self> {
        if weights.shape().len() != 2 || weights.shape()[0] < 2 {
            return Err(Error::Config(format!(
                "embedding table needs shape [vocab>=2, dim], got {:?}",
                weights.shape()
            )));
        }
        let mut table = EmbeddingTable { weights, trainable };
        if !trainable {
            table.weights.row_mut(0).fill(0.0);
        }
        Ok(table)
    }

    pub fn random<R: Rng + ?Sized>(
        vocab_size: usize,
        dim: usize,
        scale: f64,
        trainable: bool,
        rng: &mut R,
    ) -> Result<Self> {
        let weights = Tensor::uniform(&[vocab_size.max(1), dim.max(1)], -scale, scale, rng);
        EmbeddingTable::new(weights, trainable)
    }

    pub fn vocab_size(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn dim(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn trainable(&self) -> bool {
        self.trainable
    }

    pub fn weights(&self) -> &Tensor {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut Tensor {
        &mut self.weights
    }

    /// Gather rows for `ids` into a `[len×dim]` tensor.
    pub fn embed(&self, ids: &[usize]) -> Result<Tensor> {
        if ids.is_empty() {
            return Err(Error::EmptyInput("embedding lookup ids"));
        }
        let dim = self.dim();
        let mut data = Vec::with_capacity(ids.len() * dim);
        for &id in ids {
            if id >= self.vocab_size() {
                return Err(Error::Index {
                    what: "embedding lookup",
                    index: id,
                    limit: self.vocab_size(),
                });
            }
            data.extend_from_slice(self.weights.row(id));
        }
        Tensor::new(vec![ids.len(), dim], data)
    }

    /// Scatter-add `d_out[len×dim]` into per-row gradients.
    pub fn backward(&self, ids: &[usize], d_out: &[f64], grads: &mut RowGradients) {
        let dim = self.dim();
        for (pos, &id) in ids.iter().enumerate() {
            let src = &d_out[pos * dim..(pos + 1) * dim];
            let row = grads.entry(id).or_insert_with(|| vec![0.0; dim]);
            for (g, &d) in row.iter_mut().zip(src) {
                *g += d;
            }
        }
    }
}

pub fn embed(ids: &[usize], table: &EmbeddingTable) -> Result<Tensor> {
    table.embed(ids)
}
