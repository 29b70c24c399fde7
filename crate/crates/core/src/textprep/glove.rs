use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Vocabulary, PAD};
use crate::error::{Error, Result};
use crate::layers::EmbeddingTable;
use crate::numkit::Tensor;

/// Range of the uniform init for rows missing from the vector file.
pub const FALLBACK_SCALE: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct GloveLoad {
    /// Frozen table; row 0 zero.
    pub table: EmbeddingTable,
    /// Fraction of fitted vocabulary words found in the file.
    pub coverage: f64,
    pub matched: usize,
}

/// Read a whitespace-separated `word v1 … v_dim` file and copy the vectors
/// of vocabulary words into a `[table_size×dim]` table. Other rows are drawn
/// from `uniform(-0.05, 0.05)` with `seed`; the padding row is zero.
pub fn load_glove(
    path: impl AsRef<Path>,
    vocab: &Vocabulary,
    dim: usize,
    seed: u64,
) -> Result<GloveLoad> {
    let path = path.as_ref();
    if dim == 0 {
        return Err(Error::Config("embedding dim must be positive".into()));
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = vocab.table_size();
    let mut weights = Tensor::zeros(&[rows, dim]);
    for r in 0..rows {
        if r == PAD {
            continue;
        }
        for v in weights.row_mut(r) {
            *v = rng.random_range(-FALLBACK_SCALE..FALLBACK_SCALE);
        }
    }

    let mut found = vec![false; rows];
    let mut buf = Vec::new();
    let mut line_no = 0usize;
    let display = path.display().to_string();
    loop {
        buf.clear();
        let n = reader
            .read_until(b'\n', &mut buf)
            .map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        line_no += 1;
        let line = String::from_utf8_lossy(&buf);
        let line = line.trim_end_matches(['\n', '\r']);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(' ').filter(|f| !f.is_empty()).collect();
        if fields.len() < dim + 1 {
            return Err(Error::Parse {
                path: display,
                line: line_no,
                message: format!(
                    "expected a word and {dim} values, found {} fields",
                    fields.len()
                ),
            });
        }
        // tokens containing spaces occur in some releases; the numbers are always the tail
        let split = fields.len() - dim;
        let word = fields[..split].join(" ");
        let mut values = Vec::with_capacity(dim);
        for raw in &fields[split..] {
            let v: f64 = raw.parse().map_err(|_| Error::Parse {
                path: display.clone(),
                line: line_no,
                message: format!("unparsable number `{raw}`"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: display.clone(),
                    line: line_no,
                    message: format!("non-finite value `{raw}`"),
                });
            }
            values.push(v);
        }
        if let Some(id) = vocab.get(&word) {
            if !found[id] {
                weights.row_mut(id).copy_from_slice(&values);
                found[id] = true;
            }
        }
    }

    let matched = found.iter().filter(|&&f| f).count();
    let coverage = if vocab.is_empty() {
        0.0
    } else {
        matched as f64 / vocab.len() as f64
    };
    Ok(GloveLoad {
        table: EmbeddingTable::new(weights, false)?,
        coverage,
        matched,
    })
}
