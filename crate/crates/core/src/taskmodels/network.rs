use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{Arch, Task, TaskConfig};
use crate::error::{Error, Result};
use crate::layers::{
    apply_channel_mask, directional_final_backward, spatial_dropout_mask, Bidirectional,
    CellParams, Dense, EmbeddingTable, RowGradients, SequenceTrace,
};
use crate::numkit::{binary_term, categorical_term, Activation, Tensor, LOG_CLIP};
use crate::textprep::PAD;

/// Uniform range of freshly initialized embedding rows.
pub const EMBEDDING_INIT_SCALE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "params")]
pub enum Encoder {
    /// Average of the token vectors.
    MeanPool,
    Recurrent(CellParams),
    Bidirectional(Bidirectional),
}

impl Encoder {
    fn output_width(&self, input_dim: usize) -> usize {
        match self {
            Encoder::MeanPool => input_dim,
            Encoder::Recurrent(c) => c.units,
            Encoder::Bidirectional(b) => b.output_width(),
        }
    }

    fn zeros_like(&self) -> Encoder {
        match self {
            Encoder::MeanPool => Encoder::MeanPool,
            Encoder::Recurrent(c) => Encoder::Recurrent(c.zeros_like()),
            Encoder::Bidirectional(b) => Encoder::Bidirectional(b.zeros_like()),
        }
    }

    fn tensors(&self) -> Vec<&Tensor> {
        match self {
            Encoder::MeanPool => Vec::new(),
            Encoder::Recurrent(c) => c.tensors(),
            Encoder::Bidirectional(b) => b.tensors(),
        }
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Encoder::MeanPool => Vec::new(),
            Encoder::Recurrent(c) => c.tensors_mut(),
            Encoder::Bidirectional(b) => b.tensors_mut(),
        }
    }

    fn names(&self) -> Vec<String> {
        match self {
            Encoder::MeanPool => Vec::new(),
            Encoder::Recurrent(c) => c
                .named_tensors()
                .into_iter()
                .map(|(n, _)| format!("rnn.{n}"))
                .collect(),
            Encoder::Bidirectional(b) => {
                let fwd = b
                    .forward
                    .named_tensors()
                    .into_iter()
                    .map(|(n, _)| format!("rnn.forward.{n}"));
                let bwd = b
                    .backward
                    .named_tensors()
                    .into_iter()
                    .map(|(n, _)| format!("rnn.backward.{n}"));
                fwd.chain(bwd).collect()
            }
        }
    }
}

/// What one example is trained against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    Class(usize),
    /// One tag id per token.
    Tags(Vec<usize>),
}

/// Embedding → encoder → optional relu layer → output layer. With
/// `sequence_output` the output layer is applied at every position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub embedding: EmbeddingTable,
    pub encoder: Encoder,
    pub hidden: Option<Dense>,
    pub output: Dense,
    pub spatial_dropout: f64,
    pub sequence_output: bool,
}

/// Parameter gradients with the embedding kept row-sparse.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub embedding: RowGradients,
    pub encoder: Encoder,
    pub hidden: Option<Dense>,
    pub output: Dense,
}

/// Per-example loss bookkeeping, summed over examples.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Tally {
    pub loss: f64,
    pub correct: usize,
    /// Examples for classification, tokens for tagging.
    pub count: usize,
}

impl Tally {
    pub fn add(&mut self, other: Tally) {
        self.loss += other.loss;
        self.correct += other.correct;
        self.count += other.count;
    }

    pub fn mean_loss(&self) -> f64 {
        self.loss / self.count.max(1) as f64
    }

    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.count.max(1) as f64
    }
}

enum EncoderTrace {
    Pool,
    Uni(SequenceTrace),
    Bi(SequenceTrace, SequenceTrace),
}

/// Forward activations for one example.
pub(crate) struct ForwardPass {
    ids: Vec<usize>,
    mask: Option<Vec<f64>>,
    trace: EncoderTrace,
    features: Vec<f64>,
    rows: usize,
    hidden_out: Option<Vec<f64>>,
    pub(crate) probs: Vec<f64>,
}

impl ForwardPass {
    pub(crate) fn rows(&self) -> usize {
        self.rows
    }
}

/// Build the task network described by `cfg` with a seeded initialization.
/// `embedding` replaces the random table (pretrained vectors).
pub fn build_model(
    cfg: &TaskConfig,
    vocab_size: usize,
    num_labels: usize,
    embedding: Option<EmbeddingTable>,
) -> Result<Network> {
    cfg.validate()?;
    let min_labels = if cfg.task == Task::Sentiment { 2 } else { 1 };
    if num_labels < min_labels || (cfg.task == Task::Sentiment && num_labels != 2) {
        return Err(Error::Config(format!(
            "{} needs a valid label set, got {num_labels} labels",
            cfg.task
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let embedding = match embedding {
        Some(table) => {
            if table.vocab_size() != vocab_size || table.dim() != cfg.embed_dim {
                return Err(Error::Config(format!(
                    "pretrained table is {}×{}, model expects {vocab_size}×{}",
                    table.vocab_size(),
                    table.dim(),
                    cfg.embed_dim
                )));
            }
            table
        }
        None => EmbeddingTable::random(
            vocab_size,
            cfg.embed_dim,
            EMBEDDING_INIT_SCALE,
            true,
            &mut rng,
        )?,
    };
    let d = cfg.embed_dim;
    let encoder = match (cfg.arch, cfg.arch.cell()) {
        (Arch::Snn, _) => Encoder::MeanPool,
        (arch, Some(kind)) if arch.is_bidirectional() => {
            let fwd = CellParams::init(kind, d, cfg.units, &mut rng);
            let bwd = CellParams::init(kind, d, cfg.units, &mut rng);
            Encoder::Bidirectional(Bidirectional::new(fwd, bwd)?)
        }
        (_, Some(kind)) => Encoder::Recurrent(CellParams::init(kind, d, cfg.units, &mut rng)),
        (arch, None) => return Err(Error::Internal(format!("no cell for {arch}"))),
    };
    let mut width = encoder.output_width(d);
    let hidden = cfg.hidden_units.map(|h| {
        let layer = Dense::init(width, h, Activation::Relu, &mut rng);
        width = h;
        layer
    });
    let output = match cfg.task {
        Task::Sentiment => Dense::init(width, 1, Activation::Sigmoid, &mut rng),
        _ => Dense::init(width, num_labels, Activation::Softmax, &mut rng),
    };
    Network::new(
        embedding,
        encoder,
        hidden,
        output,
        cfg.spatial_dropout,
        cfg.task.is_sequence_labeling(),
    )
}

impl Network {
    pub fn new(
        embedding: EmbeddingTable,
        encoder: Encoder,
        hidden: Option<Dense>,
        output: Dense,
        spatial_dropout: f64,
        sequence_output: bool,
    ) -> Result<Self> {
        let d = embedding.dim();
        match &encoder {
            Encoder::MeanPool if sequence_output => {
                return Err(Error::Config(
                    "mean pooling cannot feed a per-token output".into(),
                ));
            }
            Encoder::Recurrent(c) if c.input_dim != d => {
                return Err(Error::dim("encoder input", &[d], &[c.input_dim]));
            }
            Encoder::Bidirectional(b) if b.forward.input_dim != d => {
                return Err(Error::dim("encoder input", &[d], &[b.forward.input_dim]));
            }
            _ => {}
        }
        let mut width = encoder.output_width(d);
        if let Some(h) = &hidden {
            if h.inputs() != width {
                return Err(Error::dim("hidden layer", &[width], &[h.inputs()]));
            }
            width = h.outputs();
        }
        if output.inputs() != width {
            return Err(Error::dim("output layer", &[width], &[output.inputs()]));
        }
        match output.activation {
            Activation::Sigmoid if output.outputs() == 1 && !sequence_output => {}
            Activation::Softmax => {}
            other => {
                return Err(Error::Config(format!(
                    "output layer must be a single sigmoid unit or a softmax, got {other} with {} units",
                    output.outputs()
                )));
            }
        }
        if !(0.0..1.0).contains(&spatial_dropout) {
            return Err(Error::Config(format!(
                "spatial_dropout {spatial_dropout} outside [0, 1)"
            )));
        }
        Ok(Network {
            embedding,
            encoder,
            hidden,
            output,
            spatial_dropout,
            sequence_output,
        })
    }

    pub fn is_binary(&self) -> bool {
        self.output.activation == Activation::Sigmoid
    }

    /// Number of label classes (2 for the sigmoid head).
    pub fn num_labels(&self) -> usize {
        if self.is_binary() {
            2
        } else {
            self.output.outputs()
        }
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            embedding: RowGradients::new(),
            encoder: self.encoder.zeros_like(),
            hidden: self.hidden.as_ref().map(Dense::zeros_like),
            output: self.output.zeros_like(),
        }
    }

    /// Dense parameters in optimizer order (embedding excluded).
    pub fn dense_tensors(&self) -> Vec<&Tensor> {
        let mut v = self.encoder.tensors();
        if let Some(h) = &self.hidden {
            v.extend(h.tensors());
        }
        v.extend(self.output.tensors());
        v
    }

    pub fn dense_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = self.encoder.tensors_mut();
        if let Some(h) = &mut self.hidden {
            v.extend(h.tensors_mut());
        }
        v.extend(self.output.tensors_mut());
        v
    }

    /// Every weight tensor with a stable layer-qualified name.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut names = vec!["embedding".to_owned()];
        names.extend(self.encoder.names());
        if self.hidden.is_some() {
            names.extend(["hidden.kernel".to_owned(), "hidden.bias".to_owned()]);
        }
        names.extend(["output.kernel".to_owned(), "output.bias".to_owned()]);
        let mut tensors = vec![self.embedding.weights()];
        tensors.extend(self.dense_tensors());
        names.into_iter().zip(tensors).collect()
    }

    pub fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let names: Vec<String> = self.named_tensors().into_iter().map(|(n, _)| n).collect();
        let mut tensors = Vec::with_capacity(names.len());
        let Network {
            embedding,
            encoder,
            hidden,
            output,
            ..
        } = self;
        tensors.push(embedding.weights_mut());
        tensors.extend(encoder.tensors_mut());
        if let Some(h) = hidden {
            tensors.extend(h.tensors_mut());
        }
        tensors.extend(output.tensors_mut());
        names.into_iter().zip(tensors).collect()
    }

    /// Round every weight through `f32`, the persisted precision.
    pub fn to_f32_precision(&self) -> Network {
        let mut out = self.clone();
        for (_, t) in out.named_tensors_mut() {
            *t = t.to_f32_precision();
        }
        out
    }

    /// Run one example. `ids` holds real (unpadded) token ids; an empty list
    /// is fed as a single padding token. `dropout` supplies the channel mask
    /// generator during training.
    pub(crate) fn forward(
        &self,
        ids: &[usize],
        dropout: Option<&mut ChaCha8Rng>,
    ) -> Result<ForwardPass> {
        let ids: Vec<usize> = if ids.is_empty() {
            vec![PAD]
        } else {
            ids.to_vec()
        };
        let len = ids.len();
        let d = self.embedding.dim();
        let mut x = self.embedding.embed(&ids)?.into_data();
        let mask = match dropout {
            Some(rng) if self.spatial_dropout > 0.0 => {
                let m = spatial_dropout_mask(d, self.spatial_dropout, rng)?;
                apply_channel_mask(&mut x, &m);
                Some(m)
            }
            _ => None,
        };

        let (trace, features, rows) = match &self.encoder {
            Encoder::MeanPool => {
                let mut mean = vec![0.0; d];
                for row in x.chunks(d) {
                    for (m, v) in mean.iter_mut().zip(row) {
                        *m += v;
                    }
                }
                mean.iter_mut().for_each(|m| *m /= len as f64);
                (EncoderTrace::Pool, mean, 1)
            }
            Encoder::Recurrent(cell) => {
                let t = cell.trace_raw(&x, len, false);
                let (feat, rows) = if self.sequence_output {
                    (t.outputs_raw(), len)
                } else {
                    (t.final_state().to_vec(), 1)
                };
                (EncoderTrace::Uni(t), feat, rows)
            }
            Encoder::Bidirectional(bi) => {
                let (f, b) = bi.trace_raw(&x, len);
                let (feat, rows) = if self.sequence_output {
                    (Bidirectional::merge_sequences(&f, &b), len)
                } else {
                    (Bidirectional::merge_final(&f, &b), 1)
                };
                (EncoderTrace::Bi(f, b), feat, rows)
            }
        };

        let hidden_out = self.hidden.as_ref().map(|h| h.forward_raw(&features, rows));
        let probs = self
            .output
            .forward_raw(hidden_out.as_deref().unwrap_or(&features), rows);
        Ok(ForwardPass {
            ids,
            mask,
            trace,
            features,
            rows,
            hidden_out,
            probs,
        })
    }

    /// Loss summed over the example's scored rows, and the gradient of that
    /// sum wrt the output pre-activation.
    pub(crate) fn score(&self, pass: &ForwardPass, target: &Target) -> Result<(Tally, Vec<f64>)> {
        let c = self.output.outputs();
        let mut dz = vec![0.0; pass.probs.len()];
        let mut tally = Tally::default();
        match target {
            Target::Class(label) if !self.sequence_output => {
                if *label >= self.num_labels() {
                    return Err(Error::Index {
                        what: "target label",
                        index: *label,
                        limit: self.num_labels(),
                    });
                }
                tally.count = 1;
                if self.is_binary() {
                    let p = pass.probs[0];
                    let y = *label as f64;
                    tally.loss = binary_term(p, y);
                    tally.correct = usize::from(usize::from(p >= 0.5) == *label);
                    if p > LOG_CLIP && p < 1.0 - LOG_CLIP {
                        dz[0] = p - y;
                    }
                } else {
                    score_softmax_row(&pass.probs, *label, &mut dz, &mut tally);
                }
            }
            Target::Tags(tags) if self.sequence_output => {
                if tags.len() != pass.rows {
                    return Err(Error::dim("tag targets", &[pass.rows], &[tags.len()]));
                }
                for (r, &tag) in tags.iter().enumerate() {
                    if tag >= c {
                        return Err(Error::Index {
                            what: "target tag",
                            index: tag,
                            limit: c,
                        });
                    }
                    let span = r * c..(r + 1) * c;
                    score_softmax_row(&pass.probs[span.clone()], tag, &mut dz[span], &mut tally);
                    tally.count += 1;
                }
            }
            _ => {
                return Err(Error::Config(
                    "target kind does not match the network head (class vs per-token tags)".into(),
                ))
            }
        }
        Ok((tally, dz))
    }

    /// Backpropagate `dz` (gradient wrt the output pre-activation) and
    /// accumulate into `grads`.
    pub(crate) fn backward(&self, pass: &ForwardPass, dz: &[f64], grads: &mut Gradients) {
        let rows = pass.rows;
        let out_in = pass.hidden_out.as_deref().unwrap_or(&pass.features);
        let d_out_in = self
            .output
            .backward_pre_activation(out_in, dz, rows, &mut grads.output);
        let d_features = match (&self.hidden, &pass.hidden_out, &mut grads.hidden) {
            (Some(h), Some(h_out), Some(gh)) => {
                h.backward_raw(&pass.features, h_out, &d_out_in, rows, gh)
            }
            _ => d_out_in,
        };

        let len = pass.ids.len();
        let d = self.embedding.dim();
        let mut dx = match (&self.encoder, &pass.trace, &mut grads.encoder) {
            (Encoder::MeanPool, EncoderTrace::Pool, _) => {
                let scale = 1.0 / len as f64;
                let row: Vec<f64> = d_features.iter().map(|g| g * scale).collect();
                row.repeat(len)
            }
            (Encoder::Recurrent(cell), EncoderTrace::Uni(t), Encoder::Recurrent(g)) => {
                if self.sequence_output {
                    cell.backward(t, &d_features, g)
                } else {
                    directional_final_backward(cell, t, &d_features, g)
                }
            }
            (Encoder::Bidirectional(bi), EncoderTrace::Bi(f, b), Encoder::Bidirectional(g)) => {
                if self.sequence_output {
                    bi.backward_sequences(f, b, &d_features, g)
                } else {
                    bi.backward_final(f, b, &d_features, g)
                }
            }
            _ => unreachable!("gradient buffers are built from the same network"),
        };
        debug_assert_eq!(dx.len(), len * d);
        if let Some(mask) = &pass.mask {
            apply_channel_mask(&mut dx, mask);
        }
        if self.embedding.trainable() {
            self.embedding
                .backward(&pass.ids, &dx, &mut grads.embedding);
        }
    }

    /// Class probabilities (or per-token rows for tagging) without dropout.
    pub fn predict_ids(&self, ids: &[usize]) -> Result<Tensor> {
        let pass = self.forward(ids, None)?;
        let cols = self.output.outputs();
        Tensor::new(vec![pass.rows, cols], pass.probs)
    }

    /// Summed loss and gradients for a batch, in example order.
    pub fn batch_gradients(&self, batch: &[(Vec<usize>, Target)]) -> Result<(Tally, Gradients)> {
        let mut grads = self.zero_gradients();
        let mut tally = Tally::default();
        for (ids, target) in batch {
            let pass = self.forward(ids, None)?;
            let (t, dz) = self.score(&pass, target)?;
            self.backward(&pass, &dz, &mut grads);
            tally.add(t);
        }
        Ok((tally, grads))
    }

    pub(crate) fn dropout_rng(seed: u64, epoch: usize, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(((epoch as u64) << 40) ^ index as u64);
        // burn one draw so stream 0 differs from a plain seeded generator
        let _: u64 = rng.random();
        rng
    }
}

fn score_softmax_row(probs: &[f64], label: usize, dz: &mut [f64], tally: &mut Tally) {
    tally.loss += categorical_term(probs, label);
    tally.correct += usize::from(argmax(probs) == label);
    let p = probs[label];
    if p > LOG_CLIP && p < 1.0 - LOG_CLIP {
        for (k, (g, &q)) in dz.iter_mut().zip(probs).enumerate() {
            *g = q - if k == label { 1.0 } else { 0.0 };
        }
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl Gradients {
    /// Add `other` into `self`. Row gradients merge by token id.
    pub fn accumulate(&mut self, other: &Gradients) {
        for (id, row) in &other.embedding {
            match self.embedding.get_mut(id) {
                Some(acc) => acc.iter_mut().zip(row).for_each(|(a, b)| *a += b),
                None => {
                    self.embedding.insert(*id, row.clone());
                }
            }
        }
        for (a, b) in self
            .dense_tensors_mut()
            .into_iter()
            .zip(other.dense_tensors())
        {
            a.data_mut()
                .iter_mut()
                .zip(b.data())
                .for_each(|(x, y)| *x += y);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for row in self.embedding.values_mut() {
            row.iter_mut().for_each(|v| *v *= s);
        }
        for t in self.dense_tensors_mut() {
            t.data_mut().iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn dense_tensors(&self) -> Vec<&Tensor> {
        let mut v = self.encoder.tensors();
        if let Some(h) = &self.hidden {
            v.extend(h.tensors());
        }
        v.extend(self.output.tensors());
        v
    }

    fn dense_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = self.encoder.tensors_mut();
        if let Some(h) = &mut self.hidden {
            v.extend(h.tensors_mut());
        }
        v.extend(self.output.tensors_mut());
        v
    }

    /// Scatter the sparse embedding rows into a dense `[vocab×dim]` buffer.
    pub fn embedding_dense(&self, vocab: usize, dim: usize) -> Tensor {
        let mut t = Tensor::zeros(&[vocab, dim]);
        for (&id, row) in &self.embedding {
            t.row_mut(id).copy_from_slice(row);
        }
        t
    }
}
