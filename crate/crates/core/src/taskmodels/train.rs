use std::fmt::Write as _;
use std::fs;
use std::ops::ControlFlow;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::TaskConfig;
use super::data::Example;
use super::network::{argmax, Gradients, Network, Tally, Target};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::numkit::{AdamState, Tensor};

/// Examples per work unit. Gradients are summed within a chunk and chunks
/// are reduced in order, so results do not depend on the thread count.
pub const CHUNK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub records: Vec<EpochRecord>,
    /// 1-based epoch with the minimum validation loss (earliest on ties).
    pub best_epoch: usize,
}

impl TrainingHistory {
    pub const HEADER: &'static str = "epoch\ttrain_loss\ttrain_acc\tval_loss\tval_acc";

    pub fn best(&self) -> &EpochRecord {
        &self.records[self.best_epoch - 1]
    }

    /// One tab-separated line per epoch under a header line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(Self::HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
                r.epoch, r.train_loss, r.train_accuracy, r.val_loss, r.val_accuracy
            );
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Weights after the last epoch.
    pub last: Network,
    /// Weights at the epoch with minimum validation loss.
    pub best: Network,
    pub history: TrainingHistory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    /// Scored units: examples, or tokens for tagging.
    pub count: usize,
}

/// Mini-batch Adam over seeded shuffles with per-epoch validation.
pub fn train(
    network: Network,
    train_set: &[Example],
    validation: &[Example],
    cfg: &TaskConfig,
    exec: Execution,
) -> Result<TrainOutcome> {
    train_with_progress(network, train_set, validation, cfg, exec, |_| {})
}

pub fn train_with_progress(
    network: Network,
    train_set: &[Example],
    validation: &[Example],
    cfg: &TaskConfig,
    exec: Execution,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    train_with_control(network, train_set, validation, cfg, exec, |r| {
        on_epoch(r);
        ControlFlow::Continue(())
    })
}

/// Like [`train_with_progress`], but `on_epoch` may end training early.
/// The history then holds only the epochs that ran.
pub fn train_with_control(
    mut network: Network,
    train_set: &[Example],
    validation: &[Example],
    cfg: &TaskConfig,
    exec: Execution,
    mut on_epoch: impl FnMut(&EpochRecord) -> ControlFlow<()>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() || validation.is_empty() {
        return Err(Error::EmptyInput("training or validation set"));
    }
    if cfg.batch_size > train_set.len() {
        return Err(Error::Config(format!(
            "batch size {} exceeds the {} training examples",
            cfg.batch_size,
            train_set.len()
        )));
    }
    let mut adam = AdamState::with_learning_rate(cfg.learning_rate)?;
    let mut embed_grad = network
        .embedding
        .trainable()
        .then(|| Tensor::zeros_like(network.embedding.weights()));
    let mut records = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, Network)> = None;

    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(epoch as u64 + 1);
        order.shuffle(&mut rng);

        let mut epoch_tally = Tally::default();
        for batch in order.chunks(cfg.batch_size) {
            let (tally, mut grads) =
                batch_gradients(&network, train_set, batch, cfg.seed, epoch, exec)?;
            if !tally.loss.is_finite() {
                return Err(Error::Divergence {
                    epoch: epoch + 1,
                    loss: tally.loss,
                });
            }
            grads.scale(1.0 / tally.count.max(1) as f64);
            apply_update(&mut network, &grads, &mut adam, embed_grad.as_mut())?;
            epoch_tally.add(tally);
        }

        let val = evaluate_tally(&network, validation, exec)?;
        let record = EpochRecord {
            epoch: epoch + 1,
            train_loss: epoch_tally.mean_loss(),
            train_accuracy: epoch_tally.accuracy(),
            val_loss: val.mean_loss(),
            val_accuracy: val.accuracy(),
        };
        if !record.val_loss.is_finite() {
            return Err(Error::Divergence {
                epoch: epoch + 1,
                loss: record.val_loss,
            });
        }
        if best
            .as_ref()
            .is_none_or(|(loss, _, _)| record.val_loss < *loss)
        {
            best = Some((record.val_loss, epoch + 1, network.clone()));
        }
        let flow = on_epoch(&record);
        records.push(record);
        if flow.is_break() {
            break;
        }
    }

    let (_, best_epoch, best_net) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        last: network,
        best: best_net,
        history: TrainingHistory {
            records,
            best_epoch,
        },
    })
}

/// Summed loss and gradients over `batch` (indices into `examples`), with
/// training-mode dropout seeded per example.
pub fn batch_gradients(
    network: &Network,
    examples: &[Example],
    batch: &[usize],
    seed: u64,
    epoch: usize,
    exec: Execution,
) -> Result<(Tally, Gradients)> {
    let chunks: Vec<&[usize]> = batch.chunks(CHUNK).collect();
    let parts = exec.map(&chunks, |chunk| -> Result<(Tally, Gradients)> {
        let mut grads = network.zero_gradients();
        let mut tally = Tally::default();
        for &i in *chunk {
            let ex = &examples[i];
            let mut rng = Network::dropout_rng(seed, epoch, i);
            let pass = network.forward(&ex.ids, Some(&mut rng))?;
            let (t, dz) = network.score(&pass, &ex.target)?;
            network.backward(&pass, &dz, &mut grads);
            tally.add(t);
        }
        Ok((tally, grads))
    });
    let mut parts = parts.into_iter();
    let (mut tally, mut grads) = parts.next().ok_or(Error::EmptyInput("batch"))??;
    for part in parts {
        let (t, g) = part?;
        tally.add(t);
        grads.accumulate(&g);
    }
    Ok((tally, grads))
}

fn apply_update(
    network: &mut Network,
    grads: &Gradients,
    adam: &mut AdamState,
    embed_grad: Option<&mut Tensor>,
) -> Result<()> {
    let trainable = network.embedding.trainable();
    let mut grad_refs: Vec<&Tensor> = Vec::new();
    let embed_grad = match embed_grad {
        Some(buf) if trainable => {
            for (&id, row) in &grads.embedding {
                buf.row_mut(id).copy_from_slice(row);
            }
            Some(buf)
        }
        _ => None,
    };
    if let Some(buf) = &embed_grad {
        grad_refs.push(buf);
    }
    grad_refs.extend(grads.dense_tensors());
    let mut params: Vec<&mut Tensor> = network
        .named_tensors_mut()
        .into_iter()
        .filter(|(name, _)| trainable || name != "embedding")
        .map(|(_, t)| t)
        .collect();
    adam.update(&mut params, &grad_refs)?;
    if let Some(buf) = embed_grad {
        for &id in grads.embedding.keys() {
            buf.row_mut(id).fill(0.0);
        }
    }
    Ok(())
}

fn predictions(network: &Network, probs: &[f64], rows: usize) -> Vec<usize> {
    if network.is_binary() {
        return vec![usize::from(probs[0] >= 0.5)];
    }
    let c = probs.len() / rows;
    probs.chunks(c).map(argmax).collect()
}

fn evaluate_tally(network: &Network, examples: &[Example], exec: Execution) -> Result<Tally> {
    Ok(evaluate_parts(network, examples, exec)?.0)
}

/// Mean loss, accuracy and confusion matrix with dropout off. Tagging
/// accuracy is per token.
pub fn evaluate(network: &Network, examples: &[Example], exec: Execution) -> Result<Evaluation> {
    let (tally, confusion) = evaluate_parts(network, examples, exec)?;
    Ok(Evaluation {
        loss: tally.mean_loss(),
        accuracy: tally.accuracy(),
        confusion,
        count: tally.count,
    })
}

fn evaluate_parts(
    network: &Network,
    examples: &[Example],
    exec: Execution,
) -> Result<(Tally, Vec<Vec<usize>>)> {
    if examples.is_empty() {
        return Err(Error::EmptyInput("evaluation set"));
    }
    let labels = network.num_labels();
    let chunks: Vec<&[Example]> = examples.chunks(CHUNK).collect();
    let parts = exec.map(&chunks, |chunk| -> Result<(Tally, Vec<Vec<usize>>)> {
        let mut tally = Tally::default();
        let mut confusion = vec![vec![0usize; labels]; labels];
        for ex in *chunk {
            let pass = network.forward(&ex.ids, None)?;
            let (t, _) = network.score(&pass, &ex.target)?;
            tally.add(t);
            let predicted = predictions(network, &pass.probs, pass.rows());
            let truth: &[usize] = match &ex.target {
                Target::Class(c) => std::slice::from_ref(c),
                Target::Tags(tags) => tags,
            };
            for (&t, &p) in truth.iter().zip(&predicted) {
                confusion[t][p] += 1;
            }
        }
        Ok((tally, confusion))
    });
    let mut tally = Tally::default();
    let mut confusion = vec![vec![0usize; labels]; labels];
    for part in parts {
        let (t, c) = part?;
        tally.add(t);
        for (row, other) in confusion.iter_mut().zip(&c) {
            row.iter_mut().zip(other).for_each(|(a, b)| *a += b);
        }
    }
    Ok((tally, confusion))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taskmodels::config::{Arch, Task};
    use crate::taskmodels::network::build_model;

    fn cfg(task: Task, arch: Arch) -> TaskConfig {
        TaskConfig {
            embed_dim: 8,
            units: 6,
            hidden_units: TaskConfig::with_arch(task, arch).hidden_units.map(|_| 8),
            batch_size: 4,
            epochs: 3,
            max_len: Some(8),
            ..TaskConfig::with_arch(task, arch)
        }
    }

    fn binary_examples() -> Vec<Example> {
        (0..12)
            .map(|i| Example {
                ids: vec![2 + i % 2, 4, 5],
                target: Target::Class(i % 2),
            })
            .collect()
    }

    #[test]
    fn history_shape_and_best_epoch() {
        let c = cfg(Task::Sentiment, Arch::Gru);
        let net = build_model(&c, 8, 2, None).unwrap();
        let ex = binary_examples();
        let out = train(net, &ex, &ex, &c, Execution::Sequential).unwrap();
        assert_eq!(out.history.records.len(), 3);
        let min = out
            .history
            .records
            .iter()
            .map(|r| r.val_loss)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(out.history.best().val_loss, min);
        let tsv = out.history.to_tsv();
        assert_eq!(tsv.lines().count(), 4);
        assert!(tsv.starts_with("epoch\t"));
    }

    #[test]
    fn oversized_batch_rejected() {
        let mut c = cfg(Task::Sentiment, Arch::Lstm);
        c.batch_size = 13;
        let net = build_model(&c, 8, 2, None).unwrap();
        let ex = binary_examples();
        assert!(matches!(
            train(net, &ex, &ex, &c, Execution::Sequential),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn parallel_matches_sequential_bitwise() {
        let c = TaskConfig {
            spatial_dropout: 0.2,
            ..cfg(Task::Emotion, Arch::Bilstm)
        };
        let ex: Vec<Example> = (0..20)
            .map(|i| Example {
                ids: vec![2 + i % 3, 5, 6, 7 - i % 2],
                target: Target::Class(i % 3),
            })
            .collect();
        let net = build_model(&c, 8, 3, None).unwrap();
        let a = train(net.clone(), &ex, &ex, &c, Execution::Sequential).unwrap();
        let b = train(net, &ex, &ex, &c, Execution::Parallel).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.last, b.last);
    }

    #[test]
    fn confusion_counts_every_unit() {
        let c = cfg(Task::Ner, Arch::Bigru);
        let net = build_model(&c, 8, 3, None).unwrap();
        let ex = vec![
            Example {
                ids: vec![2, 3, 4],
                target: Target::Tags(vec![0, 1, 2]),
            },
            Example {
                ids: vec![5, 6],
                target: Target::Tags(vec![0, 0]),
            },
        ];
        let e = evaluate(&net, &ex, Execution::Parallel).unwrap();
        assert_eq!(e.count, 5);
        assert_eq!(e.confusion.iter().flatten().sum::<usize>(), 5);
        let diag: usize = (0..3).map(|i| e.confusion[i][i]).sum();
        assert!((e.accuracy - diag as f64 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn constant_model_on_balanced_set_scores_half() {
        let c = cfg(Task::Sentiment, Arch::Snn);
        let mut net = build_model(&c, 8, 2, None).unwrap();
        // zero output kernel: every prediction is sigmoid(bias)
        net.output.kernel.fill(0.0);
        net.output.bias.fill(0.3);
        let e = evaluate(&net, &binary_examples(), Execution::Sequential).unwrap();
        assert_eq!(e.accuracy, 0.5);
        assert_eq!(e.confusion, vec![vec![0, 6], vec![0, 6]]);
    }

    #[test]
    fn divergence_is_reported() {
        let c = cfg(Task::Sentiment, Arch::Snn);
        let mut net = build_model(&c, 8, 2, None).unwrap();
        net.output.bias.fill(f64::NAN);
        let ex = binary_examples();
        match train(net, &ex, &ex, &c, Execution::Sequential) {
            Err(Error::Divergence { epoch, .. }) => assert_eq!(epoch, 1),
            other => panic!("{other:?}"),
        }
    }
}
