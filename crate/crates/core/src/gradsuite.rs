//! Finite-difference checks for every differentiable piece of the kernel.
//!
//! Each check draws seeded random instances, reduces the layer output to a
//! scalar with a random projection `sum(w ⊙ y)` and compares the hand-written
//! backward pass against [`grad_check`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::layers::{
    directional_final_backward, Bidirectional, CellKind, CellParams, Dense, EmbeddingTable,
    RowGradients,
};
use crate::numkit::{grad_check, Activation, Loss, Tensor};

pub const STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    Dense,
    EmbeddingGather,
    LstmStep,
    GruStep,
    LstmSequence,
    GruSequence,
    BidirectionalLstm,
    BidirectionalGru,
    TimeDistributedDense,
    BinaryCrossEntropy,
    CategoricalCrossEntropy,
}

impl Check {
    pub const ALL: [Check; 11] = [
        Check::Dense,
        Check::EmbeddingGather,
        Check::LstmStep,
        Check::GruStep,
        Check::LstmSequence,
        Check::GruSequence,
        Check::BidirectionalLstm,
        Check::BidirectionalGru,
        Check::TimeDistributedDense,
        Check::BinaryCrossEntropy,
        Check::CategoricalCrossEntropy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Dense => "dense",
            Check::EmbeddingGather => "embedding_gather",
            Check::LstmStep => "lstm_step",
            Check::GruStep => "gru_step",
            Check::LstmSequence => "lstm_sequence",
            Check::GruSequence => "gru_sequence",
            Check::BidirectionalLstm => "bidirectional_lstm",
            Check::BidirectionalGru => "bidirectional_gru",
            Check::TimeDistributedDense => "time_distributed_dense",
            Check::BinaryCrossEntropy => "binary_crossentropy",
            Check::CategoricalCrossEntropy => "categorical_crossentropy",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub check: Check,
    pub instances: usize,
    /// Worst relative error over all instances and coordinates.
    pub worst: f64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.worst < TOLERANCE
    }
}

/// Run every check on `instances` random instances each.
pub fn run_all(instances: usize, seed: u64) -> Result<Vec<CheckReport>> {
    Check::ALL
        .iter()
        .map(|&c| run(c, instances, seed))
        .collect()
}

pub fn run(check: Check, instances: usize, seed: u64) -> Result<CheckReport> {
    let mut worst = 0.0f64;
    for i in 0..instances {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(((check as u64) << 32) | i as u64);
        worst = worst.max(instance(check, i, &mut rng)?);
    }
    Ok(CheckReport {
        check,
        instances,
        worst,
    })
}

/// Random sign, magnitude in `[scale/4, scale]`. Keeping values away from
/// zero keeps gradient coordinates away from zero too; a coordinate below
/// about 1e-7 measures finite-difference roundoff, not the backward pass.
fn uniform(rng: &mut ChaCha8Rng, shape: &[usize], scale: f64) -> Tensor {
    let mut t = Tensor::uniform(shape, 0.25 * scale, scale, rng);
    for v in t.data_mut() {
        if rng.random_bool(0.5) {
            *v = -*v;
        }
    }
    t
}

fn dot(w: &[f64], y: &[f64]) -> f64 {
    w.iter().zip(y).map(|(a, b)| a * b).sum()
}

const ACTIVATIONS: [Activation; 5] = [
    Activation::Identity,
    Activation::Sigmoid,
    Activation::Tanh,
    Activation::Relu,
    Activation::Softmax,
];

fn instance(check: Check, i: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
    match check {
        Check::Dense => {
            let rows = rng.random_range(1..4);
            dense_check(rng, rows, ACTIVATIONS[i % ACTIVATIONS.len()])
        }
        // Same kernel applied per timestep: the rows are the sequence.
        Check::TimeDistributedDense => {
            let len = rng.random_range(3..7);
            let act = if i.is_multiple_of(2) {
                Activation::Softmax
            } else {
                Activation::Relu
            };
            dense_check(rng, len, act)
        }
        Check::EmbeddingGather => embedding_check(rng),
        Check::LstmStep => step_check(rng, CellKind::Lstm),
        Check::GruStep => step_check(rng, CellKind::Gru),
        Check::LstmSequence => sequence_check(rng, CellKind::Lstm, i.is_multiple_of(2), i % 4 >= 2),
        Check::GruSequence => sequence_check(rng, CellKind::Gru, i.is_multiple_of(2), i % 4 >= 2),
        Check::BidirectionalLstm => bidirectional_check(rng, CellKind::Lstm, i.is_multiple_of(2)),
        Check::BidirectionalGru => bidirectional_check(rng, CellKind::Gru, i.is_multiple_of(2)),
        Check::BinaryCrossEntropy => loss_check(rng, Loss::BinaryCrossEntropy),
        Check::CategoricalCrossEntropy => loss_check(rng, Loss::CategoricalCrossEntropy),
    }
}

fn dense_check(rng: &mut ChaCha8Rng, rows: usize, act: Activation) -> Result<f64> {
    let (k, n) = (rng.random_range(2..6), rng.random_range(2..5));
    let point = [
        uniform(rng, &[rows, k], 1.0),
        uniform(rng, &[k, n], 0.8),
        uniform(rng, &[n], 0.3),
    ];
    let w = uniform(rng, &[rows * n], 1.0);
    grad_check(
        |p| {
            let layer = Dense::new(p[1].clone(), p[2].clone(), act)?;
            let y = layer.forward_raw(p[0].data(), rows);
            let mut grads = layer.zeros_like();
            let dx = layer.backward_raw(p[0].data(), &y, w.data(), rows, &mut grads);
            Ok((
                dot(w.data(), &y),
                vec![Tensor::new(vec![rows, k], dx)?, grads.kernel, grads.bias],
            ))
        },
        &point,
        STEP,
    )
}

fn embedding_check(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (vocab, dim) = (rng.random_range(3..8), rng.random_range(2..5));
    let len = rng.random_range(2..8);
    // Repeats are likely, so scatter-add is exercised.
    let ids: Vec<usize> = (0..len).map(|_| rng.random_range(0..vocab)).collect();
    let point = [uniform(rng, &[vocab, dim], 0.5)];
    let w = uniform(rng, &[len * dim], 1.0);
    grad_check(
        |p| {
            let table = EmbeddingTable::new(p[0].clone(), true)?;
            let y = table.embed(&ids)?;
            let mut rows = RowGradients::new();
            table.backward(&ids, w.data(), &mut rows);
            let mut g = Tensor::zeros(&[vocab, dim]);
            for (id, row) in rows {
                g.row_mut(id).copy_from_slice(&row);
            }
            Ok((dot(w.data(), y.data()), vec![g]))
        },
        &point,
        STEP,
    )
}

fn random_cell(rng: &mut ChaCha8Rng, kind: CellKind, d: usize, u: usize) -> Vec<Tensor> {
    let mut cell = CellParams::zeros(kind, d, u);
    for t in cell.tensors_mut() {
        *t = uniform(rng, t.shape(), 0.6);
    }
    cell.tensors().into_iter().cloned().collect()
}

fn cell_from(kind: CellKind, d: usize, u: usize, tensors: &[Tensor]) -> CellParams {
    let mut cell = CellParams::zeros(kind, d, u);
    for (slot, t) in cell.tensors_mut().into_iter().zip(tensors) {
        *slot = t.clone();
    }
    cell
}

/// One step from a non-zero state: the first input only sets up the state
/// and the objective reads the second step's output.
fn step_check(rng: &mut ChaCha8Rng, kind: CellKind) -> Result<f64> {
    let (d, u) = (rng.random_range(2..5), rng.random_range(2..5));
    let mut point = vec![uniform(rng, &[2, d], 1.0)];
    point.extend(random_cell(rng, kind, d, u));
    let w = uniform(rng, &[u], 1.0);
    grad_check(
        |p| {
            let cell = cell_from(kind, d, u, &p[1..]);
            let trace = cell.trace(&p[0], false)?;
            let mut grads = cell.zeros_like();
            let dx = directional_final_backward(&cell, &trace, w.data(), &mut grads);
            let mut g = vec![Tensor::new(vec![2, d], dx)?];
            g.extend(grads.tensors().into_iter().cloned());
            Ok((dot(w.data(), trace.final_state()), g))
        },
        &point,
        STEP,
    )
}

fn sequence_check(
    rng: &mut ChaCha8Rng,
    kind: CellKind,
    return_sequences: bool,
    reverse: bool,
) -> Result<f64> {
    let (d, u, len) = (
        rng.random_range(2..5),
        rng.random_range(2..5),
        rng.random_range(2..7),
    );
    let mut point = vec![uniform(rng, &[len, d], 1.0)];
    point.extend(random_cell(rng, kind, d, u));
    let w = uniform(rng, &[if return_sequences { len * u } else { u }], 1.0);
    grad_check(
        |p| {
            let cell = cell_from(kind, d, u, &p[1..]);
            let trace = cell.trace(&p[0], reverse)?;
            let mut grads = cell.zeros_like();
            let (value, dx) = if return_sequences {
                let dx = cell.backward(&trace, w.data(), &mut grads);
                (dot(w.data(), &trace.outputs_raw()), dx)
            } else {
                let dx = directional_final_backward(&cell, &trace, w.data(), &mut grads);
                (dot(w.data(), trace.final_state()), dx)
            };
            let mut g = vec![Tensor::new(vec![len, d], dx)?];
            g.extend(grads.tensors().into_iter().cloned());
            Ok((value, g))
        },
        &point,
        STEP,
    )
}

fn bidirectional_check(
    rng: &mut ChaCha8Rng,
    kind: CellKind,
    return_sequences: bool,
) -> Result<f64> {
    let (d, u, len) = (
        rng.random_range(2..4),
        rng.random_range(2..4),
        rng.random_range(2..6),
    );
    let mut point = vec![uniform(rng, &[len, d], 1.0)];
    let per_cell = kind.gate_count() * 3;
    point.extend(random_cell(rng, kind, d, u));
    point.extend(random_cell(rng, kind, d, u));
    let w = uniform(
        rng,
        &[if return_sequences { len * 2 * u } else { 2 * u }],
        1.0,
    );
    grad_check(
        |p| {
            let bi = Bidirectional::new(
                cell_from(kind, d, u, &p[1..1 + per_cell]),
                cell_from(kind, d, u, &p[1 + per_cell..]),
            )?;
            let (f, b) = bi.trace(&p[0])?;
            let mut grads = bi.zeros_like();
            let (value, dx) = if return_sequences {
                let y = Bidirectional::merge_sequences(&f, &b);
                (
                    dot(w.data(), &y),
                    bi.backward_sequences(&f, &b, w.data(), &mut grads),
                )
            } else {
                let y = Bidirectional::merge_final(&f, &b);
                (
                    dot(w.data(), &y),
                    bi.backward_final(&f, &b, w.data(), &mut grads),
                )
            };
            let mut g = vec![Tensor::new(vec![len, d], dx)?];
            g.extend(grads.tensors().into_iter().cloned());
            Ok((value, g))
        },
        &point,
        STEP,
    )
}

fn loss_check(rng: &mut ChaCha8Rng, loss: Loss) -> Result<f64> {
    let (rows, cols) = (rng.random_range(1..5), rng.random_range(2..6));
    let pred = Tensor::uniform(&[rows, cols], 0.05, 0.95, rng);
    let mut target = Tensor::zeros(&[rows, cols]);
    for r in 0..rows {
        match loss {
            Loss::BinaryCrossEntropy => {
                for v in target.row_mut(r) {
                    *v = f64::from(u8::from(rng.random_bool(0.5)));
                }
            }
            Loss::CategoricalCrossEntropy => target.row_mut(r)[rng.random_range(0..cols)] = 1.0,
        }
    }
    grad_check(
        |p| {
            Ok((
                loss.compute(&p[0], &target)?,
                vec![loss.gradient(&p[0], &target)?],
            ))
        },
        &[pred],
        STEP,
    )
}
