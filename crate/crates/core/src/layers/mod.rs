//! Layers with forward and hand-derived backward passes.

mod dense;
mod dropout;
mod embedding;
pub(crate) mod init;
mod recurrent;

pub use dense::{dense_forward, time_distributed_dense, Dense};
pub use dropout::{spatial_dropout, spatial_dropout_mask};
pub use embedding::{embed, EmbeddingTable, RowGradients};
pub use recurrent::{
    bidirectional, gru_step, lstm_step, run_sequence, Bidirectional, CellKind, CellParams,
    GateParams, SequenceTrace,
};

pub(crate) use dropout::apply_channel_mask;
pub(crate) use recurrent::directional_final_backward;
