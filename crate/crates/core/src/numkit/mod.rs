//! Dense tensor kernel: products, activations, losses, Adam and a
//! finite-difference gradient checker. All training math runs in `f64`.

mod activation;
mod adam;
mod gradcheck;
mod loss;
mod tensor;

pub use activation::{apply_activation, sigmoid, softmax_in_place, Activation};
pub use adam::{adam_update, AdamState};
pub use gradcheck::{grad_check, grad_check_with};
pub use loss::{compute_loss, Loss, LOG_CLIP};
pub use tensor::{matmul, Tensor};

pub(crate) use loss::{binary_term, categorical_term};
pub(crate) use tensor::{matmul_into, matvec_t_acc, outer_acc, vecmat_acc};
