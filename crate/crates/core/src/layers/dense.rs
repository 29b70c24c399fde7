use rand::Rng;
use serde::{Deserialize, Serialize};

use super::init::glorot_uniform;
use crate::error::{Error, Result};
use crate::numkit::{matmul_into, Activation, Tensor};

/// Fully connected layer `act(x·W + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub kernel: Tensor,
    pub bias: Tensor,
    pub activation: Activation,
}

impl Dense {
    pub fn new(kernel: Tensor, bias: Tensor, activation: Activation) -> Result<Self> {
        if kernel.shape().len() != 2 || bias.shape() != [kernel.shape()[1]] {
            return Err(Error::dim("dense", kernel.shape(), bias.shape()));
        }
        Ok(Dense {
            kernel,
            bias,
            activation,
        })
    }

    pub fn init<R: Rng + ?Sized>(
        inputs: usize,
        outputs: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        Dense {
            kernel: glorot_uniform(inputs, outputs, rng),
            bias: Tensor::zeros(&[outputs]),
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.kernel.shape()[0]
    }

    pub fn outputs(&self) -> usize {
        self.kernel.shape()[1]
    }

    pub fn zeros_like(&self) -> Dense {
        Dense {
            kernel: Tensor::zeros_like(&self.kernel),
            bias: Tensor::zeros_like(&self.bias),
            activation: self.activation,
        }
    }

    /// Forward over a flat `[rows×inputs]` buffer.
    pub fn forward_raw(&self, x: &[f64], rows: usize) -> Vec<f64> {
        let (k, n) = (self.inputs(), self.outputs());
        let mut out = Vec::with_capacity(rows * n);
        for _ in 0..rows {
            out.extend_from_slice(self.bias.data());
        }
        matmul_into(x, self.kernel.data(), &mut out, rows, k, n);
        self.activation.apply_in_place(&mut out, n);
        out
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        if x.shape().len() != 2 || x.shape()[1] != self.inputs() {
            return Err(Error::dim("dense_forward", x.shape(), self.kernel.shape()));
        }
        let rows = x.shape()[0];
        Tensor::new(vec![rows, self.outputs()], self.forward_raw(x.data(), rows))
    }

    /// Backward given forward input `x`, output `y` and upstream `dy`.
    /// Accumulates parameter gradients into `grads` and returns `dx`.
    pub fn backward_raw(
        &self,
        x: &[f64],
        y: &[f64],
        dy: &[f64],
        rows: usize,
        grads: &mut Dense,
    ) -> Vec<f64> {
        let mut da = dy.to_vec();
        self.activation
            .backward_in_place(y, &mut da, self.outputs());
        self.backward_pre_activation(x, &da, rows, grads)
    }

    /// Backward from the gradient wrt the pre-activation directly.
    pub fn backward_pre_activation(
        &self,
        x: &[f64],
        da: &[f64],
        rows: usize,
        grads: &mut Dense,
    ) -> Vec<f64> {
        let (k, n) = (self.inputs(), self.outputs());
        let mut dx = vec![0.0; rows * k];
        let w = self.kernel.data();
        let gk = grads.kernel.data_mut();
        for r in 0..rows {
            let xr = &x[r * k..(r + 1) * k];
            let dr = &da[r * n..(r + 1) * n];
            crate::numkit::outer_acc(xr, dr, gk);
            crate::numkit::matvec_t_acc(w, dr, &mut dx[r * k..(r + 1) * k]);
        }
        let gb = grads.bias.data_mut();
        for r in 0..rows {
            for (g, &d) in gb.iter_mut().zip(&da[r * n..(r + 1) * n]) {
                *g += d;
            }
        }
        dx
    }

    pub fn tensors(&self) -> [&Tensor; 2] {
        [&self.kernel, &self.bias]
    }

    pub fn tensors_mut(&mut self) -> [&mut Tensor; 2] {
        [&mut self.kernel, &mut self.bias]
    }
}

pub fn dense_forward(
    x: &Tensor,
    weights: &Tensor,
    bias: &Tensor,
    act: Activation,
) -> Result<Tensor> {
    if x.shape().len() != 2 || weights.shape().len() != 2 || x.shape()[1] != weights.shape()[0] {
        return Err(Error::dim("dense_forward", x.shape(), weights.shape()));
    }
    Dense::new(weights.clone(), bias.clone(), act)?.forward(x)
}

/// Dense applied independently at every timestep of a `[len×k]` sequence.
pub fn time_distributed_dense(
    seq: &Tensor,
    weights: &Tensor,
    bias: &Tensor,
    act: Activation,
) -> Result<Tensor> {
    dense_forward(seq, weights, bias, act)
}
