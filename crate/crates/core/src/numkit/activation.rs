use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Sigmoid,
    Tanh,
    Relu,
    /// Normalizes over the last axis.
    Softmax,
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" | "linear" => Ok(Activation::Identity),
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            "softmax" => Ok(Activation::Softmax),
            other => Err(Error::Config(format!("unknown activation `{other}`"))),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Activation::Identity => "identity",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Softmax => "softmax",
        };
        f.write_str(s)
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Max-shifted softmax of one row, written in place.
pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in row.iter_mut() {
        *v /= total;
    }
}

impl Activation {
    pub fn apply(self, x: &Tensor) -> Tensor {
        let mut out = x.clone();
        self.apply_in_place(out.data_mut(), x.cols());
        out
    }

    /// Transform a flat row-major buffer whose last axis has `cols` entries.
    pub fn apply_in_place(self, data: &mut [f64], cols: usize) {
        match self {
            Activation::Identity => {}
            Activation::Sigmoid => data.iter_mut().for_each(|v| *v = sigmoid(*v)),
            Activation::Tanh => data.iter_mut().for_each(|v| *v = v.tanh()),
            Activation::Relu => data.iter_mut().for_each(|v| *v = v.max(0.0)),
            Activation::Softmax => data.chunks_mut(cols).for_each(softmax_in_place),
        }
    }

    /// Gradient wrt the pre-activation, given the activation output `y` and
    /// the upstream gradient `dy` (same layout, last axis of width `cols`).
    pub fn backward_in_place(self, y: &[f64], dy: &mut [f64], cols: usize) {
        match self {
            Activation::Identity => {}
            Activation::Sigmoid => {
                for (d, &s) in dy.iter_mut().zip(y) {
                    *d *= s * (1.0 - s);
                }
            }
            Activation::Tanh => {
                for (d, &t) in dy.iter_mut().zip(y) {
                    *d *= 1.0 - t * t;
                }
            }
            Activation::Relu => {
                for (d, &r) in dy.iter_mut().zip(y) {
                    if r <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            Activation::Softmax => {
                for (drow, yrow) in dy.chunks_mut(cols).zip(y.chunks(cols)) {
                    let dot: f64 = drow.iter().zip(yrow).map(|(d, p)| d * p).sum();
                    for (d, &p) in drow.iter_mut().zip(yrow) {
                        *d = p * (*d - dot);
                    }
                }
            }
        }
    }

    pub fn backward(self, y: &Tensor, dy: &Tensor) -> Result<Tensor> {
        if y.shape() != dy.shape() {
            return Err(Error::dim("activation backward", y.shape(), dy.shape()));
        }
        let mut out = dy.clone();
        self.backward_in_place(y.data(), out.data_mut(), y.cols());
        Ok(out)
    }
}

/// Parse-and-apply entry point for callers holding an activation name.
pub fn apply_activation(x: &Tensor, kind: &str) -> Result<Tensor> {
    Ok(kind.parse::<Activation>()?.apply(x))
}
