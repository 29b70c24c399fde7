use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::error::{Error, Result};

/// Probabilities are clipped to `[EPS, 1 - EPS]` before taking logs.
pub const LOG_CLIP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    BinaryCrossEntropy,
    CategoricalCrossEntropy,
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary_ce" | "binary_crossentropy" => Ok(Loss::BinaryCrossEntropy),
            "categorical_ce" | "categorical_crossentropy" => Ok(Loss::CategoricalCrossEntropy),
            other => Err(Error::Config(format!("unknown loss `{other}`"))),
        }
    }
}

#[inline]
fn clip(p: f64) -> f64 {
    p.clamp(LOG_CLIP, 1.0 - LOG_CLIP)
}

impl Loss {
    /// Mean loss over the batch (rows of `pred`).
    pub fn compute(self, pred: &Tensor, target: &Tensor) -> Result<f64> {
        if pred.shape() != target.shape() {
            return Err(Error::dim("loss", pred.shape(), target.shape()));
        }
        let rows = pred.rows() as f64;
        let total = match self {
            Loss::BinaryCrossEntropy => pred
                .data()
                .iter()
                .zip(target.data())
                .map(|(&p, &y)| binary_term(p, y))
                .sum::<f64>(),
            Loss::CategoricalCrossEntropy => pred
                .data()
                .iter()
                .zip(target.data())
                .filter(|(_, &y)| y != 0.0)
                .map(|(&p, &y)| -y * clip(p).ln())
                .sum::<f64>(),
        };
        let n = match self {
            Loss::BinaryCrossEntropy => pred.len() as f64,
            Loss::CategoricalCrossEntropy => rows,
        };
        Ok(total / n)
    }

    /// Gradient of [`Loss::compute`] wrt `pred`. Entries saturated by the
    /// log clip get zero gradient.
    pub fn gradient(self, pred: &Tensor, target: &Tensor) -> Result<Tensor> {
        if pred.shape() != target.shape() {
            return Err(Error::dim("loss gradient", pred.shape(), target.shape()));
        }
        let mut grad = Tensor::zeros_like(pred);
        match self {
            Loss::BinaryCrossEntropy => {
                let n = pred.len() as f64;
                for ((g, &p), &y) in grad
                    .data_mut()
                    .iter_mut()
                    .zip(pred.data())
                    .zip(target.data())
                {
                    if p > LOG_CLIP && p < 1.0 - LOG_CLIP {
                        *g = (-y / p + (1.0 - y) / (1.0 - p)) / n;
                    }
                }
            }
            Loss::CategoricalCrossEntropy => {
                let n = pred.rows() as f64;
                for ((g, &p), &y) in grad
                    .data_mut()
                    .iter_mut()
                    .zip(pred.data())
                    .zip(target.data())
                {
                    if p > LOG_CLIP && p < 1.0 - LOG_CLIP {
                        *g = -y / p / n;
                    }
                }
            }
        }
        Ok(grad)
    }
}

#[inline]
pub(crate) fn binary_term(p: f64, y: f64) -> f64 {
    let p = clip(p);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

#[inline]
pub(crate) fn categorical_term(probs: &[f64], label: usize) -> f64 {
    -clip(probs[label]).ln()
}

pub fn compute_loss(pred: &Tensor, target: &Tensor, kind: &str) -> Result<f64> {
    kind.parse::<Loss>()?.compute(pred, target)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_binary_prediction_is_near_zero() {
        let l = compute_loss(
            &Tensor::vector(vec![1.0 - 1e-12]),
            &Tensor::vector(vec![1.0]),
            "binary_ce",
        )
        .unwrap();
        assert!(l.abs() < 1e-11);
    }

    #[test]
    fn uniform_categorical_is_ln3() {
        let p = Tensor::from_rows(&[vec![1.0 / 3.0; 3]]).unwrap();
        let t = Tensor::from_rows(&[vec![1.0, 0.0, 0.0]]).unwrap();
        let l = compute_loss(&p, &t, "categorical_ce").unwrap();
        assert!((l - 3f64.ln()).abs() < 1e-12);
        assert!((l - 1.0986).abs() < 1e-4);
    }

    #[test]
    fn coin_flip_binary_is_ln2() {
        let l = compute_loss(
            &Tensor::vector(vec![0.5]),
            &Tensor::vector(vec![0.0]),
            "binary_ce",
        )
        .unwrap();
        assert!((l - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn saturated_prediction_is_finite() {
        let l = Loss::BinaryCrossEntropy
            .compute(&Tensor::vector(vec![0.0]), &Tensor::vector(vec![1.0]))
            .unwrap();
        assert!(l.is_finite());
        assert!((l - (-(LOG_CLIP.ln()))).abs() < 1e-9);
    }

    #[test]
    fn shape_mismatch() {
        let err = Loss::CategoricalCrossEntropy
            .compute(&Tensor::zeros(&[2, 3]), &Tensor::zeros(&[3, 2]))
            .unwrap_err();
        assert!(matches!(err, Error::Dimension { .. }));
    }
}
