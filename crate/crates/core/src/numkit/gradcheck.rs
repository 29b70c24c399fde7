use super::Tensor;
use crate::error::{Error, Result};
use crate::exec::Execution;

/// Compare the analytic gradient returned by `f` against central finite
/// differences at every coordinate of `point`.
///
/// `f` returns `(value, gradient)` with one gradient tensor per input tensor.
/// The result is the worst relative error `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn grad_check<F>(f: F, point: &[Tensor], h: f64) -> Result<f64>
where
    F: Fn(&[Tensor]) -> Result<(f64, Vec<Tensor>)> + Sync + Send,
{
    grad_check_with(Execution::default(), f, point, h)
}

pub fn grad_check_with<F>(exec: Execution, f: F, point: &[Tensor], h: f64) -> Result<f64>
where
    F: Fn(&[Tensor]) -> Result<(f64, Vec<Tensor>)> + Sync + Send,
{
    if !(1e-7..=1e-3).contains(&h) {
        return Err(Error::Config(format!("step {h} outside [1e-7, 1e-3]")));
    }
    let (value, analytic) = f(point)?;
    if !value.is_finite() {
        return Err(Error::Numeric(format!(
            "f is not finite at the base point: {value}"
        )));
    }
    if analytic.len() != point.len() {
        return Err(Error::dim("grad_check", &[point.len()], &[analytic.len()]));
    }
    for (a, p) in analytic.iter().zip(point) {
        if a.shape() != p.shape() {
            return Err(Error::dim("grad_check", p.shape(), a.shape()));
        }
    }

    let coords: Vec<(usize, usize)> = point
        .iter()
        .enumerate()
        .flat_map(|(t, tensor)| (0..tensor.len()).map(move |i| (t, i)))
        .collect();

    let errors = exec.map(&coords, |&(t, i)| -> Result<f64> {
        let eval = |delta: f64| -> Result<f64> {
            let mut shifted = point.to_vec();
            shifted[t].data_mut()[i] += delta;
            let (v, _) = f(&shifted)?;
            if !v.is_finite() {
                return Err(Error::Numeric(format!(
                    "f is not finite at tensor {t} coordinate {i} shifted by {delta}"
                )));
            }
            Ok(v)
        };
        let numeric = (eval(h)? - eval(-h)?) / (2.0 * h);
        let a = analytic[t].data()[i];
        let denom = a.abs().max(numeric.abs()).max(1e-8);
        Ok((a - numeric).abs() / denom)
    });

    let mut worst = 0.0f64;
    for e in errors {
        worst = worst.max(e?);
    }
    Ok(worst)
}
