use rand::Rng;

use crate::error::{Error, Result};
use crate::numkit::Tensor;

/// Per-channel keep mask: each entry is `0` (dropped) or `1/(1-rate)`.
pub fn spatial_dropout_mask<R: Rng + ?Sized>(
    dim: usize,
    rate: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
    }
    let scale = 1.0 / (1.0 - rate);
    Ok((0..dim)
        .map(|_| {
            if rate > 0.0 && rng.random::<f64>() < rate {
                0.0
            } else {
                scale
            }
        })
        .collect())
}

/// Apply a channel mask to every row of a `[len×dim]` buffer.
pub(crate) fn apply_channel_mask(data: &mut [f64], mask: &[f64]) {
    for row in data.chunks_mut(mask.len()) {
        for (v, m) in row.iter_mut().zip(mask) {
            *v *= m;
        }
    }
}

/// Drop whole feature channels of `seq[len×dim]`, identical across timesteps.
/// Identity when `training` is false.
pub fn spatial_dropout<R: Rng + ?Sized>(
    seq: &Tensor,
    rate: f64,
    training: bool,
    rng: &mut R,
) -> Result<Tensor> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
    }
    if !training || rate == 0.0 {
        return Ok(seq.clone());
    }
    let mask = spatial_dropout_mask(seq.cols(), rate, rng)?;
    let mut out = seq.clone();
    apply_channel_mask(out.data_mut(), &mask);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn seq() -> Tensor {
        Tensor::from_rows(&[
            vec![1.0, 2.0, 3.0, 4.0],
            vec![5.0, 6.0, 7.0, 8.0],
            vec![9.0, 1.0, 2.0, 3.0],
        ])
        .unwrap()
    }

    #[test]
    fn zero_rate_and_inference_are_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(spatial_dropout(&seq(), 0.0, true, &mut rng).unwrap(), seq());
        assert_eq!(
            spatial_dropout(&seq(), 0.7, false, &mut rng).unwrap(),
            seq()
        );
    }

    #[test]
    fn dropped_channels_are_shared_across_timesteps() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let s = Tensor::filled(&[6, 16], 1.0);
        let out = spatial_dropout(&s, 0.5, true, &mut rng).unwrap();
        let first: Vec<bool> = out.row(0).iter().map(|&v| v == 0.0).collect();
        assert!(first.iter().any(|&d| d) && first.iter().any(|&d| !d));
        for t in 1..6 {
            let dropped: Vec<bool> = out.row(t).iter().map(|&v| v == 0.0).collect();
            assert_eq!(dropped, first);
        }
        assert!(out.data().iter().all(|&v| v == 0.0 || v == 2.0));
    }

    #[test]
    fn rate_out_of_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            spatial_dropout(&seq(), 1.0, true, &mut rng),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            spatial_dropout(&seq(), -0.1, false, &mut rng),
            Err(Error::Config(_))
        ));
    }
}
