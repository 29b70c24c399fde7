use rand::Rng;
use rand_distr::StandardNormal;

use crate::numkit::Tensor;

pub fn glorot_uniform<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Tensor::uniform(&[fan_in, fan_out], -limit, limit, rng)
}

/// Random orthogonal `n×n` matrix: modified Gram-Schmidt over Gaussian columns.
pub fn orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Tensor {
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    for j in 0..n {
        for i in 0..j {
            let (head, tail) = cols.split_at_mut(j);
            let proj: f64 = head[i].iter().zip(&tail[0]).map(|(a, b)| a * b).sum();
            for (v, q) in tail[0].iter_mut().zip(&head[i]) {
                *v -= proj * q;
            }
        }
        let norm = cols[j].iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        cols[j].iter_mut().for_each(|v| *v /= norm);
    }
    let mut data = vec![0.0; n * n];
    for (j, col) in cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            data[i * n + j] = v;
        }
    }
    Tensor::new(vec![n, n], data).expect("square shape")
}
