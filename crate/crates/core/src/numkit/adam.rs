use super::Tensor;
use crate::error::{Error, Result};

/// Bias-corrected Adam. Moment buffers are created on the first update and
/// must stay shape-congruent with the parameters afterwards.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step_count: u64,
    first_moment: Vec<Tensor>,
    second_moment: Vec<Tensor>,
}

impl Default for AdamState {
    fn default() -> Self {
        AdamState::new(0.001, 0.9, 0.999, 1e-7).expect("default constants are valid")
    }
}

impl AdamState {
    pub fn new(learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Result<Self> {
        let in_unit = |b: f64| b > 0.0 && b < 1.0;
        if !in_unit(beta1) || !in_unit(beta2) || epsilon <= 0.0 || learning_rate <= 0.0 {
            return Err(Error::Config(format!(
                "invalid Adam constants lr={learning_rate} beta1={beta1} beta2={beta2} eps={epsilon}"
            )));
        }
        Ok(AdamState {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            step_count: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        })
    }

    pub fn with_learning_rate(learning_rate: f64) -> Result<Self> {
        let d = AdamState::default();
        AdamState::new(learning_rate, d.beta1, d.beta2, d.epsilon)
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> &[Tensor] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[Tensor] {
        &self.second_moment
    }

    /// Apply one update to `params` in place.
    pub fn update(&mut self, params: &mut [&mut Tensor], grads: &[&Tensor]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::dim("adam_update", &[params.len()], &[grads.len()]));
        }
        for (p, g) in params.iter().zip(grads) {
            if p.shape() != g.shape() {
                return Err(Error::dim("adam_update", p.shape(), g.shape()));
            }
        }
        if self.first_moment.is_empty() {
            self.first_moment = params.iter().map(|p| Tensor::zeros_like(p)).collect();
            self.second_moment = self.first_moment.clone();
        } else if self.first_moment.len() != params.len()
            || self
                .first_moment
                .iter()
                .zip(params.iter())
                .any(|(m, p)| m.shape() != p.shape())
        {
            return Err(Error::Config(
                "parameter set changed shape between Adam updates".into(),
            ));
        }

        self.step_count += 1;
        let t = self.step_count as i32;
        let (b1, b2) = (self.beta1, self.beta2);
        let correction1 = 1.0 - b1.powi(t);
        let correction2 = 1.0 - b2.powi(t);
        let lr = self.learning_rate;
        let eps = self.epsilon;

        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = self.first_moment[i].data_mut();
            let v = self.second_moment[i].data_mut();
            for (((pv, &gv), mv), vv) in p.data_mut().iter_mut().zip(g.data()).zip(m).zip(v) {
                *mv = b1 * *mv + (1.0 - b1) * gv;
                *vv = b2 * *vv + (1.0 - b2) * gv * gv;
                let m_hat = *mv / correction1;
                let v_hat = *vv / correction2;
                *pv -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Functional form: returns updated copies of `params`.
pub fn adam_update(
    params: &[Tensor],
    grads: &[Tensor],
    state: &mut AdamState,
) -> Result<Vec<Tensor>> {
    let mut out = params.to_vec();
    {
        let mut refs: Vec<&mut Tensor> = out.iter_mut().collect();
        let grefs: Vec<&Tensor> = grads.iter().collect();
        state.update(&mut refs, &grefs)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut s = AdamState::default();
        let out = adam_update(
            &[Tensor::vector(vec![0.0])],
            &[Tensor::vector(vec![1.0])],
            &mut s,
        )
        .unwrap();
        // m_hat = 1, v_hat = 1, step = lr / (1 + eps)
        let expected = -0.001 / (1.0 + 1e-7);
        assert!((out[0].data()[0] - expected).abs() < 1e-15);
        assert!((out[0].data()[0] + 0.001).abs() < 1e-9);
        assert_eq!(s.step_count(), 1);
    }

    #[test]
    fn zero_gradient_is_identity() {
        let mut s = AdamState::default();
        let p = Tensor::vector(vec![0.3, -1.2, 4.0]);
        let mut cur = vec![p.clone()];
        for _ in 0..5 {
            cur = adam_update(&cur, &[Tensor::zeros(&[3])], &mut s).unwrap();
        }
        assert_eq!(cur[0], p);
        assert_eq!(s.step_count(), 5);
    }

    #[test]
    fn constant_gradient_steps_do_not_grow() {
        let mut s = AdamState::default();
        let g = Tensor::vector(vec![0.7]);
        let p0 = Tensor::vector(vec![1.0]);
        let p1 = adam_update(std::slice::from_ref(&p0), std::slice::from_ref(&g), &mut s).unwrap();
        let p2 = adam_update(&p1, &[g], &mut s).unwrap();
        let d1 = (p1[0].data()[0] - p0.data()[0]).abs();
        let d2 = (p2[0].data()[0] - p1[0].data()[0]).abs();
        assert!(d2 <= d1 * (1.0 + 1e-6), "d1={d1} d2={d2}");
    }

    #[test]
    fn rejects_bad_constants_and_shapes() {
        assert!(AdamState::new(0.001, 1.0, 0.999, 1e-7).is_err());
        assert!(AdamState::new(0.001, 0.9, 0.999, 0.0).is_err());
        let mut s = AdamState::default();
        let err = adam_update(&[Tensor::zeros(&[2])], &[Tensor::zeros(&[3])], &mut s).unwrap_err();
        assert!(matches!(err, Error::Dimension { .. }));
        assert_eq!(s.step_count(), 0);
    }
}
