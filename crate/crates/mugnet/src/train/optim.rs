//! AdamW: bias-corrected adaptive moments with decoupled weight decay.

use crate::error::{MugError, Result};
use crate::neural::{NamedTensors, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdamWConfig {
    pub betas: (f64, f64),
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig {
            betas: (0.9, 0.999),
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdamWState {
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    step: u64,
}

impl AdamWState {
    pub fn new(params: &NamedTensors) -> Self {
        let zeros: Vec<Tensor> = params
            .tensors()
            .iter()
            .map(|t| Tensor::zeros(t.rows(), t.cols()))
            .collect();
        AdamWState {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One update: `theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta)`.
pub fn adamw_step(
    params: &mut NamedTensors,
    grads: &NamedTensors,
    state: &mut AdamWState,
    lr: f64,
    config: &AdamWConfig,
) -> Result<()> {
    if !params.congruent_with(grads) {
        return Err(MugError::Contract(
            "gradient set does not match parameter set".into(),
        ));
    }
    if params.len() != state.m.len() {
        return Err(MugError::Contract(
            "optimizer state does not match parameter set".into(),
        ));
    }
    state.step += 1;
    let (b1, b2) = config.betas;
    let bc1 = 1.0 - b1.powi(state.step as i32);
    let bc2 = 1.0 - b2.powi(state.step as i32);
    for (i, g) in grads.tensors().iter().enumerate() {
        let m = &mut state.m[i];
        let v = &mut state.v[i];
        let theta = &mut params.tensors_mut()[i];
        for (((t, &gv), mv), vv) in theta
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.data_mut())
            .zip(v.data_mut())
        {
            *mv = b1 * *mv + (1.0 - b1) * gv;
            *vv = b2 * *vv + (1.0 - b2) * gv * gv;
            let m_hat = *mv / bc1;
            let v_hat = *vv / bc2;
            *t -= lr * (m_hat / (v_hat.sqrt() + config.eps) + config.weight_decay * *t);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params_of(values: &[f64]) -> NamedTensors {
        let mut p = NamedTensors::new();
        p.push("theta", Tensor::from_vec(1, values.len(), values.to_vec()).unwrap());
        p
    }

    #[test]
    fn zero_gradient_zero_decay_is_identity() {
        let mut params = params_of(&[1.0, -2.0, 3.0]);
        let grads = params_of(&[0.0, 0.0, 0.0]);
        let mut state = AdamWState::new(&params);
        let config = AdamWConfig {
            weight_decay: 0.0,
            ..AdamWConfig::default()
        };
        adamw_step(&mut params, &grads, &mut state, 0.001, &config).unwrap();
        assert_eq!(params.tensors()[0].data(), &[1.0, -2.0, 3.0]);
    }

    #[test]
    fn zero_gradient_pure_decay_scales_parameters() {
        let mut params = params_of(&[1.0, -2.0]);
        let grads = params_of(&[0.0, 0.0]);
        let mut state = AdamWState::new(&params);
        let config = AdamWConfig::default(); // wd = 0.01
        adamw_step(&mut params, &grads, &mut state, 0.001, &config).unwrap();
        let factor = 1.0 - 0.001 * 0.01;
        assert!((params.tensors()[0].data()[0] - factor).abs() < 1e-15);
        assert!((params.tensors()[0].data()[1] + 2.0 * factor).abs() < 1e-15);
    }

    #[test]
    fn first_step_with_unit_gradient_moves_by_lr() {
        // Bias correction gives m_hat = v_hat = 1 on the first step.
        let mut params = params_of(&[0.0]);
        let grads = params_of(&[1.0]);
        let mut state = AdamWState::new(&params);
        let config = AdamWConfig {
            weight_decay: 0.0,
            ..AdamWConfig::default()
        };
        let lr = 0.001;
        adamw_step(&mut params, &grads, &mut state, lr, &config).unwrap();
        let expect = -lr * 1.0 / (1.0 + config.eps);
        assert!((params.tensors()[0].data()[0] - expect).abs() < 1e-15);
        assert!((params.tensors()[0].data()[0] + lr).abs() < 1e-8);
    }

    #[test]
    fn mismatched_shapes_rejected() {
        let mut params = params_of(&[0.0]);
        let grads = params_of(&[1.0, 2.0]);
        let mut state = AdamWState::new(&params);
        assert!(adamw_step(&mut params, &grads, &mut state, 0.1, &AdamWConfig::default()).is_err());
    }
}
