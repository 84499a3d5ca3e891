//! Trainable parameters and the Adam update with L2-coupled weight decay.

use crate::error::{Error, Result};
use crate::numcore::matrix::DenseMatrix;

/// A dense value paired with its gradient accumulator and Adam moment state.
///
/// All four matrices share one shape; the gradient is zeroed by every
/// optimizer step so callers accumulate into it between steps.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameter {
    pub value: DenseMatrix,
    pub grad: DenseMatrix,
    pub adam_m: DenseMatrix,
    pub adam_v: DenseMatrix,
    pub step_count: u64,
}

impl Parameter {
    pub fn new(value: DenseMatrix) -> Self {
        let (r, c) = value.shape();
        Parameter {
            value,
            grad: DenseMatrix::zeros(r, c),
            adam_m: DenseMatrix::zeros(r, c),
            adam_v: DenseMatrix::zeros(r, c),
            step_count: 0,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

/// Adam hyperparameters. `weight_decay` is folded into the gradient as an L2
/// term before the moment updates (coupled decay).
#[derive(Clone, Copy, Debug)]
pub struct AdamConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.001,
            weight_decay: 0.0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One bias-corrected Adam step; increments `step_count` and zeroes the
/// gradient afterwards. A non-finite gradient aborts with a divergence error.
pub fn adam_step(param: &mut Parameter, cfg: &AdamConfig) -> Result<()> {
    if !param.grad.all_finite() {
        return Err(Error::Diverged(
            "non-finite gradient in adam_step".to_string(),
        ));
    }
    let t = param.step_count + 1;
    let bc1 = 1.0 - cfg.beta1.powi(t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(t as i32);

    let n = param.value.data().len();
    for i in 0..n {
        let g = param.grad.data()[i] + cfg.weight_decay * param.value.data()[i];
        let m = cfg.beta1 * param.adam_m.data()[i] + (1.0 - cfg.beta1) * g;
        let v = cfg.beta2 * param.adam_v.data()[i] + (1.0 - cfg.beta2) * g * g;
        param.adam_m.data_mut()[i] = m;
        param.adam_v.data_mut()[i] = v;
        let m_hat = m / bc1;
        let v_hat = v / bc2;
        param.value.data_mut()[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
    param.step_count = t;
    param.zero_grad();
    Ok(())
}
