//! Batch normalization over node batches: train mode normalizes per column
//! with biased batch variance and maintains running statistics; infer mode
//! applies the running statistics.

use crate::error::{Error, Result};
use crate::numcore::adam::Parameter;
use crate::numcore::matrix::DenseMatrix;

/// Learnable scale/shift plus running statistics for one normalized layer.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchNormState {
    /// Per-feature scale, shape 1×C.
    pub gamma: Parameter,
    /// Per-feature shift, shape 1×C.
    pub beta: Parameter,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub epsilon: f64,
}

impl BatchNormState {
    /// gamma = 1, beta = 0, running mean 0, running variance 1.
    pub fn new(features: usize, momentum: f64, epsilon: f64) -> Result<Self> {
        if epsilon <= 0.0 {
            return Err(Error::Input(format!("epsilon must be > 0, got {epsilon}")));
        }
        Ok(BatchNormState {
            gamma: Parameter::new(DenseMatrix::from_vec(1, features, vec![1.0; features])?),
            beta: Parameter::new(DenseMatrix::zeros(1, features)),
            running_mean: vec![0.0; features],
            running_var: vec![1.0; features],
            momentum,
            epsilon,
        })
    }

    pub fn num_features(&self) -> usize {
        self.gamma.value.cols()
    }

    fn check_cols(&self, x: &DenseMatrix) -> Result<()> {
        if x.cols() != self.num_features() {
            return Err(Error::Shape(format!(
                "batchnorm: input has {} columns, state has {} features",
                x.cols(),
                self.num_features()
            )));
        }
        Ok(())
    }
}

/// Everything the backward pass needs from a train-mode forward.
#[derive(Clone, Debug)]
pub struct BatchNormCache {
    x_hat: DenseMatrix,
    inv_std: Vec<f64>,
    gamma: Vec<f64>,
}

/// Train-mode forward: normalizes per column with batch mean and biased
/// variance (divisor N), then scales and shifts. Updates running statistics
/// with the configured momentum. Requires at least 2 rows.
pub fn batchnorm_train(
    x: &DenseMatrix,
    state: &mut BatchNormState,
) -> Result<(DenseMatrix, BatchNormCache)> {
    state.check_cols(x)?;
    let n = x.rows();
    if n < 2 {
        return Err(Error::Input(format!(
            "batchnorm train mode needs a batch of >= 2 rows, got {n}"
        )));
    }
    let c = x.cols();
    let inv_n = 1.0 / n as f64;

    let mut mean = vec![0.0; c];
    for r in 0..n {
        for (m, &v) in mean.iter_mut().zip(x.row(r)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m *= inv_n);

    let mut var = vec![0.0; c];
    for r in 0..n {
        for (j, &v) in x.row(r).iter().enumerate() {
            let d = v - mean[j];
            var[j] += d * d;
        }
    }
    var.iter_mut().for_each(|v| *v *= inv_n);

    let inv_std: Vec<f64> = var.iter().map(|&v| 1.0 / (v + state.epsilon).sqrt()).collect();

    let mut x_hat = DenseMatrix::zeros(n, c);
    let mut y = DenseMatrix::zeros(n, c);
    let gamma = state.gamma.value.row(0).to_vec();
    let beta = state.beta.value.row(0);
    for r in 0..n {
        let xin = x.row(r);
        let xh = x_hat.row_mut(r);
        for j in 0..c {
            xh[j] = (xin[j] - mean[j]) * inv_std[j];
        }
        let yr = y.row_mut(r);
        for j in 0..c {
            yr[j] = gamma[j] * x_hat.get(r, j) + beta[j];
        }
    }

    let mom = state.momentum;
    for j in 0..c {
        state.running_mean[j] = (1.0 - mom) * state.running_mean[j] + mom * mean[j];
        state.running_var[j] = (1.0 - mom) * state.running_var[j] + mom * var[j];
    }

    Ok((
        y,
        BatchNormCache {
            x_hat,
            inv_std,
            gamma,
        },
    ))
}

/// Infer-mode forward using the running statistics; no state mutation, safe
/// to call concurrently on a shared model.
pub fn batchnorm_infer(x: &DenseMatrix, state: &BatchNormState) -> Result<DenseMatrix> {
    state.check_cols(x)?;
    let c = x.cols();
    let gamma = state.gamma.value.row(0);
    let beta = state.beta.value.row(0);
    let inv_std: Vec<f64> = state
        .running_var
        .iter()
        .map(|&v| 1.0 / (v + state.epsilon).sqrt())
        .collect();
    let mut y = DenseMatrix::zeros(x.rows(), c);
    for r in 0..x.rows() {
        let xin = x.row(r);
        let yr = y.row_mut(r);
        for j in 0..c {
            yr[j] = gamma[j] * (xin[j] - state.running_mean[j]) * inv_std[j] + beta[j];
        }
    }
    Ok(y)
}

/// Exact gradients of the train-mode forward. Returns (dX, dgamma, dbeta).
pub fn batchnorm_bwd(
    cache: &BatchNormCache,
    dy: &DenseMatrix,
) -> Result<(DenseMatrix, Vec<f64>, Vec<f64>)> {
    if !cache.x_hat.same_shape(dy) {
        return Err(Error::Shape(format!(
            "batchnorm_bwd: cache {}x{} vs dY {}x{}",
            cache.x_hat.rows(),
            cache.x_hat.cols(),
            dy.rows(),
            dy.cols()
        )));
    }
    let n = dy.rows();
    let c = dy.cols();
    let inv_n = 1.0 / n as f64;

    let mut dgamma = vec![0.0; c];
    let mut dbeta = vec![0.0; c];
    // column sums of dx_hat and of dx_hat * x_hat, where dx_hat = dy * gamma
    let mut sum_dxh = vec![0.0; c];
    let mut sum_dxh_xh = vec![0.0; c];
    for r in 0..n {
        let dyr = dy.row(r);
        let xhr = cache.x_hat.row(r);
        for j in 0..c {
            dgamma[j] += dyr[j] * xhr[j];
            dbeta[j] += dyr[j];
            let dxh = dyr[j] * cache.gamma[j];
            sum_dxh[j] += dxh;
            sum_dxh_xh[j] += dxh * xhr[j];
        }
    }

    let mut dx = DenseMatrix::zeros(n, c);
    for r in 0..n {
        let dyr = dy.row(r);
        let xhr = cache.x_hat.row(r);
        let dxr = dx.row_mut(r);
        for j in 0..c {
            let dxh = dyr[j] * cache.gamma[j];
            dxr[j] = inv_n
                * cache.inv_std[j]
                * (n as f64 * dxh - sum_dxh[j] - xhr[j] * sum_dxh_xh[j]);
        }
    }
    Ok((dx, dgamma, dbeta))
}
