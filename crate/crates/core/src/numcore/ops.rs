//! Elementwise activations, row softmax, and softmax cross-entropy with its
//! analytic gradient.

use crate::error::{Error, Result};
use crate::numcore::matrix::DenseMatrix;

/// Y = max(0, X) elementwise.
pub fn relu_fwd(x: &DenseMatrix) -> DenseMatrix {
    let mut y = x.clone();
    y.data_mut().iter_mut().for_each(|v| {
        if *v < 0.0 {
            *v = 0.0;
        }
    });
    y
}

/// dX = dY where X > 0, else 0. The subgradient at exactly 0 is 0.
pub fn relu_bwd(x: &DenseMatrix, dy: &DenseMatrix) -> Result<DenseMatrix> {
    if !x.same_shape(dy) {
        return Err(Error::Shape(format!(
            "relu_bwd: {}x{} vs {}x{}",
            x.rows(),
            x.cols(),
            dy.rows(),
            dy.cols()
        )));
    }
    let mut dx = dy.clone();
    for (g, &v) in dx.data_mut().iter_mut().zip(x.data()) {
        if v <= 0.0 {
            *g = 0.0;
        }
    }
    Ok(dx)
}

/// Row-wise softmax with per-row max subtraction for stability.
/// Every output row sums to 1 within 1e-9 and all entries lie in (0, 1).
pub fn softmax_rows(x: &DenseMatrix) -> DenseMatrix {
    let mut p = DenseMatrix::zeros(x.rows(), x.cols());
    for r in 0..x.rows() {
        let row = x.row(r);
        let mut m = f64::NEG_INFINITY;
        for &v in row {
            if v > m {
                m = v;
            }
        }
        let out = p.row_mut(r);
        let mut sum = 0.0;
        for (o, &v) in out.iter_mut().zip(row) {
            let e = (v - m).exp();
            *o = e;
            sum += e;
        }
        let inv = 1.0 / sum;
        out.iter_mut().for_each(|o| *o *= inv);
    }
    p
}

/// Mean cross-entropy of row softmax against integer labels.
///
/// Returns the loss and dLoss/dLogits = (softmax − one_hot) / N.
pub fn cross_entropy(logits: &DenseMatrix, labels: &[usize]) -> Result<(f64, DenseMatrix)> {
    let n = logits.rows();
    if labels.len() != n {
        return Err(Error::Shape(format!(
            "cross_entropy: {} logit rows vs {} labels",
            n,
            labels.len()
        )));
    }
    for (r, &lab) in labels.iter().enumerate() {
        if lab >= logits.cols() {
            return Err(Error::Input(format!(
                "label {} out of range for {} classes (row {})",
                lab,
                logits.cols(),
                r
            )));
        }
    }
    let mut grad = softmax_rows(logits);
    let inv_n = 1.0 / n as f64;
    let mut loss = 0.0;
    for (r, &lab) in labels.iter().enumerate() {
        let row = logits.row(r);
        let mut m = f64::NEG_INFINITY;
        for &v in row {
            if v > m {
                m = v;
            }
        }
        let mut lse = 0.0;
        for &v in row {
            lse += (v - m).exp();
        }
        // -log softmax[label] via log-sum-exp, avoiding a log of a tiny value
        loss += lse.ln() + m - row[lab];
        let g = grad.row_mut(r);
        g[lab] -= 1.0;
        g.iter_mut().for_each(|v| *v *= inv_n);
    }
    loss *= inv_n;
    if loss < 0.0 && loss > -1e-12 {
        loss = 0.0; // clamp rounding residue; true loss is nonnegative
    }
    Ok((loss, grad))
}
