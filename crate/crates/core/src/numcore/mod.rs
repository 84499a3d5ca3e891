//! Dense numeric kernel: matrices, activations, batch normalization, Adam,
//! and the finite-difference gradient checker. Everything runs in f64 with
//! fixed summation orders for bit-reproducible results.

mod adam;
mod batchnorm;
mod gradcheck;
mod matrix;
mod ops;

pub use adam::{adam_step, AdamConfig, Parameter};
pub use batchnorm::{batchnorm_bwd, batchnorm_infer, batchnorm_train, BatchNormCache, BatchNormState};
pub use gradcheck::{gradcheck, GradCheck};
pub use matrix::{matmul, matmul_nt, matmul_tn, DenseMatrix};
pub use ops::{cross_entropy, relu_bwd, relu_fwd, softmax_rows};

/// Whether a forward pass uses batch statistics (training) or the stored
/// running statistics (inference).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Train,
    Infer,
}
