//! Dense matrices, the handful of kernels the encoder and losses need, and a
//! finite-difference gradient checker.

mod gradcheck;
mod matrix;

pub use gradcheck::{grad_check, relative_error, GradCheckReport, FD_EPS, GRAD_TOLERANCE};
pub use matrix::{
    hadamard, layer_norm, layer_norm_backward, layer_norm_with_cache, matmul, sigmoid, sigmoid_scalar,
    transpose, LayerNormCache, Matrix, LAYER_NORM_EPS,
};
