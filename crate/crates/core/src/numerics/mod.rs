//! Deterministic numeric kernels shared by every model.

mod activation;
mod adam;
mod matrix;
mod rng;

pub use activation::{sigmoid, Activation};
pub use adam::{AdamConfig, AdamState};
pub(crate) use matrix::{gemm_nn, gemm_nt, gemm_tn};
pub use matrix::{matmul, Matrix};
pub use rng::{rng_normal, Rng};

/// Dimension mismatch between two operands.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("shape mismatch in {op}: {left:?} vs {right:?}")]
pub struct ShapeError {
    pub op: &'static str,
    pub left: (usize, usize),
    pub right: (usize, usize),
}

impl ShapeError {
    pub fn new(op: &'static str, left: (usize, usize), right: (usize, usize)) -> Self {
        Self { op, left, right }
    }
}
