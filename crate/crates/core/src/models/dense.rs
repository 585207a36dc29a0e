use serde::{Deserialize, Serialize};

use crate::numerics::{gemm_nn, Matrix, Rng};

/// Affine layer `x·W + b` with `W` stored fan_in × fan_out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weights: Matrix::zeros(fan_in, fan_out),
            bias: vec![0.0; fan_out],
        }
    }

    /// Glorot-uniform weights, `U(−√(6/(fan_in+fan_out)), +…)`, zero bias.
    pub fn glorot(fan_in: usize, fan_out: usize, rng: &mut Rng) -> Self {
        let mut layer = Self::zeros(fan_in, fan_out);
        glorot_fill(layer.weights.data_mut(), fan_in, fan_out, rng);
        layer
    }

    pub fn fan_in(&self) -> usize {
        self.weights.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.cols()
    }

    pub fn parameter_count(&self) -> usize {
        (self.fan_in() + 1) * self.fan_out()
    }

    /// Caller guarantees `x.cols() == fan_in`.
    pub fn forward(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), self.fan_out());
        gemm_nn(x, &self.weights, &mut out);
        out.add_row_vector(&self.bias);
        out
    }
}

pub(crate) fn glorot_fill(values: &mut [f64], fan_in: usize, fan_out: usize, rng: &mut Rng) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in values {
        *v = rng.uniform(-limit, limit);
    }
}
