//! The three growth regressors: least squares, a ReLU perceptron and a
//! stacked LSTM, all trained with hand-derived gradients.

mod checkpoint;
mod dense;
mod linear;
mod lstm;
mod mlp;
mod train;

use serde::{Deserialize, Serialize};

pub use checkpoint::{Checkpoint, CheckpointError, CHECKPOINT_VERSION};
pub use dense::Dense;
pub use linear::{lr_fit, LRParams};
pub use lstm::{LstmCache, LstmLayer, LstmParams};
pub use mlp::{MlpCache, MlpParams};
pub use train::{train, ModelSpec, TrainConfig, TrainOutcome};

use crate::numerics::{Matrix, ShapeError};

/// Named weight arrays, walked in a fixed order.
pub trait ParamSet {
    fn tensors(&self) -> Vec<(String, &[f64])>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    /// Number of scalars found by walking every array.
    fn walk_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.walk_count());
        for (_, t) in self.tensors() {
            out.extend_from_slice(t);
        }
        out
    }

    /// Overwrites every array from a flat vector in walk order.
    fn assign(&mut self, flat: &[f64]) {
        let mut offset = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        debug_assert_eq!(offset, flat.len());
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lr,
    Lstm,
    Dnn,
}

impl ModelKind {
    /// Column order of the comparison table.
    pub const ALL: [ModelKind; 3] = [ModelKind::Lr, ModelKind::Lstm, ModelKind::Dnn];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lr => "lr",
            ModelKind::Lstm => "lstm",
            ModelKind::Dnn => "dnn",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Lr => "Linear Regression",
            ModelKind::Lstm => "LSTM",
            ModelKind::Dnn => "DNN",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lr" => Ok(ModelKind::Lr),
            "lstm" => Ok(ModelKind::Lstm),
            "dnn" | "mlp" => Ok(ModelKind::Dnn),
            other => Err(format!("unknown model `{other}` (expected lr, dnn or lstm)")),
        }
    }
}

/// Trained parameters of any of the three models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelParams {
    Lr(LRParams),
    Dnn(MlpParams),
    Lstm(LstmParams),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Lr(_) => ModelKind::Lr,
            ModelParams::Dnn(_) => ModelKind::Dnn,
            ModelParams::Lstm(_) => ModelKind::Lstm,
        }
    }

    /// Closed-form count from the architecture.
    pub fn parameter_count(&self) -> usize {
        match self {
            ModelParams::Lr(p) => p.parameter_count(),
            ModelParams::Dnn(p) => p.parameter_count(),
            ModelParams::Lstm(p) => p.parameter_count(),
        }
    }

    /// Number of input columns a prediction row must have.
    pub fn input_width(&self) -> usize {
        match self {
            ModelParams::Lr(p) => p.coefficients.len(),
            ModelParams::Dnn(p) => p.sizes()[0],
            ModelParams::Lstm(p) => p.n_features * p.window_len,
        }
    }

    /// One prediction per row of `x` (windows flattened for the LSTM).
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>, ShapeError> {
        match self {
            ModelParams::Lr(p) => p.predict(x),
            ModelParams::Dnn(p) => p.predict(x),
            ModelParams::Lstm(p) => p.predict(x),
        }
    }

    pub fn as_param_set(&self) -> &dyn ParamSet {
        match self {
            ModelParams::Lr(p) => p,
            ModelParams::Dnn(p) => p,
            ModelParams::Lstm(p) => p,
        }
    }
}

/// `parameter_count` for any trained model.
pub fn parameter_count(params: &ModelParams) -> usize {
    params.parameter_count()
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("normal equations are singular: column `{column}` is constant or collinear")]
    Singular { column: String },
    #[error("need more samples ({samples}) than features ({features})")]
    Underdetermined { samples: usize, features: usize },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("training diverged at epoch {epoch} (lr {lr}, gradient norm {grad_norm})")]
    Diverged { epoch: usize, lr: f64, grad_norm: f64 },
}

/// Mean squared error of a batch and its derivative with respect to each
/// prediction.
pub(crate) fn mse_and_grad(pred: &[f64], y: &[f64]) -> (f64, Vec<f64>) {
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let grad = pred
        .iter()
        .zip(y)
        .map(|(p, t)| {
            let e = p - t;
            loss += e * e;
            2.0 * e / n
        })
        .collect();
    (loss / n, grad)
}

/// Inverted dropout mask: each entry is 0 with probability `rate`, else
/// `1 / (1 − rate)`.
pub(crate) fn dropout_mask(rng: &mut crate::numerics::Rng, rows: usize, cols: usize, rate: f64) -> Matrix {
    let keep = 1.0 / (1.0 - rate);
    let mut m = Matrix::zeros(rows, cols);
    for v in m.data_mut() {
        *v = if rng.next_f64() < rate { 0.0 } else { keep };
    }
    m
}
