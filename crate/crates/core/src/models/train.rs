use serde::{Deserialize, Serialize};

use super::{lr_fit, mse_and_grad, LstmParams, MlpParams, ModelError, ModelKind, ModelParams, ParamSet};
use crate::numerics::{Activation, AdamConfig, AdamState, Matrix, Rng, ShapeError};

/// Architecture to fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Lr,
    Dnn {
        hidden: Vec<usize>,
        dropout: f64,
    },
    Lstm {
        hidden: Vec<usize>,
        window_len: usize,
        cell_activation: Activation,
        dropout: f64,
    },
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Lr => ModelKind::Lr,
            ModelSpec::Dnn { .. } => ModelKind::Dnn,
            ModelSpec::Lstm { .. } => ModelKind::Lstm,
        }
    }

    /// Reference architecture for each model kind.
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Lr => ModelSpec::Lr,
            ModelKind::Dnn => ModelSpec::Dnn {
                hidden: vec![300, 300, 150],
                dropout: 0.0,
            },
            ModelKind::Lstm => ModelSpec::Lstm {
                hidden: vec![100, 100],
                window_len: 1,
                cell_activation: Activation::Tanh,
                dropout: 0.3,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    /// Rescale the whole gradient when its Euclidean norm exceeds this.
    pub grad_clip: Option<f64>,
}

impl TrainConfig {
    pub fn default_for(kind: ModelKind) -> Self {
        let (epochs, grad_clip) = match kind {
            ModelKind::Lr => (1, None),
            ModelKind::Dnn => (50, None),
            ModelKind::Lstm => (300, Some(5.0)),
        };
        Self {
            epochs,
            batch_size: 32,
            seed: 7,
            adam: AdamConfig::default(),
            grad_clip,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub params: ModelParams,
    /// Mean training loss per epoch (a single entry for least squares).
    pub loss_curve: Vec<f64>,
}

/// Fits `spec` to `(x, y)`.
///
/// Gradient models draw initial weights from `Rng::new(seed)`, then fork one
/// stream for minibatch order and dropout masks, so a seed fixes every bit of
/// the result. For the LSTM each row of `x` is one flattened window.
pub fn train(
    spec: &ModelSpec,
    x: &Matrix,
    y: &[f64],
    feature_names: &[String],
    cfg: &TrainConfig,
) -> Result<TrainOutcome, ModelError> {
    if x.rows() != y.len() {
        return Err(ShapeError::new("train", x.shape(), (y.len(), 1)).into());
    }
    let mut rng = Rng::new(cfg.seed);
    match spec {
        ModelSpec::Lr => {
            let p = lr_fit(x, y, feature_names)?;
            let loss = mse_and_grad(&p.predict(x)?, y).0;
            Ok(TrainOutcome {
                params: ModelParams::Lr(p),
                loss_curve: vec![loss],
            })
        }
        ModelSpec::Dnn { hidden, dropout } => {
            check_dropout(*dropout)?;
            let mut sizes = vec![x.cols()];
            sizes.extend(hidden);
            sizes.push(1);
            let mut model = MlpParams::glorot(&sizes, &mut rng);
            model.dropout = *dropout;
            model.layers.last_mut().expect("output layer").bias[0] = mean(y);
            let curve = fit(&mut model, x, y, cfg, rng.fork(), |m, xb, yb, r| {
                let (loss, g) = m.loss_and_grad(xb, yb, r)?;
                Ok((loss, g.flatten()))
            })?;
            Ok(TrainOutcome {
                params: ModelParams::Dnn(model),
                loss_curve: curve,
            })
        }
        ModelSpec::Lstm {
            hidden,
            window_len,
            cell_activation,
            dropout,
        } => {
            check_dropout(*dropout)?;
            if *window_len == 0 || !x.cols().is_multiple_of(*window_len) {
                return Err(ModelError::InvalidConfig(format!(
                    "row width {} is not a multiple of window length {window_len}",
                    x.cols()
                )));
            }
            if hidden.is_empty() {
                return Err(ModelError::InvalidConfig("LSTM needs at least one layer".into()));
            }
            let mut model = LstmParams::init(x.cols() / window_len, *window_len, hidden, *cell_activation, &mut rng);
            model.dropout = *dropout;
            model.head.bias[0] = mean(y);
            let curve = fit(&mut model, x, y, cfg, rng.fork(), |m, xb, yb, r| {
                let (loss, g) = m.loss_and_grad(xb, yb, r)?;
                Ok((loss, g.flatten()))
            })?;
            Ok(TrainOutcome {
                params: ModelParams::Lstm(model),
                loss_curve: curve,
            })
        }
    }
}

/// Starting value for the output bias, so training begins at the mean
/// predictor instead of spending its first steps on the offset.
fn mean(y: &[f64]) -> f64 {
    if y.is_empty() {
        0.0
    } else {
        y.iter().sum::<f64>() / y.len() as f64
    }
}

fn check_dropout(rate: f64) -> Result<(), ModelError> {
    if (0.0..1.0).contains(&rate) {
        Ok(())
    } else {
        Err(ModelError::InvalidConfig(format!("dropout rate {rate} outside [0, 1)")))
    }
}

type LossGrad<M> = fn(&M, &Matrix, &[f64], Option<&mut Rng>) -> Result<(f64, Vec<f64>), ShapeError>;

/// Minibatch Adam over shuffled epochs.
fn fit<M: ParamSet>(
    model: &mut M,
    x: &Matrix,
    y: &[f64],
    cfg: &TrainConfig,
    mut rng: Rng,
    loss_grad: LossGrad<M>,
) -> Result<Vec<f64>, ModelError> {
    if cfg.epochs == 0 {
        return Err(ModelError::InvalidConfig("epochs must be positive".into()));
    }
    if cfg.batch_size == 0 {
        return Err(ModelError::InvalidConfig("batch size must be positive".into()));
    }
    if x.rows() == 0 {
        return Err(ModelError::InvalidConfig("no training rows".into()));
    }
    if !(cfg.adam.beta1 > 0.0 && cfg.adam.beta1 < 1.0 && cfg.adam.beta2 > 0.0 && cfg.adam.beta2 < 1.0) {
        return Err(ModelError::InvalidConfig("Adam betas must lie in (0, 1)".into()));
    }
    let mut flat = model.flatten();
    let mut adam = AdamState::new(flat.len(), cfg.adam);
    let mut order: Vec<usize> = (0..x.rows()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let xb = x.select_rows(batch)?;
            let yb: Vec<f64> = batch.iter().map(|&i| y[i]).collect();
            let (loss, mut grad) = loss_grad(model, &xb, &yb, Some(&mut rng))?;
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if !loss.is_finite() || !norm.is_finite() {
                return Err(ModelError::Diverged {
                    epoch,
                    lr: cfg.adam.lr,
                    grad_norm: norm,
                });
            }
            if let Some(clip) = cfg.grad_clip {
                if norm > clip {
                    let s = clip / norm;
                    grad.iter_mut().for_each(|g| *g *= s);
                }
            }
            adam.step(&mut flat, &grad)?;
            model.assign(&flat);
            total += loss * batch.len() as f64;
        }
        let mean = total / x.rows() as f64;
        log::debug!("epoch {epoch}: loss {mean:.6}");
        curve.push(mean);
    }
    Ok(curve)
}
