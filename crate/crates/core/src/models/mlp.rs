use serde::{Deserialize, Serialize};

use super::{dropout_mask, mse_and_grad, Dense, ParamSet};
use crate::numerics::{gemm_nt, gemm_tn, Activation, Matrix, Rng, ShapeError};

/// Fully connected regressor: ReLU hidden layers, linear scalar output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layers: Vec<Dense>,
    /// Inverted dropout rate applied after each hidden activation in training.
    #[serde(default)]
    pub dropout: f64,
}

/// Intermediate values kept from a training forward pass.
#[derive(Clone, Debug)]
pub struct MlpCache {
    /// Input to each layer (after activation and dropout for hidden ones).
    pub inputs: Vec<Matrix>,
    /// Pre-activations of the hidden layers.
    pub pre: Vec<Matrix>,
    pub masks: Vec<Option<Matrix>>,
    pub output: Vec<f64>,
}

impl MlpParams {
    /// `sizes` runs from the input width to the output width.
    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        Self {
            layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
            dropout: 0.0,
        }
    }

    pub fn glorot(sizes: &[usize], rng: &mut Rng) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        Self {
            layers: sizes.windows(2).map(|w| Dense::glorot(w[0], w[1], rng)).collect(),
            dropout: 0.0,
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].fan_in()];
        s.extend(self.layers.iter().map(Dense::fan_out));
        s
    }

    pub fn parameter_count(&self) -> usize {
        self.sizes().windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>, ShapeError> {
        Ok(self.forward(x, None)?.output)
    }

    /// Forward pass; `dropout` supplies the mask stream during training.
    pub fn forward(&self, x: &Matrix, mut dropout: Option<&mut Rng>) -> Result<MlpCache, ShapeError> {
        if x.cols() != self.layers[0].fan_in() {
            return Err(ShapeError::new(
                "mlp_forward",
                x.shape(),
                self.layers[0].weights.shape(),
            ));
        }
        let last = self.layers.len() - 1;
        let mut cache = MlpCache {
            inputs: vec![x.clone()],
            pre: Vec::with_capacity(last),
            masks: Vec::with_capacity(last),
            output: Vec::new(),
        };
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&cache.inputs[l]);
            if l == last {
                cache.output = z.into_data();
                break;
            }
            let mut a = z.map(|v| Activation::Relu.apply(v));
            let mask = match dropout.as_deref_mut() {
                Some(rng) if self.dropout > 0.0 => {
                    let m = dropout_mask(rng, a.rows(), a.cols(), self.dropout);
                    for (v, k) in a.data_mut().iter_mut().zip(m.data()) {
                        *v *= k;
                    }
                    Some(m)
                }
                _ => None,
            };
            cache.pre.push(z);
            cache.masks.push(mask);
            cache.inputs.push(a);
        }
        Ok(cache)
    }

    /// Gradients of every weight given `d_out`, the loss derivative with
    /// respect to each output.
    pub fn backward(&self, cache: &MlpCache, d_out: &[f64]) -> MlpParams {
        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        let mut dz = Matrix::new(d_out.len(), 1, d_out.to_vec()).expect("one output per row");
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let mut g = Dense::zeros(layer.fan_in(), layer.fan_out());
            gemm_tn(&cache.inputs[l], &dz, &mut g.weights);
            g.bias = dz.column_sums();
            if l > 0 {
                let mut da = Matrix::zeros(dz.rows(), layer.fan_in());
                gemm_nt(&dz, &layer.weights, &mut da);
                if let Some(mask) = &cache.masks[l - 1] {
                    for (v, k) in da.data_mut().iter_mut().zip(mask.data()) {
                        *v *= k;
                    }
                }
                for (v, z) in da.data_mut().iter_mut().zip(cache.pre[l - 1].data()) {
                    *v *= Activation::Relu.derivative(*z);
                }
                dz = da;
            }
            grads.push(g);
        }
        grads.reverse();
        MlpParams {
            layers: grads,
            dropout: self.dropout,
        }
    }

    /// Batch mean squared error and its gradient.
    pub fn loss_and_grad(
        &self,
        x: &Matrix,
        y: &[f64],
        dropout: Option<&mut Rng>,
    ) -> Result<(f64, MlpParams), ShapeError> {
        let cache = self.forward(x, dropout)?;
        let (loss, d_out) = mse_and_grad(&cache.output, y);
        Ok((loss, self.backward(&cache, &d_out)))
    }
}

impl ParamSet for MlpParams {
    fn tensors(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for (i, l) in self.layers.iter().enumerate() {
            out.push((format!("dense{i}.weights"), l.weights.data()));
            out.push((format!("dense{i}.bias"), &l.bias[..]));
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(2 * self.layers.len());
        for l in &mut self.layers {
            out.push(l.weights.data_mut());
            out.push(&mut l.bias[..]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loss_at(m: &MlpParams, flat: &[f64], x: &Matrix, y: &[f64]) -> f64 {
        let mut m = m.clone();
        m.assign(flat);
        mse_and_grad(&m.predict(x).unwrap(), y).0
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = Rng::new(21);
        let mlp = MlpParams::glorot(&[6, 4, 1], &mut rng);
        let rows: Vec<Vec<f64>> = (0..8).map(|_| rng.normal_vec(6, 0.0, 1.0)).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y = rng.normal_vec(8, 0.0, 1.0);
        let (_, grad) = mlp.loss_and_grad(&x, &y, None).unwrap();
        let analytic = grad.flatten();
        let base = mlp.flatten();

        let h = 1e-6;
        let mut checked = 0;
        for _ in 0..20 {
            let i = rng.below(base.len());
            let mut plus = base.clone();
            plus[i] += h;
            let mut minus = base.clone();
            minus[i] -= h;
            let numeric = (loss_at(&mlp, &plus, &x, &y) - loss_at(&mlp, &minus, &x, &y)) / (2.0 * h);
            let scale = analytic[i].abs().max(numeric.abs());
            if scale < 1e-8 {
                continue; // dead ReLU unit
            }
            assert!(
                (analytic[i] - numeric).abs() / scale < 1e-4,
                "param {i}: analytic {} numeric {numeric}",
                analytic[i]
            );
            checked += 1;
        }
        assert!(checked >= 10);
    }

    #[test]
    fn dropout_only_in_training() {
        let mut rng = Rng::new(5);
        let mut mlp = MlpParams::glorot(&[3, 16, 1], &mut rng);
        mlp.dropout = 0.5;
        let x = Matrix::from_rows(&[[0.5, -1.0, 2.0]]).unwrap();
        let a = mlp.predict(&x).unwrap();
        assert_eq!(a, mlp.predict(&x).unwrap());
        let c = mlp.forward(&x, Some(&mut rng)).unwrap();
        assert!(c.masks[0].as_ref().unwrap().data().iter().any(|&k| k == 0.0));
    }

    #[test]
    fn wrong_width_is_an_error() {
        let mlp = MlpParams::zeros(&[3, 2, 1]);
        assert!(mlp.predict(&Matrix::zeros(1, 4)).is_err());
    }
}
