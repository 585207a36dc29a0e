//! Stacked LSTM over fixed-length windows with a dense head on the last
//! hidden state.
//!
//! Gate blocks along the `4H` axis are ordered input, forget, cell, output:
//!
//! ```text
//! z = xₜ·W + hₜ₋₁·U + b
//! i = σ(z_i)  f = σ(z_f)  g = φ(z_g)  o = σ(z_o)
//! cₜ = f⊙cₜ₋₁ + i⊙g       hₜ = o⊙φ(cₜ)
//! ```
//!
//! with `h₀ = c₀ = 0`, so the recurrent product is skipped at the first step.

use serde::{Deserialize, Serialize};

use super::dense::glorot_fill;
use super::{dropout_mask, mse_and_grad, Dense, ParamSet};
use crate::numerics::{gemm_nn, gemm_nt, gemm_tn, sigmoid, Activation, Matrix, Rng, ShapeError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LstmLayer {
    /// input width × 4H
    pub w_input: Matrix,
    /// H × 4H
    pub w_recurrent: Matrix,
    pub bias: Vec<f64>,
}

impl LstmLayer {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w_input: Matrix::zeros(input, 4 * hidden),
            w_recurrent: Matrix::zeros(hidden, 4 * hidden),
            bias: vec![0.0; 4 * hidden],
        }
    }

    /// Glorot-uniform weights, forget-gate bias 1, other biases 0.
    pub fn init(input: usize, hidden: usize, rng: &mut Rng) -> Self {
        let mut l = Self::zeros(input, hidden);
        glorot_fill(l.w_input.data_mut(), input, 4 * hidden, rng);
        glorot_fill(l.w_recurrent.data_mut(), hidden, 4 * hidden, rng);
        for b in &mut l.bias[hidden..2 * hidden] {
            *b = 1.0;
        }
        l
    }

    pub fn input_width(&self) -> usize {
        self.w_input.rows()
    }

    pub fn hidden(&self) -> usize {
        self.w_recurrent.rows()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub n_features: usize,
    pub window_len: usize,
    pub layers: Vec<LstmLayer>,
    pub head: Dense,
    pub cell_activation: Activation,
    /// Inverted dropout rate on each layer's outputs during training.
    #[serde(default)]
    pub dropout: f64,
}

#[derive(Clone, Debug)]
struct StepCache {
    h_prev: Matrix,
    c_prev: Matrix,
    /// Activated gates, B × 4H.
    gates: Matrix,
    /// φ(cₜ)
    phi_c: Matrix,
}

#[derive(Clone, Debug)]
struct LayerCache {
    inputs: Vec<Matrix>,
    steps: Vec<StepCache>,
    masks: Option<Vec<Matrix>>,
}

/// Intermediate values kept from a training forward pass.
#[derive(Clone, Debug)]
pub struct LstmCache {
    layers: Vec<LayerCache>,
    last_hidden: Matrix,
    pub output: Vec<f64>,
}

/// Derivative of an activation written in terms of its output.
fn derivative_from_output(act: Activation, y: f64) -> f64 {
    match act {
        Activation::Sigmoid => y * (1.0 - y),
        Activation::Tanh => 1.0 - y * y,
        Activation::Relu => {
            if y > 0.0 {
                1.0
            } else {
                0.0
            }
        }
    }
}

impl LstmParams {
    pub fn zeros(n_features: usize, window_len: usize, hidden: &[usize], cell_activation: Activation) -> Self {
        let mut width = n_features;
        let layers = hidden
            .iter()
            .map(|&h| {
                let l = LstmLayer::zeros(width, h);
                width = h;
                l
            })
            .collect();
        Self {
            n_features,
            window_len,
            layers,
            head: Dense::zeros(width, 1),
            cell_activation,
            dropout: 0.0,
        }
    }

    pub fn init(
        n_features: usize,
        window_len: usize,
        hidden: &[usize],
        cell_activation: Activation,
        rng: &mut Rng,
    ) -> Self {
        let mut width = n_features;
        let layers = hidden
            .iter()
            .map(|&h| {
                let l = LstmLayer::init(width, h, rng);
                width = h;
                l
            })
            .collect();
        Self {
            n_features,
            window_len,
            layers,
            head: Dense::glorot(width, 1, rng),
            cell_activation,
            dropout: 0.0,
        }
    }

    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.layers.iter().map(LstmLayer::hidden).collect()
    }

    /// `Σ 4·(in + H + 1)·H` over layers plus the `(H + 1)` head.
    pub fn parameter_count(&self) -> usize {
        let mut width = self.n_features;
        let mut total = 0;
        for h in self.hidden_sizes() {
            total += 4 * (width + h + 1) * h;
            width = h;
        }
        total + width + 1
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>, ShapeError> {
        Ok(self.forward(x, None)?.output)
    }

    /// `x` holds one flattened window per row, time-major.
    pub fn forward(&self, x: &Matrix, mut dropout: Option<&mut Rng>) -> Result<LstmCache, ShapeError> {
        let (f, w) = (self.n_features, self.window_len);
        if x.cols() != f * w {
            return Err(ShapeError::new("lstm_forward", x.shape(), (w, f)));
        }
        let b = x.rows();
        let act = self.cell_activation;
        let mut seq: Vec<Matrix> = (0..w).map(|t| x.column_block(t * f, f)).collect();
        let mut caches = Vec::with_capacity(self.layers.len());

        for layer in &self.layers {
            let hd = layer.hidden();
            let mut h = Matrix::zeros(b, hd);
            let mut c = Matrix::zeros(b, hd);
            let mut steps = Vec::with_capacity(w);
            let mut outs = Vec::with_capacity(w);
            for (t, xt) in seq.iter().enumerate() {
                let mut gates = Matrix::zeros(b, 4 * hd);
                gemm_nn(xt, &layer.w_input, &mut gates);
                if t > 0 {
                    gemm_nn(&h, &layer.w_recurrent, &mut gates);
                }
                gates.add_row_vector(&layer.bias);
                let mut c_new = Matrix::zeros(b, hd);
                let mut phi_c = Matrix::zeros(b, hd);
                let mut h_new = Matrix::zeros(b, hd);
                for r in 0..b {
                    let g = gates.row_mut(r);
                    for j in 0..hd {
                        g[j] = sigmoid(g[j]);
                        g[hd + j] = sigmoid(g[hd + j]);
                        g[2 * hd + j] = act.apply(g[2 * hd + j]);
                        g[3 * hd + j] = sigmoid(g[3 * hd + j]);
                    }
                    let (cp, cn, pc, hn) = (c.row(r), c_new.row_mut(r), phi_c.row_mut(r), h_new.row_mut(r));
                    for j in 0..hd {
                        cn[j] = g[hd + j] * cp[j] + g[j] * g[2 * hd + j];
                        pc[j] = act.apply(cn[j]);
                        hn[j] = g[3 * hd + j] * pc[j];
                    }
                }
                steps.push(StepCache {
                    h_prev: h,
                    c_prev: c,
                    gates,
                    phi_c,
                });
                outs.push(h_new.clone());
                h = h_new;
                c = c_new;
            }
            let masks = match dropout.as_deref_mut() {
                Some(rng) if self.dropout > 0.0 => {
                    let masks: Vec<Matrix> = (0..w).map(|_| dropout_mask(rng, b, hd, self.dropout)).collect();
                    for (o, m) in outs.iter_mut().zip(&masks) {
                        for (v, k) in o.data_mut().iter_mut().zip(m.data()) {
                            *v *= k;
                        }
                    }
                    Some(masks)
                }
                _ => None,
            };
            caches.push(LayerCache {
                inputs: std::mem::replace(&mut seq, outs),
                steps,
                masks,
            });
        }
        let last_hidden = seq.pop().expect("window length is positive");
        let output = self.head.forward(&last_hidden).into_data();
        Ok(LstmCache {
            layers: caches,
            last_hidden,
            output,
        })
    }

    /// Backpropagation through time from `d_out`, the loss derivative with
    /// respect to each prediction.
    pub fn backward(&self, cache: &LstmCache, d_out: &[f64]) -> LstmParams {
        let b = d_out.len();
        let act = self.cell_activation;
        let d_pred = Matrix::new(b, 1, d_out.to_vec()).expect("one output per row");
        let mut grads = LstmParams::zeros(self.n_features, self.window_len, &self.hidden_sizes(), act);
        grads.dropout = self.dropout;
        gemm_tn(&cache.last_hidden, &d_pred, &mut grads.head.weights);
        grads.head.bias = d_pred.column_sums();

        let top = self.layers.last().expect("at least one layer").hidden();
        let mut d_seq: Vec<Matrix> = (0..self.window_len).map(|_| Matrix::zeros(b, top)).collect();
        gemm_nt(&d_pred, &self.head.weights, &mut d_seq[self.window_len - 1]);

        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let lc = &cache.layers[l];
            let g = &mut grads.layers[l];
            let hd = layer.hidden();
            if let Some(masks) = &lc.masks {
                for (d, m) in d_seq.iter_mut().zip(masks) {
                    for (v, k) in d.data_mut().iter_mut().zip(m.data()) {
                        *v *= k;
                    }
                }
            }
            let mut dh_next = Matrix::zeros(b, hd);
            let mut dc_next = Matrix::zeros(b, hd);
            let mut d_in: Vec<Matrix> = if l > 0 {
                (0..self.window_len)
                    .map(|_| Matrix::zeros(b, layer.input_width()))
                    .collect()
            } else {
                Vec::new()
            };
            for t in (0..self.window_len).rev() {
                let st = &lc.steps[t];
                let mut dz = Matrix::zeros(b, 4 * hd);
                for r in 0..b {
                    let gt = st.gates.row(r);
                    let (pc, cp, dh_in, dhn) = (st.phi_c.row(r), st.c_prev.row(r), d_seq[t].row(r), dh_next.row(r));
                    let dcn = dc_next.row_mut(r);
                    let dzr = dz.row_mut(r);
                    for j in 0..hd {
                        let (i, f, gg, o) = (gt[j], gt[hd + j], gt[2 * hd + j], gt[3 * hd + j]);
                        let dh = dh_in[j] + dhn[j];
                        let dc = dh * o * derivative_from_output(act, pc[j]) + dcn[j];
                        dzr[j] = dc * gg * i * (1.0 - i);
                        dzr[hd + j] = dc * cp[j] * f * (1.0 - f);
                        dzr[2 * hd + j] = dc * i * derivative_from_output(act, gg);
                        dzr[3 * hd + j] = dh * pc[j] * o * (1.0 - o);
                        dcn[j] = dc * f;
                    }
                }
                gemm_tn(&lc.inputs[t], &dz, &mut g.w_input);
                for (acc, v) in g.bias.iter_mut().zip(dz.column_sums()) {
                    *acc += v;
                }
                dh_next = Matrix::zeros(b, hd);
                if t > 0 {
                    gemm_tn(&st.h_prev, &dz, &mut g.w_recurrent);
                    gemm_nt(&dz, &layer.w_recurrent, &mut dh_next);
                }
                if l > 0 {
                    gemm_nt(&dz, &layer.w_input, &mut d_in[t]);
                }
            }
            d_seq = d_in;
        }
        grads
    }

    pub fn loss_and_grad(
        &self,
        x: &Matrix,
        y: &[f64],
        dropout: Option<&mut Rng>,
    ) -> Result<(f64, LstmParams), ShapeError> {
        let cache = self.forward(x, dropout)?;
        let (loss, d_out) = mse_and_grad(&cache.output, y);
        Ok((loss, self.backward(&cache, &d_out)))
    }
}

impl ParamSet for LstmParams {
    fn tensors(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::with_capacity(3 * self.layers.len() + 2);
        for (i, l) in self.layers.iter().enumerate() {
            out.push((format!("lstm{i}.w_input"), l.w_input.data()));
            out.push((format!("lstm{i}.w_recurrent"), l.w_recurrent.data()));
            out.push((format!("lstm{i}.bias"), &l.bias[..]));
        }
        out.push(("head.weights".into(), self.head.weights.data()));
        out.push(("head.bias".into(), &self.head.bias[..]));
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(3 * self.layers.len() + 2);
        for l in &mut self.layers {
            out.push(l.w_input.data_mut());
            out.push(l.w_recurrent.data_mut());
            out.push(&mut l.bias[..]);
        }
        out.push(self.head.weights.data_mut());
        out.push(&mut self.head.bias[..]);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_gradient(act: Activation, hidden: &[usize], seed: u64) {
        let mut rng = Rng::new(seed);
        let (f, w, b) = (3, 2, 5);
        let lstm = LstmParams::init(f, w, hidden, act, &mut rng);
        let rows: Vec<Vec<f64>> = (0..b).map(|_| rng.normal_vec(f * w, 0.0, 1.0)).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y = rng.normal_vec(b, 0.0, 1.0);
        let (_, grad) = lstm.loss_and_grad(&x, &y, None).unwrap();
        let analytic = grad.flatten();
        let base = lstm.flatten();
        let loss_at = |flat: &[f64]| {
            let mut m = lstm.clone();
            m.assign(flat);
            mse_and_grad(&m.predict(&x).unwrap(), &y).0
        };

        let h = 1e-6;
        let mut checked = 0;
        for _ in 0..20 {
            let i = rng.below(base.len());
            let mut plus = base.clone();
            plus[i] += h;
            let mut minus = base.clone();
            minus[i] -= h;
            let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
            let scale = analytic[i].abs().max(numeric.abs());
            if scale < 1e-8 {
                continue;
            }
            assert!(
                (analytic[i] - numeric).abs() / scale < 1e-5,
                "param {i}: analytic {} numeric {numeric}",
                analytic[i]
            );
            checked += 1;
        }
        assert!(checked >= 10);
    }

    #[test]
    fn gradient_matches_central_differences() {
        check_gradient(Activation::Tanh, &[4], 31);
    }

    #[test]
    fn stacked_gradient_matches_central_differences() {
        check_gradient(Activation::Tanh, &[4, 3], 32);
    }

    #[test]
    fn relu_cell_gradient_matches_central_differences() {
        check_gradient(Activation::Relu, &[4], 33);
    }

    #[test]
    fn forget_bias_starts_at_one() {
        let l = LstmLayer::init(2, 3, &mut Rng::new(1));
        assert_eq!(&l.bias[3..6], &[1.0; 3]);
        assert!(l.bias[..3].iter().chain(&l.bias[6..]).all(|&b| b == 0.0));
    }

    #[test]
    fn single_step_matches_hand_computation() {
        let mut p = LstmParams::zeros(1, 1, &[1], Activation::Tanh);
        p.layers[0].w_input = Matrix::from_rows(&[[0.5, -0.3, 0.8, 0.2]]).unwrap();
        p.head.weights = Matrix::from_rows(&[[2.0]]).unwrap();
        p.head.bias = vec![0.1];
        let x = 1.5;
        let i = sigmoid(0.5 * x);
        let g = (0.8 * x).tanh();
        let o = sigmoid(0.2 * x);
        let h = o * (i * g).tanh();
        let got = p.predict(&Matrix::from_rows(&[[x]]).unwrap()).unwrap();
        assert!((got[0] - (2.0 * h + 0.1)).abs() < 1e-15);
    }

    #[test]
    fn rejects_wrong_window_width() {
        let p = LstmParams::zeros(2, 3, &[2], Activation::Tanh);
        assert!(p.predict(&Matrix::zeros(1, 5)).is_err());
    }
}
