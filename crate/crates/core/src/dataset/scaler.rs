use serde::{Deserialize, Serialize};

use crate::numerics::{Matrix, ShapeError};

/// Per-feature centering and scaling statistics (population std).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalerStats {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl ScalerStats {
    /// Fits on the listed rows only.
    pub fn fit(x: &Matrix, rows: &[usize]) -> ScalerStats {
        let cols = x.cols();
        let n = rows.len() as f64;
        let mut means = vec![0.0; cols];
        for &r in rows {
            for (m, v) in means.iter_mut().zip(x.row(r)) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut vars = vec![0.0; cols];
        for &r in rows {
            for ((s, v), m) in vars.iter_mut().zip(x.row(r)).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        let stds = vars.into_iter().map(|s| (s / n).sqrt()).collect();
        ScalerStats { means, stds }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    fn check(&self, x: &Matrix, op: &'static str) -> Result<(), ShapeError> {
        if x.cols() != self.dim() {
            return Err(ShapeError::new(op, x.shape(), (1, self.dim())));
        }
        Ok(())
    }

    /// `(x − mean) / std`; zero-variance columns become zeros.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix, ShapeError> {
        self.check(x, "standardize_apply")?;
        let mut out = x.clone();
        for r in 0..out.rows() {
            for ((v, m), s) in out.row_mut(r).iter_mut().zip(&self.means).zip(&self.stds) {
                *v = if *s > 0.0 { (*v - m) / s } else { 0.0 };
            }
        }
        Ok(out)
    }

    /// Inverse of [`apply`](Self::apply). Constant columns map back to their mean.
    pub fn inverse(&self, x: &Matrix) -> Result<Matrix, ShapeError> {
        self.check(x, "standardize_inverse")?;
        let mut out = x.clone();
        for r in 0..out.rows() {
            for ((v, m), s) in out.row_mut(r).iter_mut().zip(&self.means).zip(&self.stds) {
                *v = if *s > 0.0 { *v * s + m } else { *m };
            }
        }
        Ok(out)
    }
}
