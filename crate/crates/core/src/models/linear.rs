use serde::{Deserialize, Serialize};

use super::{ModelError, ParamSet};
use crate::numerics::{Matrix, ShapeError};

/// Ordinary least squares coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LRParams {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl LRParams {
    pub fn parameter_count(&self) -> usize {
        self.coefficients.len() + 1
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>, ShapeError> {
        if x.cols() != self.coefficients.len() {
            return Err(ShapeError::new("lr_predict", x.shape(), (self.coefficients.len(), 1)));
        }
        Ok((0..x.rows())
            .map(|r| self.intercept + x.row(r).iter().zip(&self.coefficients).map(|(a, b)| a * b).sum::<f64>())
            .collect())
    }
}

impl ParamSet for LRParams {
    fn tensors(&self) -> Vec<(String, &[f64])> {
        vec![
            ("coefficients".into(), &self.coefficients[..]),
            ("intercept".into(), std::slice::from_ref(&self.intercept)),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.coefficients[..], std::slice::from_mut(&mut self.intercept)]
    }
}

/// Least squares fit with an intercept.
///
/// Columns and targets are centered, the normal equations `XᵀX β = Xᵀy` are
/// solved by Gaussian elimination with partial pivoting, and the intercept is
/// `ȳ − β·x̄`. A constant or collinear column is reported by name.
pub fn lr_fit(x: &Matrix, y: &[f64], feature_names: &[String]) -> Result<LRParams, ModelError> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(ShapeError::new("lr_fit", x.shape(), (y.len(), 1)).into());
    }
    if n <= p {
        return Err(ModelError::Underdetermined {
            samples: n,
            features: p,
        });
    }
    let means: Vec<f64> = (0..p)
        .map(|j| (0..n).map(|r| x.get(r, j)).sum::<f64>() / n as f64)
        .collect();
    let y_mean = y.iter().sum::<f64>() / n as f64;

    let mut gram = vec![vec![0.0; p]; p];
    let mut rhs = vec![0.0; p];
    let mut centered = vec![0.0; p];
    for r in 0..n {
        for (c, (v, m)) in centered.iter_mut().zip(x.row(r).iter().zip(&means)) {
            *c = v - m;
        }
        let yc = y[r] - y_mean;
        for i in 0..p {
            rhs[i] += centered[i] * yc;
            for j in i..p {
                gram[i][j] += centered[i] * centered[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            gram[i][j] = gram[j][i];
        }
    }

    let name = |j: usize| feature_names.get(j).cloned().unwrap_or_else(|| format!("x{j}"));
    let beta = solve(gram, rhs).map_err(|j| ModelError::Singular { column: name(j) })?;
    let intercept = y_mean - beta.iter().zip(&means).map(|(b, m)| b * m).sum::<f64>();
    Ok(LRParams {
        coefficients: beta,
        intercept,
    })
}

/// Solves `a·x = b`; on failure returns the column whose pivot vanished.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>, usize> {
    let p = b.len();
    let diag: Vec<f64> = (0..p).map(|i| a[i][i]).collect();
    for col in 0..p {
        let pivot_row = (col..p)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty range");
        let pivot = a[pivot_row][col];
        if diag[col] <= 0.0 || pivot.abs() <= 1e-10 * diag[col] {
            return Err(col);
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for r in col + 1..p {
            let factor = a[r][col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for c in col..p {
                a[r][c] -= factor * a[col][c];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let tail: f64 = (i + 1..p).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - tail) / a[i][i];
    }
    Ok(x)
}
