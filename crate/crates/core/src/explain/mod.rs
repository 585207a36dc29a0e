//! Exact interventional Shapley attributions and mean-|SHAP| importance.

use serde::{Deserialize, Serialize};

use crate::numerics::{Matrix, Rng, ShapeError};
use crate::plot;

/// Largest player count accepted by [`shapley_exact`].
pub const MAX_PLAYERS: usize = 12;

/// Rows per batched model call while evaluating coalitions.
const BATCH_ROWS: usize = 8192;

#[derive(Debug, thiserror::Error)]
pub enum ExplainError {
    #[error("{k} features exceed the exact-enumeration limit of {MAX_PLAYERS}; explain a subset of features")]
    TooManyFeatures { k: usize },
    #[error("background set is empty")]
    EmptyBackground,
    #[error("no attributions to summarize")]
    NoAttributions,
    #[error(transparent)]
    Shape(#[from] ShapeError),
}

/// Attribution of one prediction to the players.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub sample: usize,
    pub base_value: f64,
    pub shap: Vec<f64>,
    pub prediction: f64,
}

impl Attribution {
    /// `|base + Σ shap − prediction|`.
    pub fn efficiency_gap(&self) -> f64 {
        (self.base_value + self.shap.iter().sum::<f64>() - self.prediction).abs()
    }
}

/// Players over flattened windows: feature `f` owns column `t·F + f` at
/// every step `t`. With one step this is one column per feature.
pub fn feature_groups(n_features: usize, window_len: usize) -> Vec<Vec<usize>> {
    (0..n_features)
        .map(|f| (0..window_len).map(|t| t * n_features + f).collect())
        .collect()
}

/// `min(n, rows.len())` distinct rows drawn with a seeded shuffle.
pub fn background_rows(rows: &[usize], n: usize, seed: u64) -> Vec<usize> {
    let mut pool = rows.to_vec();
    Rng::new(seed).shuffle(&mut pool);
    pool.truncate(n);
    pool
}

/// `s!(k−s−1)!/k!` for each coalition size `s < k`.
fn shapley_weights(k: usize) -> Vec<f64> {
    let fact: Vec<f64> = (0..=k)
        .scan(1.0, |acc, i| {
            if i > 0 {
                *acc *= i as f64;
            }
            Some(*acc)
        })
        .collect();
    (0..k).map(|s| fact[s] * fact[k - s - 1] / fact[k]).collect()
}

/// Exact Shapley values of `predict` at `x`.
///
/// The value of coalition `S` is the mean over background rows `b` of
/// `predict(x_S ⊕ b_S̄)`, where the players in `S` take their columns from
/// `x` and the rest from `b`. Every one of the `2ᵏ` coalitions is evaluated;
/// the base value is the empty coalition, i.e. the mean background
/// prediction.
pub fn shapley_exact<F>(
    predict: F,
    x: &[f64],
    background: &Matrix,
    groups: &[Vec<usize>],
) -> Result<Attribution, ExplainError>
where
    F: Fn(&Matrix) -> Result<Vec<f64>, ShapeError>,
{
    let k = groups.len();
    if k > MAX_PLAYERS {
        return Err(ExplainError::TooManyFeatures { k });
    }
    if background.rows() == 0 {
        return Err(ExplainError::EmptyBackground);
    }
    if x.len() != background.cols() {
        return Err(ShapeError::new("shapley_exact", (1, x.len()), background.shape()).into());
    }
    let n_bg = background.rows();
    let d = background.cols();
    let n_coalitions = 1usize << k;
    let per_call = (BATCH_ROWS / n_bg).max(1);

    let mut values = vec![0.0; n_coalitions];
    let mut mask = 0;
    while mask < n_coalitions {
        let end = (mask + per_call).min(n_coalitions);
        let mut data = Vec::with_capacity((end - mask) * n_bg * d);
        for m in mask..end {
            for r in 0..n_bg {
                let start = data.len();
                data.extend_from_slice(background.row(r));
                for (p, cols) in groups.iter().enumerate() {
                    if m & (1 << p) != 0 {
                        for &c in cols {
                            data[start + c] = x[c];
                        }
                    }
                }
            }
        }
        let batch = Matrix::new((end - mask) * n_bg, d, data)?;
        let preds = predict(&batch)?;
        for (m, chunk) in (mask..end).zip(preds.chunks(n_bg)) {
            values[m] = chunk.iter().sum::<f64>() / n_bg as f64;
        }
        mask = end;
    }

    let weights = shapley_weights(k);
    let shap = (0..k)
        .map(|p| {
            let bit = 1 << p;
            (0..n_coalitions)
                .filter(|m| m & bit == 0)
                .map(|m| weights[(m as u32).count_ones() as usize] * (values[m | bit] - values[m]))
                .sum()
        })
        .collect();
    let prediction = predict(&Matrix::new(1, d, x.to_vec())?)?[0];
    Ok(Attribution {
        sample: 0,
        base_value: values[0],
        shap,
        prediction,
    })
}

/// Attributions for several rows of `x`, tagged with their row index.
pub fn explain_rows<F>(
    predict: F,
    x: &Matrix,
    rows: &[usize],
    background: &Matrix,
    groups: &[Vec<usize>],
) -> Result<Vec<Attribution>, ExplainError>
where
    F: Fn(&Matrix) -> Result<Vec<f64>, ShapeError>,
{
    rows.iter()
        .map(|&r| {
            let mut a = shapley_exact(&predict, x.row(r), background, groups)?;
            a.sample = r;
            Ok(a)
        })
        .collect()
}

/// Mean |shap| per feature and the resulting ranking.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub features: Vec<String>,
    pub mean_abs_shap: Vec<f64>,
    /// Feature names, most important first; ties in name order.
    pub ranking: Vec<String>,
}

pub fn importance(attributions: &[Attribution], feature_names: &[String]) -> Result<ImportanceReport, ExplainError> {
    let first = attributions.first().ok_or(ExplainError::NoAttributions)?;
    let k = first.shap.len();
    if feature_names.len() != k || attributions.iter().any(|a| a.shap.len() != k) {
        return Err(ShapeError::new("importance", (attributions.len(), k), (1, feature_names.len())).into());
    }
    let n = attributions.len() as f64;
    let mean_abs_shap: Vec<f64> = (0..k)
        .map(|j| attributions.iter().map(|a| a.shap[j].abs()).sum::<f64>() / n)
        .collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        mean_abs_shap[b]
            .total_cmp(&mean_abs_shap[a])
            .then_with(|| feature_names[a].cmp(&feature_names[b]))
    });
    Ok(ImportanceReport {
        features: feature_names.to_vec(),
        mean_abs_shap,
        ranking: order.iter().map(|&j| feature_names[j].clone()).collect(),
    })
}

impl ImportanceReport {
    pub fn value(&self, feature: &str) -> Option<f64> {
        self.features
            .iter()
            .position(|f| f == feature)
            .map(|j| self.mean_abs_shap[j])
    }

    /// `feature,mean_abs_shap` rows in ranking order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,mean_abs_shap\n");
        for f in &self.ranking {
            out.push_str(&format!("{f},{}\n", self.value(f).unwrap_or(0.0)));
        }
        out
    }

    pub fn to_svg(&self, title: &str) -> String {
        let values: Vec<f64> = self.ranking.iter().map(|f| self.value(f).unwrap_or(0.0)).collect();
        plot::bar_chart(title, "mean |SHAP value| (cm)", &self.ranking, &values)
    }
}
