use serde::{Deserialize, Serialize};

use super::EvalError;

/// Minimum number of held-out residuals for a prediction band.
pub const MIN_RESIDUALS: usize = 10;

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.96;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalMethod {
    /// `ŷ ± 1.96·σ̂`, with σ̂ the sample standard deviation of the residuals.
    #[default]
    Gaussian,
    /// `ŷ + [q₂.₅, q₉₇.₅]` of the empirical residuals, widened to include ŷ.
    Quantile,
}

impl std::str::FromStr for IntervalMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gaussian" => Ok(IntervalMethod::Gaussian),
            "quantile" => Ok(IntervalMethod::Quantile),
            other => Err(format!(
                "unknown interval method `{other}` (expected gaussian or quantile)"
            )),
        }
    }
}

/// Sample standard deviation (n − 1 denominator).
pub fn residual_std(residuals: &[f64]) -> f64 {
    let n = residuals.len() as f64;
    let mean = residuals.iter().sum::<f64>() / n;
    (residuals.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// 95% prediction band around each prediction; residuals are `actual − predicted`.
pub fn interval95(
    residuals: &[f64],
    predictions: &[f64],
    method: IntervalMethod,
) -> Result<Vec<(f64, f64)>, EvalError> {
    if residuals.len() < MIN_RESIDUALS {
        return Err(EvalError::TooFewResiduals(residuals.len()));
    }
    let (below, above) = match method {
        IntervalMethod::Gaussian => {
            let half = Z95 * residual_std(residuals);
            (half, half)
        }
        IntervalMethod::Quantile => {
            let mut sorted = residuals.to_vec();
            sorted.sort_by(f64::total_cmp);
            ((-quantile(&sorted, 0.025)).max(0.0), quantile(&sorted, 0.975).max(0.0))
        }
    };
    Ok(predictions.iter().map(|p| (p - below, p + above)).collect())
}
