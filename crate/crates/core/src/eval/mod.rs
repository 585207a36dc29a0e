//! Accuracy metrics, prediction bands, resource profiling and the model
//! comparison table.

mod compare;
mod interval;
mod metrics;
mod profile;

use serde::{Deserialize, Serialize};

pub use compare::{compare, ComparisonTable, ModelColumn, ROW_LABELS};
pub use interval::{interval95, residual_std, IntervalMethod, MIN_RESIDUALS, Z95};
pub use metrics::{metrics, Metrics};
pub use profile::{process_cpu_seconds, profile, ResourceReport, Unavailable};

use crate::plot;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("need equal, non-zero lengths (actual {actual}, predicted {predicted})")]
    Length { actual: usize, predicted: usize },
    #[error("need at least {MIN_RESIDUALS} residuals for a prediction band, got {0}")]
    TooFewResiduals(usize),
}

/// One test sample behind the actual-vs-predicted chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub index: usize,
    pub actual_cm: f64,
    pub predicted_cm: f64,
    pub lower95: f64,
    pub upper95: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metrics: Metrics,
    pub n_test: usize,
    pub interval_method: IntervalMethod,
    /// Residual standard deviation (n − 1 denominator).
    pub residual_std: f64,
    #[serde(skip)]
    pub predictions: Vec<PredictionRow>,
}

/// Metrics and per-sample bands from held-out actuals and predictions.
pub fn evaluate(actual: &[f64], predicted: &[f64], method: IntervalMethod) -> Result<EvalReport, EvalError> {
    let m = metrics(actual, predicted)?;
    let residuals: Vec<f64> = actual.iter().zip(predicted).map(|(a, p)| a - p).collect();
    let bands = interval95(&residuals, predicted, method)?;
    let predictions = actual
        .iter()
        .zip(predicted)
        .zip(bands)
        .enumerate()
        .map(|(index, ((&a, &p), (lo, hi)))| PredictionRow {
            index,
            actual_cm: a,
            predicted_cm: p,
            lower95: lo,
            upper95: hi,
        })
        .collect();
    Ok(EvalReport {
        metrics: m,
        n_test: actual.len(),
        interval_method: method,
        residual_std: residual_std(&residuals),
        predictions,
    })
}

impl EvalReport {
    /// `index,actual_cm,predicted_cm,lower95,upper95` rows.
    pub fn predictions_csv(&self) -> String {
        let mut out = String::from("index,actual_cm,predicted_cm,lower95,upper95\n");
        for r in &self.predictions {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.index, r.actual_cm, r.predicted_cm, r.lower95, r.upper95
            ));
        }
        out
    }

    /// Actual and predicted growth with the shaded 95% band, for the first
    /// `limit` test samples.
    pub fn predictions_svg(&self, title: &str, limit: usize) -> String {
        let rows = &self.predictions[..self.predictions.len().min(limit)];
        let actual: Vec<f64> = rows.iter().map(|r| r.actual_cm).collect();
        let predicted: Vec<f64> = rows.iter().map(|r| r.predicted_cm).collect();
        let lower: Vec<f64> = rows.iter().map(|r| r.lower95).collect();
        let upper: Vec<f64> = rows.iter().map(|r| r.upper95).collect();
        plot::line_chart(
            title,
            "growth (cm)",
            &[
                plot::Series {
                    name: "actual",
                    values: &actual,
                    color: "#212121",
                    band: None,
                },
                plot::Series {
                    name: "predicted (95% band)",
                    values: &predicted,
                    color: "#e53935",
                    band: Some((&lower, &upper)),
                },
            ],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    #[test]
    fn bands_contain_predictions() {
        let mut rng = Rng::new(4);
        let actual: Vec<f64> = (0..50).map(|_| rng.normal(3.8, 0.2)).collect();
        let predicted: Vec<f64> = actual.iter().map(|a| a + rng.normal(0.0, 0.05)).collect();
        let r = evaluate(&actual, &predicted, IntervalMethod::Gaussian).unwrap();
        assert!(r
            .predictions
            .iter()
            .all(|p| p.lower95 <= p.predicted_cm && p.predicted_cm <= p.upper95));
        let csv = r.predictions_csv();
        assert_eq!(csv.lines().count(), 51);
        assert!(r.predictions_svg("t", 20).contains("<polygon"));
    }

    #[test]
    fn memorized_predictions_score_one() {
        let a: Vec<f64> = (0..12).map(|i| 3.0 + i as f64 * 0.1).collect();
        let r = evaluate(&a, &a, IntervalMethod::Gaussian).unwrap();
        assert_eq!(r.metrics.r2, Some(1.0));
        assert_eq!(r.residual_std, 0.0);
    }
}
