use serde::{Deserialize, Serialize};

use super::EvalError;

/// Accuracy of a set of predictions. `r2` is `None` when the actuals are
/// constant, so the ratio is undefined.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub mae: f64,
    pub r2: Option<f64>,
}

pub fn metrics(actual: &[f64], predicted: &[f64]) -> Result<Metrics, EvalError> {
    if actual.is_empty() || actual.len() != predicted.len() {
        return Err(EvalError::Length {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    let n = actual.len() as f64;
    let mean = actual.iter().sum::<f64>() / n;
    let (mut ss_res, mut abs, mut ss_tot) = (0.0, 0.0, 0.0);
    for (a, p) in actual.iter().zip(predicted) {
        let e = a - p;
        ss_res += e * e;
        abs += e.abs();
        ss_tot += (a - mean) * (a - mean);
    }
    Ok(Metrics {
        mse: ss_res / n,
        mae: abs / n,
        r2: (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_computed_example() {
        let m = metrics(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!((m.mse - 1.0 / 3.0).abs() < 1e-12);
        assert!((m.mae - 1.0 / 3.0).abs() < 1e-12);
        assert!((m.r2.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn perfect_and_mean_predictors() {
        let a = [2.0, 4.0, 9.0];
        assert_eq!(
            metrics(&a, &a).unwrap(),
            Metrics {
                mse: 0.0,
                mae: 0.0,
                r2: Some(1.0)
            }
        );
        assert_eq!(metrics(&a, &[5.0; 3]).unwrap().r2, Some(0.0));
    }

    #[test]
    fn constant_actuals_leave_r2_undefined() {
        let m = metrics(&[3.0; 4], &[3.0, 3.1, 2.9, 3.0]).unwrap();
        assert_eq!(m.r2, None);
        assert_eq!(serde_json::to_value(m).unwrap()["r2"], serde_json::Value::Null);
    }

    #[test]
    fn length_errors() {
        assert!(metrics(&[], &[]).is_err());
        assert!(metrics(&[1.0], &[1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn mae_bounded_by_root_mse(pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..50)) {
            let (a, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let m = metrics(&a, &p).unwrap();
            prop_assert!(m.mae <= m.mse.sqrt() * (1.0 + 1e-12) + 1e-12);
            if let Some(r2) = m.r2 {
                prop_assert!(r2 <= 1.0);
                prop_assert_eq!(r2 == 1.0, a == p);
            }
        }
    }
}
