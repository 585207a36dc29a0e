use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::numerics::Rng;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    /// Seeded permutation; the first `|test|` indices form the test set.
    #[default]
    Shuffled,
    /// The last `|test|` rows, in time order.
    Chronological,
}

impl std::str::FromStr for SplitMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "shuffled" => Ok(SplitMode::Shuffled),
            "chronological" => Ok(SplitMode::Chronological),
            other => Err(format!("unknown split mode `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Partitions `0..n` with `|test| = ceil(n · test_ratio)`.
pub fn split(n: usize, test_ratio: f64, seed: u64, mode: SplitMode) -> Result<Split, DatasetError> {
    if !(test_ratio > 0.0 && test_ratio < 1.0) {
        return Err(DatasetError::Split(format!("test ratio {test_ratio} outside (0, 1)")));
    }
    let n_test = (n as f64 * test_ratio).ceil() as usize;
    if n < 2 || n_test == 0 || n_test >= n {
        return Err(DatasetError::Split(format!(
            "{n} rows cannot give non-empty train and test sets at ratio {test_ratio}"
        )));
    }
    let order: Vec<usize> = match mode {
        SplitMode::Shuffled => {
            let mut idx: Vec<usize> = (0..n).collect();
            Rng::new(seed).shuffle(&mut idx);
            idx
        }
        // Test first so the shared slicing below takes the tail.
        SplitMode::Chronological => ((n - n_test)..n).chain(0..(n - n_test)).collect(),
    };
    Ok(Split {
        test: order[..n_test].to_vec(),
        train: order[n_test..].to_vec(),
    })
}
