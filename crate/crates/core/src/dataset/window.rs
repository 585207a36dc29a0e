use super::DatasetError;
use crate::numerics::Matrix;

/// Contiguous sliding windows over chronologically ordered rows.
///
/// Each window is stored as one row of `windows`, time-major: the first
/// `n_features` columns are the oldest step.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceSet {
    pub windows: Matrix,
    pub targets: Vec<f64>,
    pub window_len: usize,
    pub n_features: usize,
    /// Source row of each window's final step (the row its target comes from).
    pub end_rows: Vec<usize>,
}

impl SequenceSet {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

pub fn window(x: &Matrix, y: &[f64], window_len: usize) -> Result<SequenceSet, DatasetError> {
    let n = x.rows();
    if window_len == 0 || window_len > n || y.len() != n {
        return Err(DatasetError::Window {
            window: window_len,
            rows: n,
        });
    }
    let f = x.cols();
    let n_seq = n - window_len + 1;
    let mut data = Vec::with_capacity(n_seq * window_len * f);
    for start in 0..n_seq {
        for r in start..start + window_len {
            data.extend_from_slice(x.row(r));
        }
    }
    let end_rows: Vec<usize> = (window_len - 1..n).collect();
    Ok(SequenceSet {
        windows: Matrix::new(n_seq, window_len * f, data)?,
        targets: end_rows.iter().map(|&r| y[r]).collect(),
        window_len,
        n_features: f,
        end_rows,
    })
}
