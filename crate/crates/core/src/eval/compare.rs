use serde::{Deserialize, Serialize};

use super::{Metrics, ResourceReport};
use crate::models::ModelKind;

/// Row labels of the comparison table, top to bottom.
pub const ROW_LABELS: [&str; 9] = [
    "Parameters",
    "MSE",
    "MAE",
    "R2",
    "Execution Time",
    "CPU Usage",
    "RAM Usage",
    "Disk Read",
    "Disk Write",
];

const UNAVAILABLE: &str = "unavailable";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelColumn {
    pub model: ModelKind,
    pub parameters: usize,
    pub metrics: Metrics,
    pub resources: Option<ResourceReport>,
}

/// One column per model, in the order Linear Regression, LSTM, DNN.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub columns: Vec<ModelColumn>,
}

pub fn compare(mut columns: Vec<ModelColumn>) -> ComparisonTable {
    columns.sort_by_key(|c| ModelKind::ALL.iter().position(|k| *k == c.model));
    ComparisonTable { columns }
}

fn or_unavailable(v: Option<f64>, fmt: impl Fn(f64) -> String) -> String {
    v.map(fmt).unwrap_or_else(|| UNAVAILABLE.to_string())
}

impl ModelColumn {
    /// Text of one cell; every cell is either a value or `unavailable`.
    pub fn cell(&self, row: usize) -> String {
        let r = self.resources.as_ref();
        match row {
            0 => self.parameters.to_string(),
            1 => format!("{:.6}", self.metrics.mse),
            2 => format!("{:.6}", self.metrics.mae),
            3 => self
                .metrics
                .r2
                .map(|v| format!("{v:.4}"))
                .unwrap_or_else(|| "undefined".into()),
            4 => or_unavailable(r.map(|r| r.wall_seconds), |v| format!("{v:.3} s")),
            5 => or_unavailable(r.and_then(|r| r.cpu_percent), |v| format!("{v:.1} %")),
            6 => or_unavailable(r.and_then(|r| r.peak_ram_mb), |v| format!("{v:.2} MB")),
            7 => or_unavailable(r.and_then(|r| r.disk_read_mb), |v| format!("{v:.2} MB")),
            8 => or_unavailable(r.and_then(|r| r.disk_write_mb), |v| format!("{v:.2} MB")),
            _ => panic!("row {row} out of range"),
        }
    }
}

impl ComparisonTable {
    /// Aligned plain-text rendering.
    pub fn to_text(&self) -> String {
        let mut grid: Vec<Vec<String>> = vec![std::iter::once("Metric".to_string())
            .chain(self.columns.iter().map(|c| c.model.label().to_string()))
            .collect()];
        for (i, label) in ROW_LABELS.iter().enumerate() {
            grid.push(
                std::iter::once(label.to_string())
                    .chain(self.columns.iter().map(|c| c.cell(i)))
                    .collect(),
            );
        }
        let widths: Vec<usize> = (0..grid[0].len())
            .map(|j| grid.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (i, row) in grid.iter().enumerate() {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(j, (cell, w))| {
                    if j == 0 {
                        format!("{cell:<w$}")
                    } else {
                        format!("{cell:>w$}")
                    }
                })
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
            if i == 0 {
                out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
                out.push('\n');
            }
        }
        out
    }
}
