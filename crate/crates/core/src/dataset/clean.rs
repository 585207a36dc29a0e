use serde::{Deserialize, Serialize};

use super::{DatasetError, RawRecord, SensorFrame};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub rows_in: usize,
    pub rows_out: usize,
    pub dropped_rows: Vec<usize>,
    pub normalized_cells: usize,
}

/// Drops every row with a null or malformed cell and builds frames.
///
/// When height columns are present the growth label is their mean; otherwise
/// the `GrowthAvg` cell is used as is.
pub fn clean(records: &[RawRecord]) -> Result<(Vec<SensorFrame>, CleaningReport), DatasetError> {
    let mut report = CleaningReport {
        rows_in: records.len(),
        ..Default::default()
    };
    let mut frames = Vec::with_capacity(records.len());
    for rec in records {
        report.normalized_cells += rec.normalized_cells;
        match to_frame(rec) {
            Some(f) => frames.push(f),
            None => {
                if !rec.malformed.is_empty() {
                    log::warn!("row {}: malformed {:?}, dropped", rec.row, rec.malformed);
                }
                report.dropped_rows.push(rec.row);
            }
        }
    }
    report.rows_out = frames.len();
    if frames.is_empty() {
        return Err(DatasetError::Empty {
            rows_in: report.rows_in,
        });
    }
    Ok((frames, report))
}

fn to_frame(rec: &RawRecord) -> Option<SensorFrame> {
    let timestamp = rec.timestamp?;
    let mut channels = [0.0; 6];
    for (dst, src) in channels.iter_mut().zip(rec.channels) {
        *dst = src?;
    }
    let heights: Vec<f64> = rec.heights.iter().copied().collect::<Option<_>>()?;
    let growth_avg = if heights.is_empty() {
        rec.growth?
    } else {
        heights.iter().sum::<f64>() / heights.len() as f64
    };
    Some(SensorFrame {
        timestamp,
        channels,
        heights,
        growth_avg,
    })
}
