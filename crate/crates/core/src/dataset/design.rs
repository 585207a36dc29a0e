use chrono::{Datelike, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use super::{Channel, DatasetError, ScalerStats, SensorFrame, Split};
use crate::numerics::Matrix;

/// Which columns a model sees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    /// The six environment channels.
    Sensors,
    /// The six channels followed by year, month, day and hour.
    SensorsWithTime,
}

impl FeatureSet {
    pub fn names(self) -> Vec<String> {
        let mut names: Vec<String> = Channel::ALL.iter().map(|c| c.header().to_string()).collect();
        if self == FeatureSet::SensorsWithTime {
            names.extend(["Year", "Month", "Day", "Hour"].map(String::from));
        }
        names
    }

    pub fn width(self) -> usize {
        match self {
            FeatureSet::Sensors => 6,
            FeatureSet::SensorsWithTime => 10,
        }
    }
}

/// `(year, month, day, hour)` of a timestamp.
pub fn temporal_features(ts: NaiveDateTime) -> (i32, u32, u32, u32) {
    (ts.year(), ts.month(), ts.day(), ts.hour())
}

/// Feature matrix and label column with optional scaler and split.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix {
    pub x: Matrix,
    pub y: Matrix,
    pub feature_names: Vec<String>,
    pub scaler: Option<ScalerStats>,
    pub split: Option<Split>,
}

impl DesignMatrix {
    pub fn from_frames(frames: &[SensorFrame], set: FeatureSet) -> Result<Self, DatasetError> {
        let width = set.width();
        let mut data = Vec::with_capacity(frames.len() * width);
        for f in frames {
            data.extend_from_slice(&f.channels);
            if set == FeatureSet::SensorsWithTime {
                let (y, m, d, h) = temporal_features(f.timestamp);
                data.extend([y as f64, m as f64, d as f64, h as f64]);
            }
        }
        let labels: Vec<f64> = frames.iter().map(|f| f.growth_avg).collect();
        Ok(DesignMatrix {
            x: Matrix::new(frames.len(), width, data)?,
            y: Matrix::column_vector(&labels)?,
            feature_names: set.names(),
            scaler: None,
            split: None,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.x.rows()
    }

    pub fn labels(&self) -> &[f64] {
        self.y.data()
    }

    /// Records the split, fits the scaler on its training rows and
    /// standardizes every row in place.
    pub fn standardize_with(&mut self, split: Split) -> Result<(), DatasetError> {
        let stats = ScalerStats::fit(&self.x, &split.train);
        self.x = stats.apply(&self.x)?;
        self.scaler = Some(stats);
        self.split = Some(split);
        Ok(())
    }

    /// Applies already-fitted statistics (e.g. from a checkpoint).
    pub fn apply_scaler(&mut self, stats: ScalerStats) -> Result<(), DatasetError> {
        self.x = stats.apply(&self.x)?;
        self.scaler = Some(stats);
        Ok(())
    }
}
