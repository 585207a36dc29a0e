//! Sensor CSV ingestion, cleaning, feature derivation, scaling, splitting and
//! windowing.

mod clean;
mod csv_io;
mod design;
mod scaler;
mod split;
mod window;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

pub use clean::{clean, CleaningReport};
pub use csv_io::{parse_csv, parse_decimal, position_names, write_csv, Cell, CsvOptions, ParsedCsv, RawRecord};
pub use design::{temporal_features, DesignMatrix, FeatureSet};
pub use scaler::ScalerStats;
pub use split::{split, Split, SplitMode};
pub use window::{window, SequenceSet};

use crate::numerics::ShapeError;

/// Timestamp layout used in every CSV this crate reads or writes.
pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M";

/// The six environment channels, in CSV column order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    Light,
    Co2,
    Tds,
    Temp,
    Hum,
    WaterTemp,
}

impl Channel {
    pub const ALL: [Channel; 6] = [
        Channel::Light,
        Channel::Co2,
        Channel::Tds,
        Channel::Temp,
        Channel::Hum,
        Channel::WaterTemp,
    ];

    pub fn header(self) -> &'static str {
        match self {
            Channel::Light => "Light",
            Channel::Co2 => "CO2",
            Channel::Tds => "TDS",
            Channel::Temp => "TEMP",
            Channel::Hum => "HUM",
            Channel::WaterTemp => "WaterTemp",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// One timestamped reading of the environment plus plant heights (cm).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorFrame {
    pub timestamp: NaiveDateTime,
    /// Indexed by [`Channel::index`]: lux, ppm, ppm, °C, %RH, °C.
    pub channels: [f64; 6],
    pub heights: Vec<f64>,
    pub growth_avg: f64,
}

impl SensorFrame {
    pub fn channel(&self, c: Channel) -> f64 {
        self.channels[c.index()]
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("every row was dropped during cleaning ({rows_in} rows in)")]
    Empty { rows_in: usize },
    #[error("invalid split: {0}")]
    Split(String),
    #[error("window length {window} invalid for {rows} rows")]
    Window { window: usize, rows: usize },
    #[error(transparent)]
    Shape(#[from] ShapeError),
}
