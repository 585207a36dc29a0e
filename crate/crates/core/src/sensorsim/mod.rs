//! Seeded synthetic farm data and the water-loop controller.

mod generate;
mod growth;
pub mod water;

pub use generate::{generate, ChannelProfile, ChannelRange, Season, SimConfig, SyntheticDataset};
pub use growth::{growth_truth, LatentGrowthModel, ResponseWeights};
pub use water::{
    model_check, simulate, trace_csv, water_step, ModelCheckReport, Tick, WaterController, WaterSystemState,
};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
}
