use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelParams, ModelSpec, TrainConfig};
use crate::dataset::{FeatureSet, ScalerStats, SplitMode};
use crate::manifest::RunManifest;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to reproduce predictions from a trained model.
///
/// Floats are written with shortest round-trip formatting, so loading a saved
/// checkpoint restores every weight bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub spec: ModelSpec,
    pub train_config: TrainConfig,
    pub parameter_count: usize,
    pub feature_set: FeatureSet,
    pub feature_names: Vec<String>,
    pub scaler: ScalerStats,
    pub split_mode: SplitMode,
    pub test_ratio: f64,
    pub split_seed: u64,
    /// Leading cleaned dataset rows the model was trained on.
    pub rows_used: usize,
    pub params: ModelParams,
    pub manifest: RunManifest,
}

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("cannot access checkpoint: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed checkpoint: {0}")]
    Json(#[from] serde_json::Error),
    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("checkpoint is inconsistent: {0}")]
    Mismatch(String),
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CheckpointError> {
        let raw: serde_json::Value = serde_json::from_str(text)?;
        let found = raw
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| CheckpointError::Mismatch("missing format_version".into()))? as u32;
        if found != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version {
                found,
                expected: CHECKPOINT_VERSION,
            });
        }
        let ck: Checkpoint = serde_json::from_str(text)?;
        ck.validate()?;
        Ok(ck)
    }

    fn validate(&self) -> Result<(), CheckpointError> {
        let counted = self.params.as_param_set().walk_count();
        if counted != self.parameter_count || self.params.parameter_count() != counted {
            return Err(CheckpointError::Mismatch(format!(
                "recorded {} parameters, found {counted}",
                self.parameter_count
            )));
        }
        if self.params.kind() != self.spec.kind() {
            return Err(CheckpointError::Mismatch(format!(
                "spec is {} but weights are {}",
                self.spec.kind(),
                self.params.kind()
            )));
        }
        if self.scaler.dim() != self.feature_names.len() {
            return Err(CheckpointError::Mismatch(format!(
                "scaler covers {} columns for {} features",
                self.scaler.dim(),
                self.feature_names.len()
            )));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
