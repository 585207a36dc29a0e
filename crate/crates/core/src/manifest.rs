//! Run record attached to every artifact.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Version string recorded in manifests.
pub const TOOL_VERSION: &str = concat!("growbench ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub seed: u64,
    pub config_path: Option<String>,
    /// SHA-256 of the dataset file bytes, hex encoded.
    pub dataset_fingerprint: String,
    pub model: String,
    pub output_dir: String,
    pub tool_version: String,
}

impl RunManifest {
    /// Short content hash, written as `# manifest=<hash>` atop CSV artifacts.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("manifest serializes");
        fingerprint(&json)[..16].to_string()
    }
}

/// Hex SHA-256 of `bytes`.
pub fn fingerprint(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
