use serde::{Deserialize, Serialize};

use crate::splice::Provenance;

/// One line of the input manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRow {
    pub id: String,
    pub tokens: Vec<String>,
    pub tree: String,
    pub alignment: String,
    pub features: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_shift_ms: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Original,
    Augmented,
}

/// One line of the exported manifest. Field order is the serialized order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub id: String,
    pub origin: Origin,
    pub tokens: Vec<String>,
    pub phonemes: Vec<String>,
    pub joint_tags: Vec<u8>,
    pub features: String,
    pub provenance: Option<Provenance>,
}
