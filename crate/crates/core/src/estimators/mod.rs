//! Entropy, mutual information and conditional mutual information estimators.

pub mod knn;
pub mod plugin;

use serde::{Deserialize, Serialize};

pub use knn::{cmi_knn, mi_knn, KnnConfig, KnnContext};
pub use plugin::{cmi_plugin, entropy_plugin, mi_plugin, JointCounts, PluginContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Bits,
    Nats,
}

impl Units {
    pub fn as_str(self) -> &'static str {
        match self {
            Units::Bits => "bits",
            Units::Nats => "nats",
        }
    }
}
