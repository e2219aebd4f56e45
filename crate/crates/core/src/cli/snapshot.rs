//! Versioned JSON model snapshots.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ansatz::{ModelSpec, StiffModel};
use crate::error::{Error, Result};

pub const SNAPSHOT_FORMAT: &str = "stiffnet-model";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerRecord {
    pub name: String,
    pub sizes: Vec<usize>,
    pub offset: usize,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSnapshot {
    pub format: String,
    pub version: u32,
    pub spec: ModelSpec,
    pub rates: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub layers: Vec<LayerRecord>,
    /// Flat parameter vector; shortest round-trip decimals.
    pub params: Vec<f64>,
    pub seed: u64,
    /// SHA-256 of the resolved run configuration, hex.
    pub config_hash: String,
}

/// Hex SHA-256 of `text`.
pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn layers_of(model: &StiffModel) -> Vec<LayerRecord> {
    model
        .nets()
        .map(|net| {
            let r = net.param_range();
            LayerRecord { name: net.name().to_string(), sizes: net.layer_sizes().to_vec(), offset: r.start, count: r.len() }
        })
        .collect()
}

impl ModelSnapshot {
    pub fn capture(model: &StiffModel, config_hash: String) -> Self {
        Self {
            format: SNAPSHOT_FORMAT.into(),
            version: SNAPSHOT_VERSION,
            spec: model.spec().clone(),
            rates: model.rate_grid().rates.clone(),
            frequencies: model.freq_grid().freqs.clone(),
            layers: layers_of(model),
            params: model.params().values().to_vec(),
            seed: model.spec().seed,
            config_hash,
        }
    }

    /// Rebuilds the model, checking that the stored layout still matches.
    pub fn restore(&self) -> Result<StiffModel> {
        if self.format != SNAPSHOT_FORMAT {
            return Err(Error::Snapshot(format!("not a model snapshot (format `{}`)", self.format)));
        }
        if self.version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!("unsupported snapshot version {}", self.version)));
        }
        let mut model = StiffModel::new(self.spec.clone())?;
        if layers_of(&model) != self.layers {
            return Err(Error::Snapshot("layer layout does not match the stored spec".into()));
        }
        if model.rate_grid().rates != self.rates || model.freq_grid().freqs != self.frequencies {
            return Err(Error::Snapshot("basis grids do not match the stored spec".into()));
        }
        model.params_mut().set_values(&self.params)?;
        Ok(model)
    }

    pub fn to_json(&self) -> Result<String> {
        if self.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Snapshot("parameters are not finite".into()));
        }
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
