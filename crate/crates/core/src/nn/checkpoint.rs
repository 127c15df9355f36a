use super::network::Mlp;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

/// One network inside a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedNetwork {
    pub name: String,
    pub network: Mlp,
}

/// Versioned checkpoint document: component kind, scalar metadata, then each
/// network's spec followed by its per-layer tensors in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub schema_version: u32,
    /// Component label, e.g. `trunk`, `local`, `cloud`, `router`.
    pub kind: String,
    #[serde(default)]
    pub meta: BTreeMap<String, serde_json::Value>,
    pub networks: Vec<NamedNetwork>,
}

impl Checkpoint {
    pub fn new(kind: &str) -> Self {
        Checkpoint {
            schema_version: CHECKPOINT_SCHEMA_VERSION,
            kind: kind.to_string(),
            meta: BTreeMap::new(),
            networks: Vec::new(),
        }
    }

    pub fn with_network(mut self, name: &str, network: &Mlp) -> Self {
        self.networks.push(NamedNetwork {
            name: name.to_string(),
            network: network.clone(),
        });
        self
    }

    pub fn with_meta(mut self, key: &str, value: impl Serialize) -> Self {
        let value = serde_json::to_value(value).expect("metadata serializes");
        self.meta.insert(key.to_string(), value);
        self
    }

    pub fn network(&self, name: &str) -> Result<&Mlp> {
        self.networks
            .iter()
            .find(|n| n.name == name)
            .map(|n| &n.network)
            .ok_or_else(|| Error::Schema(format!("checkpoint {:?} has no network {name:?}", self.kind)))
    }

    pub fn meta<T: serde::de::DeserializeOwned>(&self, key: &str) -> Result<T> {
        let v = self
            .meta
            .get(key)
            .ok_or_else(|| Error::Schema(format!("checkpoint {:?} lacks {key:?}", self.kind)))?;
        Ok(serde_json::from_value(v.clone())?)
    }

    pub fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Schema(format!("expected a {kind:?} checkpoint, found {:?}", self.kind)));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        if ckpt.schema_version != CHECKPOINT_SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "checkpoint schema {} (expected {CHECKPOINT_SCHEMA_VERSION})",
                ckpt.schema_version
            )));
        }
        for n in &ckpt.networks {
            n.network.weights.check(&n.network.spec)?;
            if !n.network.weights.is_finite() {
                return Err(Error::Schema(format!("network {:?} has non-finite weights", n.name)));
            }
        }
        Ok(ckpt)
    }

    /// Writes the document and returns its SHA-256.
    pub fn save(&self, path: &Path) -> Result<String> {
        let text = self.to_json()?;
        std::fs::write(path, &text).map_err(|e| Error::io(path, e))?;
        Ok(sha256_hex(text.as_bytes()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Content hash of a network's exact weights.
pub fn network_hash(network: &Mlp) -> String {
    let mut bytes = Vec::with_capacity(network.parameter_count() * 8);
    for t in network.weights.params() {
        for v in &t.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    sha256_hex(&bytes)
}
