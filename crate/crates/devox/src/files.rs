//! Weight containers and model configs on disk.
//!
//! Weights use the binary container from [`devox_core::weights`]; configs
//! are TOML with exactly the [`ModelConfig`] fields.

use std::path::Path;

use devox_core::{ModelConfig, WeightStore};

use crate::error::{Error, Result};

pub fn load_weights(path: impl AsRef<Path>) -> Result<WeightStore> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(WeightStore::from_bytes(&bytes)?)
}

pub fn save_weights(store: &WeightStore, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, store.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ModelConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let config: ModelConfig = toml::from_str(&text).map_err(|e| Error::ConfigFile {
        path: path.into(),
        message: e.to_string(),
    })?;
    config.validate().map_err(|e| Error::ConfigFile {
        path: path.into(),
        message: e.to_string(),
    })?;
    Ok(config)
}

pub fn save_config(config: &ModelConfig, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = toml::to_string_pretty(config).expect("config serializes");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
