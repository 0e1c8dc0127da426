//! Run configuration file: device powers, PV array and battery.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energy::{EsdConfig, PvConfig};
use crate::error::{Error, Result};
use crate::netmodel::PowerConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub power: PowerConfig,
    #[serde(default)]
    pub pv: PvConfig,
    #[serde(default)]
    pub esd: EsdConfig,
}

impl Config {
    pub fn desk_default() -> Self {
        Self { power: PowerConfig::desk_default(), pv: PvConfig::default(), esd: EsdConfig::default() }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        self.power.validate()?;
        self.pv.validate()?;
        self.esd.validate()
    }
}
