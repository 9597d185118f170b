//! Run configuration: a strict, versioned JSON document merged with command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use cantor_scenery::symbolic::DEFAULT_DEPTH_CAP;
use cantor_scenery::SystemConfig;

pub const CONFIG_VERSION: u32 = 1;

fn default_version() -> u32 {
    CONFIG_VERSION
}

/// Everything that determines the output of one command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    pub system: SystemConfig,
    /// Level of cylinders, ratio sets and skeletons; bisection depth for `dimension`.
    #[serde(default = "defaults::depth")]
    pub depth: usize,
    /// Depth n of the scaling estimates R_n.
    #[serde(default = "defaults::est_depth")]
    pub est_depth: usize,
    /// Suffix length m of the scaling table.
    #[serde(default = "defaults::table_depth")]
    pub table_depth: usize,
    /// Largest n for sequences (`scenery`, `converge`).
    #[serde(default = "defaults::max_n")]
    pub max_n: usize,
    #[serde(default = "defaults::depth_cap")]
    pub depth_cap: usize,
    #[serde(default = "defaults::tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
    /// Orbit length for `simulate`.
    #[serde(default = "defaults::steps")]
    pub steps: usize,
    /// Fixed past (y_{-n} ... y_{-1}); drawn from the seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub past: Option<String>,
    /// Persisted scaling table used by `ratioset` instead of building one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
    /// Gap seed for `rigidity`: "form" (the conjugating map) or "affine".
    #[serde(default = "defaults::gap_seed")]
    pub gap_seed: String,
    /// Functional for `simulate`; all built-ins when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functional: Option<String>,
    /// Output paths. Not part of the config hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<PathBuf>,
}

mod defaults {
    pub fn depth() -> usize {
        8
    }
    pub fn est_depth() -> usize {
        20
    }
    pub fn table_depth() -> usize {
        8
    }
    pub fn max_n() -> usize {
        16
    }
    pub fn depth_cap() -> usize {
        super::DEFAULT_DEPTH_CAP
    }
    pub fn tol() -> f64 {
        1e-9
    }
    pub fn steps() -> usize {
        2000
    }
    pub fn gap_seed() -> String {
        "form".into()
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            version: CONFIG_VERSION,
            system: SystemConfig::middle_third(),
            depth: defaults::depth(),
            est_depth: defaults::est_depth(),
            table_depth: defaults::table_depth(),
            max_n: defaults::max_n(),
            depth_cap: defaults::depth_cap(),
            tol: defaults::tol(),
            seed: 0,
            steps: defaults::steps(),
            past: None,
            table: None,
            gap_seed: defaults::gap_seed(),
            functional: None,
            out: None,
            plot: None,
        }
    }
}

/// A configuration that failed to parse or validate; mapped to exit status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(s).map_err(|e| ConfigError(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(Self::from_json(&text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.version != CONFIG_VERSION {
            bail!(ConfigError(format!("unsupported config version {}", self.version)));
        }
        if !(self.tol > 0.0) {
            bail!(ConfigError("tol must be positive".into()));
        }
        if self.table_depth > self.est_depth {
            bail!(ConfigError(format!("table depth {} exceeds estimation depth {}", self.table_depth, self.est_depth)));
        }
        if !matches!(self.gap_seed.as_str(), "form" | "affine") {
            bail!(ConfigError(format!("unknown gap seed {:?}", self.gap_seed)));
        }
        Ok(())
    }

    /// SHA-256 over the command and the canonical JSON of the config without output paths.
    pub fn hash(&self, command: &str) -> String {
        let mut c = self.clone();
        c.out = None;
        c.plot = None;
        let body = serde_json::to_string(&c).expect("config serializes");
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        h.update([0u8]);
        h.update(body.as_bytes());
        hex::encode(h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut c = RunConfig::default();
        c.system = SystemConfig::conjugated(SystemConfig::perturbed(0.1, 0.1), 0.2);
        c.past = Some("0110".into());
        c.tol = 1e-11;
        let back = RunConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = RunConfig::from_json(r#"{"system": {"family": "middle-third"}, "dpeth": 3}"#).unwrap_err();
        assert!(err.0.contains("dpeth"));
    }

    #[test]
    fn hash_ignores_outputs() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.out = Some("x.csv".into());
        assert_eq!(a.hash("levels"), b.hash("levels"));
        assert_ne!(a.hash("levels"), a.hash("scaling"));
        b.seed = 1;
        assert_ne!(a.hash("levels"), b.hash("levels"));
    }
}
