//! Serializable system descriptions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::DEFAULT_PRECISION_BITS;
use crate::system::ContractionSystem;

fn default_precision() -> u32 {
    DEFAULT_PRECISION_BITS
}

/// A contraction pair named by family and parameters.
///
/// Families: `linear` (params l, r), `middle-third`, `perturbed` (params a, b),
/// `conjugated` (params eps, with `base`), `polynomial` (`phi0`, `phi1`
/// ascending coefficient lists).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub family: String,
    #[serde(default)]
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Box<SystemConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi1: Option<Vec<f64>>,
    #[serde(default = "default_precision")]
    pub precision_bits: u32,
}

impl SystemConfig {
    pub fn new(family: &str, params: &[f64]) -> Self {
        SystemConfig {
            family: family.to_string(),
            params: params.to_vec(),
            base: None,
            phi0: None,
            phi1: None,
            precision_bits: DEFAULT_PRECISION_BITS,
        }
    }

    pub fn middle_third() -> Self {
        Self::new("middle-third", &[])
    }

    pub fn linear(l: f64, r: f64) -> Self {
        Self::new("linear", &[l, r])
    }

    pub fn perturbed(a: f64, b: f64) -> Self {
        Self::new("perturbed", &[a, b])
    }

    pub fn conjugated(base: SystemConfig, eps: f64) -> Self {
        let mut c = Self::new("conjugated", &[eps]);
        c.precision_bits = base.precision_bits;
        c.base = Some(Box::new(base));
        c
    }

    pub fn polynomial(phi0: Vec<f64>, phi1: Vec<f64>) -> Self {
        let mut c = Self::new("polynomial", &[]);
        c.phi0 = Some(phi0);
        c.phi1 = Some(phi1);
        c
    }

    pub fn with_precision(mut self, bits: u32) -> Self {
        self.precision_bits = bits;
        if let Some(b) = self.base.as_mut() {
            b.precision_bits = bits;
        }
        self
    }

    pub fn build(&self) -> Result<ContractionSystem> {
        ContractionSystem::from_config(self)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub(crate) fn expect_params(&self, n: usize) -> Result<&[f64]> {
        if self.params.len() != n {
            return Err(Error::Parameter(format!(
                "family {} takes {n} parameters, got {}",
                self.family,
                self.params.len()
            )));
        }
        Ok(&self.params)
    }
}
