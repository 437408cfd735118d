//! Encoded feature layout.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use hifis_core::InputLayout;

use crate::error::{Error, Result};
use crate::records::ServiceType;

pub const UNKNOWN: &str = "Unknown";

const DEFAULT_SCHEMA: &str = include_str!("../schema/default_schema.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoricalDomain {
    pub name: String,
    pub values: Vec<String>,
}

impl CategoricalDomain {
    pub fn index_of(&self, value: &str) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }
}

/// An encoded row is
/// `[numeric statics | SVCF one-hots | MVCF bits | dynamic counts]`, the
/// dynamic block holding `sequence_length` steps of one count per service,
/// current step first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub numeric_static: Vec<String>,
    pub svcf: Vec<CategoricalDomain>,
    pub mvcf: Vec<CategoricalDomain>,
    pub dynamic_services: Vec<ServiceType>,
    pub sequence_length: usize,
    pub step_days: i64,
}

impl Default for FeatureSchema {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_SCHEMA).expect("bundled schema parses")
    }
}

impl FeatureSchema {
    pub fn with_steps(mut self, sequence_length: usize, step_days: i64) -> Self {
        self.sequence_length = sequence_length;
        self.step_days = step_days;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.sequence_length == 0 || self.step_days <= 0 {
            return Err(Error::Config("sequence length and step length must be positive".into()));
        }
        if self.dynamic_services.is_empty() {
            return Err(Error::Config("no dynamic services".into()));
        }
        for d in &self.svcf {
            if d.index_of(UNKNOWN).is_none() {
                return Err(Error::Config(format!("SVCF {} has no {UNKNOWN:?} value", d.name)));
            }
        }
        for d in self.svcf.iter().chain(&self.mvcf) {
            let mut v = d.values.clone();
            v.sort();
            v.dedup();
            if v.len() != d.values.len() || v.is_empty() {
                return Err(Error::Config(format!("{}: empty or repeated values", d.name)));
            }
        }
        Ok(())
    }

    pub fn numeric_len(&self) -> usize {
        self.numeric_static.len()
    }

    pub fn svcf_offset(&self) -> usize {
        self.numeric_len()
    }

    pub fn mvcf_offset(&self) -> usize {
        self.svcf_offset() + self.svcf.iter().map(|d| d.values.len()).sum::<usize>()
    }

    pub fn static_len(&self) -> usize {
        self.mvcf_offset() + self.mvcf.iter().map(|d| d.values.len()).sum::<usize>()
    }

    pub fn width(&self) -> usize {
        self.static_len() + self.sequence_length * self.dynamic_services.len()
    }

    pub fn layout(&self) -> InputLayout {
        InputLayout { static_len: self.static_len(), steps: self.sequence_length, services: self.dynamic_services.len() }
    }

    /// Column of service `s` at step `t` (0 = current).
    pub fn dynamic_column(&self, t: usize, s: usize) -> usize {
        self.static_len() + t * self.dynamic_services.len() + s
    }

    /// Columns that are standardized: numeric statics and dynamic counts.
    pub fn scaled_columns(&self) -> Vec<usize> {
        (0..self.numeric_len()).chain(self.static_len()..self.width()).collect()
    }

    pub fn dynamic_name(&self, t: usize, service: ServiceType) -> String {
        if t == 0 {
            format!("30-Day_{service}")
        } else {
            format!("(-{t})30-Day_{service}")
        }
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names = self.numeric_static.clone();
        for d in self.svcf.iter().chain(&self.mvcf) {
            names.extend(d.values.iter().map(|v| format!("{}_{}", d.name, v)));
        }
        for t in 0..self.sequence_length {
            names.extend(self.dynamic_services.iter().map(|&s| self.dynamic_name(t, s)));
        }
        names
    }

    pub fn numeric_index(&self, name: &str) -> Option<usize> {
        self.numeric_static.iter().position(|n| n == name)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("schema serializes");
        hex::encode(Sha256::digest(&json))
    }
}
