//! Experiment configuration files.
//!
//! A config is `{"kind": …, "seed": u64, "params": {…}}`. Inputs inside
//! `params` may be inline JSON or a path (relative to the config file); paths
//! are resolved before hashing so the hash covers the data actually used.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Measure,
    SpCheck,
    Counterexample,
    Simulate,
    Toral,
    Baker,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Measure => "measure",
            Kind::SpCheck => "sp-check",
            Kind::Counterexample => "counterexample",
            Kind::Simulate => "simulate",
            Kind::Toral => "toral",
            Kind::Baker => "baker",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    /// Always explicit: runs never draw from OS entropy.
    pub seed: u64,
    #[serde(default = "empty_object")]
    pub params: Value,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

/// Input fields that may name a file instead of holding the document.
const SOURCE_FIELDS: &[&str] = &["shift", "potential", "rectangles", "balls"];

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::validation("config.parse", e))
    }

    /// Replaces path-valued inputs by the parsed file contents.
    pub fn resolve_sources(&mut self, base: &Path) -> Result<()> {
        let Value::Object(params) = &mut self.params else {
            return Err(CliError::validation("config.parse", "params must be an object"));
        };
        for field in SOURCE_FIELDS {
            if let Some(Value::String(path)) = params.get(*field) {
                let full = base.join(path);
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| CliError::validation("config.resolve", format!("{}: {e}", full.display())))?;
                let doc: Value = serde_json::from_str(&text)
                    .map_err(|e| CliError::validation("config.resolve", format!("{}: {e}", full.display())))?;
                params.insert((*field).to_owned(), doc);
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical (key-sorted, compact) JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serialises");
        Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Typed parameters; unknown fields are rejected.
    pub fn params<T: DeserializeOwned>(&self) -> Result<T> {
        serde_json::from_value(self.params.clone()).map_err(|e| CliError::validation("config.params", e))
    }

    pub fn param_text(&self, field: &str) -> Option<String> {
        self.params.get(field).map(Value::to_string)
    }
}

/// Checkpoints: explicit, or doubling up to `n`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Horizon {
    pub checkpoints: Option<Vec<u64>>,
    pub n: Option<u64>,
}

impl Horizon {
    pub fn resolve(&self, default_n: Option<u64>) -> Result<Vec<u64>> {
        if let Some(c) = &self.checkpoints {
            return Ok(c.clone());
        }
        let n = self
            .n
            .or(default_n)
            .ok_or_else(|| CliError::validation("config.params", "need `checkpoints` or `n`"))?;
        Ok(doubling(n))
    }
}

/// `1, 2, 4, … < n` followed by `n`.
pub fn doubling(n: u64) -> Vec<u64> {
    let mut v: Vec<u64> = std::iter::successors(Some(1u64), |x| x.checked_mul(2))
        .take_while(|&x| x < n)
        .collect();
    v.push(n);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_key_order_and_whitespace() {
        let a = ExperimentConfig::parse(r#"{"kind": "baker", "seed": 3, "params": {"n": 10, "balls": [1, 2]}}"#).unwrap();
        let b = ExperimentConfig::parse(r#"{"params":{"balls":[1,2],"n":10},"seed":3,"kind":"baker"}"#).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let c = ExperimentConfig::parse(r#"{"kind": "baker", "seed": 4, "params": {"n": 10, "balls": [1, 2]}}"#).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn doubling_checkpoints() {
        assert_eq!(doubling(1), [1]);
        assert_eq!(doubling(8), [1, 2, 4, 8]);
        assert_eq!(doubling(10), [1, 2, 4, 8, 10]);
        let h = Horizon { checkpoints: None, n: None };
        assert!(h.resolve(None).is_err());
        assert_eq!(h.resolve(Some(3)).unwrap(), [1, 2, 3]);
    }
}
