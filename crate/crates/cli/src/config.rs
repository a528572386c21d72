//! Flat JSON config file whose keys are long flag names.
//!
//! Values may be strings, numbers, booleans or arrays; every value is turned
//! back into the text the corresponding flag would accept, so the file and
//! the command line share one parser.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::Value;

pub const KEYS: [&str; 18] = [
    "scheme", "relays", "frame", "rate", "snr-db", "trials", "seed", "grid", "zmax", "beta", "r1",
    "out", "format", "method", "validate", "threads", "preset", "no-fallback",
];

#[derive(Debug, Default, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config file {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let Value::Object(map) = serde_json::from_str::<Value>(text)? else {
            bail!("config must be a flat JSON object");
        };
        let mut values = BTreeMap::new();
        for (key, value) in map {
            let key = key.replace('_', "-");
            if !KEYS.contains(&key.as_str()) {
                bail!("unknown config key `{key}`");
            }
            values.insert(key.clone(), flatten(&key, &value)?);
        }
        Ok(Self { values })
    }

    /// Parsed value of `key`, if present.
    pub fn get<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|s| s.parse::<T>().map_err(|e| anyhow::anyhow!("config key `{key}`: {e}")))
            .transpose()
    }

    pub fn flag(&self, key: &str) -> Result<bool> {
        Ok(self.get::<bool>(key)?.unwrap_or(false))
    }
}

fn flatten(key: &str, value: &Value) -> Result<String> {
    Ok(match value {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Array(items) => items
            .iter()
            .map(|v| match v {
                Value::String(_) | Value::Number(_) => flatten(key, v),
                _ => bail!("config key `{key}` holds a nested value"),
            })
            .collect::<Result<Vec<_>>>()?
            .join(","),
        Value::Null | Value::Object(_) => bail!("config key `{key}` must be a scalar or a list"),
    })
}
