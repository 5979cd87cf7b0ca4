//! Option values merged from a config file and the command line.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use clap::parser::ValueSource;
use clap::ArgMatches;
use serde::Serialize;
use serde_json::Value;
use stl_kernel::trajectory::parse_key_values;

use crate::error::CliError;

/// Keys that never reach a sidecar: they locate files rather than define
/// the computation.
const UNRECORDED: [&str; 2] = ["out_dir", "config"];

pub struct Settings {
    values: BTreeMap<String, Vec<String>>,
    used: RefCell<BTreeMap<String, Value>>,
}

impl Settings {
    /// Config file values first, then every option given on the command
    /// line. Keys are checked against `known`.
    pub fn load(config: Option<&Path>, matches: &[&ArgMatches], known: &BTreeSet<String>) -> Result<Self, CliError> {
        let mut values = match config {
            Some(path) => read_config(path)?,
            None => BTreeMap::new(),
        };
        for key in values.keys() {
            if !known.contains(key) {
                return Err(CliError::config(format!("unknown config key {key:?}")));
            }
        }
        for m in matches {
            for id in m.ids() {
                let key = id.as_str();
                if key == "config" || m.value_source(key) != Some(ValueSource::CommandLine) {
                    continue;
                }
                if let Ok(Some(raw)) = m.try_get_raw(key) {
                    let given: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
                    values.insert(key.to_string(), given);
                }
            }
        }
        Ok(Settings {
            values,
            used: RefCell::new(BTreeMap::new()),
        })
    }

    #[cfg(test)]
    pub fn from_pairs(pairs: &[(&str, &str)]) -> Self {
        let values = pairs
            .iter()
            .map(|(k, v)| (k.to_string(), vec![v.to_string()]))
            .collect();
        Settings {
            values,
            used: RefCell::new(BTreeMap::new()),
        }
    }

    fn record<T: Serialize>(&self, key: &str, value: &T) {
        if !UNRECORDED.contains(&key) {
            let v = serde_json::to_value(value).unwrap_or(Value::Null);
            self.used.borrow_mut().insert(key.to_string(), v);
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).and_then(|v| v.last()).map(String::as_str)
    }

    pub fn get<T>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T: FromStr + Serialize,
        T::Err: Display,
    {
        let value = match self.raw(key) {
            Some(text) => parse_value(key, text)?,
            None => default,
        };
        self.record(key, &value);
        Ok(value)
    }

    pub fn optional<T>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr + Serialize,
        T::Err: Display,
    {
        let value = self.raw(key).map(|text| parse_value(key, text)).transpose()?;
        if let Some(v) = &value {
            self.record(key, v);
        }
        Ok(value)
    }

    pub fn required<T>(&self, key: &str) -> Result<T, CliError>
    where
        T: FromStr + Serialize,
        T::Err: Display,
    {
        self.optional(key)?
            .ok_or_else(|| CliError::config(format!("missing required option --{}", key.replace('_', "-"))))
    }

    pub fn list(&self, key: &str) -> Vec<String> {
        let items = self.values.get(key).cloned().unwrap_or_default();
        if !items.is_empty() {
            self.record(key, &items);
        }
        items
    }

    /// Every value read so far, as reusable config.
    pub fn used(&self) -> BTreeMap<String, Value> {
        self.used.borrow().clone()
    }
}

fn parse_value<T>(key: &str, text: &str) -> Result<T, CliError>
where
    T: FromStr,
    T::Err: Display,
{
    text.parse()
        .map_err(|e| CliError::config(format!("{key}: cannot parse {text:?}: {e}")))
}

fn normalize_key(key: &str) -> String {
    key.trim().replace('-', "_")
}

/// Reads a JSON object or flat `key = value` lines.
fn read_config(path: &Path) -> Result<BTreeMap<String, Vec<String>>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    if text.trim_start().starts_with('{') {
        let map: BTreeMap<String, Value> =
            serde_json::from_str(&text).map_err(|e| CliError::config(format!("config {}: {e}", path.display())))?;
        for (key, value) in map {
            let items = match value {
                Value::Array(items) => items.into_iter().map(scalar).collect::<Result<Vec<_>, _>>(),
                other => scalar(other).map(|s| vec![s]),
            }
            .map_err(|e| CliError::config(format!("config key {key:?}: {e}")))?;
            out.insert(normalize_key(&key), items);
        }
    } else {
        let map = parse_key_values(&text).map_err(|e| CliError::config(format!("config {}: {e}", path.display())))?;
        for (key, value) in map {
            out.insert(normalize_key(&key), vec![value]);
        }
    }
    Ok(out)
}

fn scalar(v: Value) -> Result<String, String> {
    match v {
        Value::String(s) => Ok(s),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        other => Err(format!("expected a scalar, got {other}")),
    }
}
