//! Key/value config files whose keys mirror the command-line flags.
//!
//! ```toml
//! seed = 11
//! epochs = 30
//! arch = [300, 300, 150]
//!
//! [train]            # keys here apply to one subcommand only
//! batch-size = 64
//! ```
//!
//! Underscores and dashes in keys are interchangeable. Flags given on the
//! command line override the file.

use std::path::Path;
use std::str::FromStr;

use toml::{Table, Value};

pub struct Config {
    global: Table,
    section: Table,
    pub path: Option<String>,
}

impl Config {
    pub fn empty() -> Self {
        Self {
            global: Table::new(),
            section: Table::new(),
            path: None,
        }
    }

    pub fn load(path: &Path, subcommand: &str) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut global: Table = text
            .parse()
            .map_err(|e| format!("config {} is not valid: {e}", path.display()))?;
        let section = match global.remove(subcommand) {
            Some(Value::Table(t)) => t,
            Some(_) => return Err(format!("config key `{subcommand}` must be a table")),
            None => Table::new(),
        };
        global.retain(|_, v| !v.is_table());
        Ok(Self {
            global,
            section,
            path: Some(path.display().to_string()),
        })
    }

    fn raw(&self, key: &str) -> Option<&Value> {
        let alt = key.replace('-', "_");
        [&self.section, &self.global]
            .into_iter()
            .find_map(|t| t.get(key).or_else(|| t.get(&alt)))
    }

    /// Value as flag text: scalars verbatim, arrays joined with commas.
    fn text(&self, key: &str) -> Result<Option<String>, String> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        let scalar = |v: &Value| match v {
            Value::String(s) => Ok(s.clone()),
            Value::Integer(i) => Ok(i.to_string()),
            Value::Float(f) => Ok(f.to_string()),
            Value::Boolean(b) => Ok(b.to_string()),
            other => Err(format!("config key `{key}` has unsupported value {other}")),
        };
        match v {
            Value::Array(items) => Ok(Some(items.iter().map(scalar).collect::<Result<Vec<_>, _>>()?.join(","))),
            other => scalar(other).map(Some),
        }
    }

    /// The flag if given, else the config value, else `None`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.text(key)? {
            Some(s) => s.parse().map(Some).map_err(|e| format!("config key `{key}`: {e}")),
            None => Ok(None),
        }
    }

    /// Switch flags: set on the command line, or `true` in the file.
    pub fn switch(&self, flag: bool, key: &str) -> Result<bool, String> {
        Ok(flag || self.pick::<bool>(None, key)?.unwrap_or(false))
    }
}
