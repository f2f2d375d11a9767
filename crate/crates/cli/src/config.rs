//! Optional `--config FILE`: a flat TOML table whose keys are flag names
//! without the leading dashes, e.g.
//!
//! ```toml
//! db = "out/db"
//! seed = 42
//! gap-ms = 10
//! jobs = 8
//! force = true
//! ```
//!
//! Flags given on the command line win. Keys belonging to other subcommands
//! are ignored; keys that are not a flag of any subcommand are rejected.

use std::path::{Path, PathBuf};

use crate::CliError;

const KNOWN_KEYS: &[&str] = &[
    "align",
    "audio-dir",
    "pinyin-table",
    "out",
    "on-unmapped",
    "on-missing-audio",
    "jobs",
    "force",
    "db",
    "text",
    "seed",
    "variants",
    "gap-ms",
    "on-missing",
    "keep-non-cjk",
    "json",
    "first",
    "second",
];

#[derive(Debug, Default)]
pub struct Config {
    table: toml::Table,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let table: toml::Table = text
            .parse()
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        if let Some(unknown) = table.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(CliError::Usage(format!(
                "config {}: unknown key {unknown:?}",
                path.display()
            )));
        }
        Ok(Self { table })
    }

    fn wrong_type(key: &str, want: &str) -> CliError {
        CliError::Usage(format!("config key {key:?} must be {want}"))
    }

    pub fn string(&self, key: &str) -> Result<Option<String>, CliError> {
        match self.table.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(Self::wrong_type(key, "a string")),
        }
    }

    pub fn path(&self, key: &str) -> Result<Option<PathBuf>, CliError> {
        Ok(self.string(key)?.map(PathBuf::from))
    }

    pub fn uint(&self, key: &str) -> Result<Option<u64>, CliError> {
        match self.table.get(key) {
            None => Ok(None),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(_) => Err(Self::wrong_type(key, "a non-negative integer")),
        }
    }

    pub fn float(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.table.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(f)) => Ok(Some(*f)),
            Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(_) => Err(Self::wrong_type(key, "a number")),
        }
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.table.get(key) {
            None => Ok(false),
            Some(toml::Value::Boolean(b)) => Ok(*b),
            Some(_) => Err(Self::wrong_type(key, "a boolean")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> Result<Config, CliError> {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, text).unwrap();
        Config::load(&p)
    }

    #[test]
    fn reads_typed_values() {
        let c = config("seed = 42\ngap-ms = 10\ndb = \"x\"\nforce = true\n").unwrap();
        assert_eq!(c.uint("seed").unwrap(), Some(42));
        assert_eq!(c.float("gap-ms").unwrap(), Some(10.0));
        assert_eq!(c.path("db").unwrap(), Some(PathBuf::from("x")));
        assert!(c.flag("force").unwrap());
        assert!(!c.flag("json").unwrap());
        assert_eq!(c.string("out").unwrap(), None);
    }

    #[test]
    fn rejects_unknown_and_mistyped() {
        assert!(matches!(config("sed = 1\n"), Err(CliError::Usage(_))));
        let c = config("seed = \"42\"\n").unwrap();
        assert!(c.uint("seed").is_err());
        assert!(config("seed = \n").is_err());
    }
}
