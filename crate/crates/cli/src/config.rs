use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use toml::{Table, Value};

use crate::BadInput;

pub const SEED_ENV: &str = "DNS_CPM_SEED";

/// Values from a `key = value` config file. Keys are flag names; dashes
/// and underscores are interchangeable.
#[derive(Debug, Default)]
pub struct FileSettings {
    table: Table,
}

impl FileSettings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileSettings::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| BadInput::err(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: Table = text.parse().map_err(|e| BadInput::err(format!("invalid config: {e}")))?;
        let table = raw.into_iter().map(|(k, v)| (k.replace('-', "_"), v)).collect();
        Ok(FileSettings { table })
    }

    pub fn get<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>> {
        let key = key.replace('-', "_");
        match self.table.get(&key) {
            None => Ok(None),
            Some(v) => v.clone().try_into().map(Some).map_err(|e| BadInput::err(format!("config key {key:?}: {e}"))),
        }
    }

    /// A comma-separated list, given either as a string or a TOML array.
    pub fn get_list(&self, key: &str) -> Result<Option<Vec<usize>>> {
        let key_norm = key.replace('-', "_");
        match self.table.get(&key_norm) {
            Some(Value::String(s)) => parse_list(s).map(Some),
            Some(_) => self.get(key),
            None => Ok(None),
        }
    }

    /// Flag value, else file value.
    pub fn pick<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    /// Seed from the flag, the file, then the environment.
    pub fn seed(&self, flag: Option<u64>) -> Result<Option<u64>> {
        if let Some(s) = self.pick(flag, "seed")? {
            return Ok(Some(s));
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| BadInput::err(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
            Err(_) => Ok(None),
        }
    }
}

pub fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|_| BadInput::err(format!("{p:?} in {s:?} is not a positive integer"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_and_precedence() {
        let f = FileSettings::parse("tau = 7\ncms-w = 500\nd_grid = \"2,3\"\nw-grid = [100, 200]\n").unwrap();
        assert_eq!(f.get::<u64>("tau").unwrap(), Some(7));
        assert_eq!(f.get::<usize>("cms_w").unwrap(), Some(500));
        assert_eq!(f.pick(Some(9u64), "tau").unwrap(), Some(9));
        assert_eq!(f.get_list("d-grid").unwrap(), Some(vec![2, 3]));
        assert_eq!(f.get_list("w_grid").unwrap(), Some(vec![100, 200]));
        assert_eq!(f.get::<u64>("missing").unwrap(), None);
        assert!(f.get::<String>("tau").is_err());
    }

    #[test]
    fn bad_lists() {
        assert!(parse_list("2,x").is_err());
        assert_eq!(parse_list(" 2, 3 ,").unwrap(), vec![2, 3]);
    }
}
