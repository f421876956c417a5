//! Flat `key = value` configuration files.
//!
//! One entry per line, `#` starts a comment line, lists are comma separated.
//! A later duplicate key overrides an earlier one.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyValues {
    source: Option<PathBuf>,
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_from(text, None)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_from(&text, Some(path.to_path_buf()))
    }

    fn parse_from(text: &str, source: Option<PathBuf>) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse {
                    path: source.clone().unwrap_or_default(),
                    line: i + 1,
                    msg: format!("expected key = value, got {line:?}"),
                });
            };
            entries.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self { source, entries })
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get_parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                Error::InvalidArgument(format!("config key {key}: cannot parse {v:?}"))
            }),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get_parsed(key)?.unwrap_or(default))
    }

    pub fn get_list(&self, key: &str) -> Option<Vec<String>> {
        self.get(key).map(|v| {
            v.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_entries() {
        let kv = KeyValues::parse("# c\nposts = 10\n\nwords=a, b ,c,\nposts=12\n").unwrap();
        assert_eq!(kv.get_or("posts", 0usize).unwrap(), 12);
        assert_eq!(kv.get_list("words").unwrap(), vec!["a", "b", "c"]);
        assert_eq!(kv.get_or("missing", 3.5f64).unwrap(), 3.5);
        assert!(kv.get_parsed::<usize>("words").is_err());
    }

    #[test]
    fn rejects_lines_without_equals() {
        assert!(matches!(
            KeyValues::parse("ok = 1\nbroken\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
