//! Flat `key=value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are unique;
//! whitespace around keys and values is trimmed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}:{line}: expected key=value")]
    Syntax { path: String, line: usize },
    #[error("{path}:{line}: duplicate key `{key}`")]
    Duplicate { path: String, line: usize, key: String },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`")]
    InvalidValue { key: String, value: String },
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
    base_dir: Option<PathBuf>,
}

impl KeyValues {
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                path: origin.to_string(),
                line: i + 1,
            })?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(ConfigError::Syntax { path: origin.to_string(), line: i + 1 });
            }
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(ConfigError::Duplicate { path: origin.to_string(), line: i + 1, key });
            }
        }
        Ok(Self { entries, base_dir: None })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut kv = Self::parse(&text, &path.display().to_string())?;
        kv.base_dir = path.parent().map(Path::to_path_buf);
        Ok(kv)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Parse `key` if present.
    pub fn parse_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| ConfigError::InvalidValue {
                key: key.to_string(),
                value: v.to_string(),
            }),
        }
    }

    /// Resolve a path value relative to the directory of the file it came from.
    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(|v| {
            let p = PathBuf::from(v);
            match (&self.base_dir, p.is_absolute()) {
                (Some(base), false) => base.join(p),
                _ => p,
            }
        })
    }

    /// Entries whose key starts with `prefix`, with the prefix removed.
    pub fn section(&self, prefix: &str) -> KeyValues {
        let entries = self
            .entries
            .iter()
            .filter_map(|(k, v)| k.strip_prefix(prefix).map(|k| (k.to_string(), v.clone())))
            .collect();
        KeyValues { entries, base_dir: self.base_dir.clone() }
    }

    /// Fail on the first key outside `known`.
    pub fn reject_unknown(&self, known: &[&str]) -> Result<(), ConfigError> {
        match self.keys().find(|k| !known.contains(k)) {
            Some(k) => Err(ConfigError::UnknownKey(k.to_string())),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_trims() {
        let kv = KeyValues::parse("# c\n a = 1 \n\nb=x=y\n", "t").unwrap();
        assert_eq!(kv.get("a"), Some("1"));
        assert_eq!(kv.get("b"), Some("x=y"));
        assert_eq!(kv.parse_opt::<u32>("a").unwrap(), Some(1));
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(matches!(KeyValues::parse("novalue\n", "t"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(KeyValues::parse("a=1\na=2", "t"), Err(ConfigError::Duplicate { line: 2, .. })));
        let kv = KeyValues::parse("a=zz", "t").unwrap();
        assert!(kv.parse_opt::<f64>("a").is_err());
        assert!(kv.reject_unknown(&["b"]).is_err());
    }
}
