//! Flat `key = value` configuration files. Command-line flags always win
//! over file entries.

use bubble_fpt::{Error, Result};
use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Default, Clone)]
pub struct Config {
    entries: HashMap<String, String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&raw)
    }

    pub fn parse(raw: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        for (idx, line) in raw.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidInput(format!("config line {}: expected key = value", idx + 1))
            })?;
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Config { entries })
    }

    pub fn get_raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    /// Typed lookup; a present but unparsable value is an input error.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                Error::InvalidInput(format!("config key '{key}': cannot parse '{v}'"))
            }),
        }
    }
}

/// Flag value if given, else config value, else None.
pub fn resolve<T: FromStr>(flag: Option<T>, cfg: &Config, key: &str) -> Result<Option<T>> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => cfg.get(key),
    }
}

/// Like [`resolve`] but the option is mandatory.
pub fn require<T: FromStr>(flag: Option<T>, cfg: &Config, key: &str) -> Result<T> {
    resolve(flag, cfg, key)?
        .ok_or_else(|| Error::InvalidInput(format!("missing required option --{key}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let cfg = Config::parse("# comment\nseed = 7\nhorizon=0.25\n").unwrap();
        assert_eq!(cfg.get::<u64>("seed").unwrap(), Some(7));
        assert_eq!(resolve(Some(9u64), &cfg, "seed").unwrap(), Some(9));
        assert_eq!(resolve::<u64>(None, &cfg, "seed").unwrap(), Some(7));
        assert_eq!(cfg.get::<f64>("horizon").unwrap(), Some(0.25));
        assert!(cfg.get::<f64>("missing").unwrap().is_none());
    }

    #[test]
    fn bad_lines_rejected() {
        assert!(Config::parse("just a line\n").is_err());
        let cfg = Config::parse("seed = x\n").unwrap();
        assert!(cfg.get::<u64>("seed").is_err());
    }
}
