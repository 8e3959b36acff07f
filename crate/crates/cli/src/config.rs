//! Flat `key = value` run files. Flags given on the command line win.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use whittaker::{Error, Result};

pub const KEYS: [&str; 14] = [
    "energy-ev",
    "spread-ev",
    "tmax-fs",
    "grid-ppw",
    "rel-tol",
    "out-dir",
    "seed",
    "threads",
    "kappa",
    "x-min",
    "x-max",
    "points",
    "times",
    "resamples",
];

/// Parses a run file. Blank lines, `#`/`;` comments and `[section]` headers are skipped;
/// keys may use `-` or `_`.
pub fn parse(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') || line.starts_with('[') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Domain(format!("config line {}: expected key = value", i + 1)))?;
        let key = k.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Domain(format!("config line {}: unknown key '{}'", i + 1, k.trim())));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Domain(format!("cannot read config {}: {e}", path.display())))?;
    parse(&text)
}

/// Values from flags, falling back to the run file.
#[derive(Debug, Default)]
pub struct Settings {
    file: BTreeMap<String, String>,
}

impl Settings {
    pub fn new(file: BTreeMap<String, String>) -> Self {
        Settings { file }
    }

    fn from_file<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.file.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Domain(format!("config: cannot parse {key} = {v}"))),
        }
    }

    pub fn get<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.from_file(key),
        }
    }

    pub fn require<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> Result<T> {
        self.get(flag, key)?
            .ok_or_else(|| Error::Domain(format!("--{key} is required")))
    }

    pub fn or<T: std::str::FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }

    pub fn path(&self, flag: Option<PathBuf>, key: &str, default: &str) -> PathBuf {
        flag.or_else(|| self.file.get(key).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(default))
    }

    pub fn list(&self, flag: Option<String>, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(s) = flag.or_else(|| self.file.get(key).cloned()) else {
            return Ok(None);
        };
        s.split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Domain(format!("--{key}: cannot parse '{v}'")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_normalises_keys() {
        let m = parse("# run\n[decay]\nenergy_ev = 1.0\nspread-ev=0.1\n\n; done\n").unwrap();
        assert_eq!(m["energy-ev"], "1.0");
        assert_eq!(m["spread-ev"], "0.1");
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(parse("energy = 1").is_err());
        assert!(parse("energy-ev 1").is_err());
    }

    #[test]
    fn flags_override_file() {
        let s = Settings::new(parse("energy-ev = 2\ntimes = 0, 1.5").unwrap());
        assert_eq!(s.require(Some(1.0), "energy-ev").unwrap(), 1.0);
        assert_eq!(s.require::<f64>(None, "energy-ev").unwrap(), 2.0);
        assert_eq!(s.list(None, "times").unwrap(), Some(vec![0.0, 1.5]));
        assert!(s.require::<f64>(None, "spread-ev").is_err());
    }
}
