//! Flat `key = value` configuration files for `tukey bench`.
//!
//! Keys are the long flag names without the leading dashes (`n`, `tau`,
//! `methods`, ...). Blank lines and lines starting with `#` are ignored.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use tukey_core::Error;

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut entries = BTreeMap::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parameter(format!("config line {}: expected key = value", k + 1)))?;
            let key = key.trim().trim_start_matches("--").to_string();
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::Parameter(format!("config line {}: duplicate key {key:?}", k + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Rejects keys outside `known`, so typos do not pass silently.
    pub fn check_keys(&self, known: &[&str]) -> Result<(), Error> {
        match self.entries.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(Error::Parameter(format!("unknown config key {k:?}"))),
            None => Ok(()),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, Error> {
        self.entries
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::Parameter(format!("config key {key}: cannot parse {v:?}")))
            })
            .transpose()
    }

    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, Error> {
        self.entries
            .get(key)
            .map(|v| parse_list(v).map_err(|e| Error::Parameter(format!("config key {key}: {e}"))))
            .transpose()
    }
}

/// Comma-separated list, whitespace around items ignored.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|_| format!("cannot parse list item {t:?}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_pairs() {
        let c = Config::parse("# plan\nn = 500\n--tau=2.5\nsizes = 4, 6,8\n\n").unwrap();
        assert_eq!(c.get::<usize>("n").unwrap(), Some(500));
        assert_eq!(c.get::<f64>("tau").unwrap(), Some(2.5));
        assert_eq!(c.get_list::<usize>("sizes").unwrap(), Some(vec![4, 6, 8]));
        assert_eq!(c.get::<usize>("d").unwrap(), None);
        assert!(c.check_keys(&["n", "tau", "sizes"]).is_ok());
        assert!(c.check_keys(&["n"]).is_err());
    }

    #[test]
    fn rejects_garbage() {
        assert!(Config::parse("n 500").is_err());
        assert!(Config::parse("n = 1\nn = 2").is_err());
        assert!(Config::parse("n = x").unwrap().get::<usize>("n").is_err());
    }
}
