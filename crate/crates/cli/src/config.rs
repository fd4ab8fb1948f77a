//! Flat key-value config files and the table-size cap.
//!
//! A config file holds `key value` pairs, one per line, `#` comments
//! allowed. Keys are the long option names of the subcommand without
//! leading dashes. Values from the file fill in options the command line
//! left unset; explicit flags always win.

use std::collections::HashMap;

pub struct Config {
    values: HashMap<String, String>,
}

impl Config {
    pub fn empty() -> Self {
        Self { values: HashMap::new() }
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.splitn(2, char::is_whitespace);
            let key = parts.next().unwrap_or("").trim();
            let value = parts.next().unwrap_or("").trim();
            if key.is_empty() || value.is_empty() {
                return Err(format!("config line {}: expected `key value`", lineno + 1));
            }
            values.insert(key.to_string(), value.to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: Option<&str>) -> Result<Self, String> {
        match path {
            None => Ok(Self::empty()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| format!("cannot read config {p}: {e}"))?;
                Self::parse(&text)
            }
        }
    }

    /// Effective value: explicit flag, then config file, then default.
    pub fn resolve<T: std::str::FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
        default: T,
    ) -> Result<T, String> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.values.get(key) {
            Some(raw) => raw
                .parse::<T>()
                .map_err(|_| format!("config key '{key}': cannot parse '{raw}'")),
            None => Ok(default),
        }
    }

    /// Like [`resolve`] but without a default; `None` when absent.
    pub fn resolve_opt<T: std::str::FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
    ) -> Result<Option<T>, String> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| format!("config key '{key}': cannot parse '{raw}'")),
            None => Ok(None),
        }
    }
}

/// Sieve-size cap from the environment; tables larger than this are
/// refused up front.
pub fn table_limit_cap() -> u64 {
    std::env::var("DISPERSION_LAB_TABLE_LIMIT")
        .ok()
        .and_then(|v| v.parse::<u64>().ok())
        .unwrap_or(1 << 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_resolve() {
        let c = Config::parse("m 100\nq 7 # window\n\n# comment\neps 0.01\n").unwrap();
        assert_eq!(c.resolve::<u64>(None, "m", 5).unwrap(), 100);
        assert_eq!(c.resolve::<u64>(Some(3), "m", 5).unwrap(), 3);
        assert_eq!(c.resolve::<u64>(None, "missing", 5).unwrap(), 5);
        assert_eq!(c.resolve::<f64>(None, "eps", 0.5).unwrap(), 0.01);
        assert!(Config::parse("loner\n").is_err());
        assert!(c.resolve::<u64>(None, "eps", 1).is_err());
    }
}
