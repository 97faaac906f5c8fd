//! Line-oriented `key = value` config files with `[section]` headers.
//! Unknown keys are rejected; every error names the key and its location.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

#[derive(Debug)]
pub struct ConfigError {
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(message: String) -> ConfigError {
    ConfigError { message }
}

#[derive(Clone, Debug)]
struct Entry {
    value: String,
    line: usize,
    used: bool,
}

/// A parsed config file; keys are addressed as `section.key`.
#[derive(Clone, Debug)]
pub struct Config {
    pub source: String,
    entries: BTreeMap<String, Entry>,
    raw: String,
}

impl Config {
    pub fn parse(text: &str, source: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| {
                    err(format!("{source}:{line_no}: unterminated section header `{line}`"))
                })?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                err(format!("{source}:{line_no}: expected `key = value`, got `{line}`"))
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(err(format!("{source}:{line_no}: empty key")));
            }
            let full = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            if entries
                .insert(
                    full.clone(),
                    Entry {
                        value: value.trim().to_string(),
                        line: line_no,
                        used: false,
                    },
                )
                .is_some()
            {
                return Err(err(format!("{source}:{line_no}: duplicate key `{full}`")));
            }
        }
        Ok(Config {
            source: source.to_string(),
            entries,
            raw: text.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn raw_text(&self) -> &str {
        &self.raw
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.get_mut(key).map(|e| {
            e.used = true;
            e.value.clone()
        })
    }

    pub fn opt_str(&mut self, key: &str) -> Option<String> {
        self.take(key)
    }

    pub fn str(&mut self, key: &str) -> Result<String, ConfigError> {
        self.take(key)
            .ok_or_else(|| err(format!("{}: missing required key `{key}`", self.source)))
    }

    fn parse_as<T: std::str::FromStr>(&self, key: &str, value: &str, what: &str) -> Result<T, ConfigError> {
        let line = self.entries.get(key).map(|e| e.line).unwrap_or(0);
        value.parse().map_err(|_| {
            err(format!(
                "{}:{line}: key `{key}` expects {what}, got `{value}`",
                self.source
            ))
        })
    }

    pub fn f64(&mut self, key: &str) -> Result<f64, ConfigError> {
        let v = self.str(key)?;
        self.parse_as(key, &v, "a number")
    }

    pub fn opt_f64(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.take(key) {
            Some(v) => Ok(Some(self.parse_as(key, &v, "a number")?)),
            None => Ok(None),
        }
    }

    pub fn usize(&mut self, key: &str) -> Result<usize, ConfigError> {
        let v = self.str(key)?;
        self.parse_as(key, &v, "a non-negative integer")
    }

    pub fn opt_usize(&mut self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.take(key) {
            Some(v) => Ok(Some(self.parse_as(key, &v, "a non-negative integer")?)),
            None => Ok(None),
        }
    }

    pub fn u64(&mut self, key: &str) -> Result<u64, ConfigError> {
        let v = self.str(key)?;
        self.parse_as(key, &v, "a non-negative integer")
    }

    pub fn opt_u64(&mut self, key: &str) -> Result<Option<u64>, ConfigError> {
        match self.take(key) {
            Some(v) => Ok(Some(self.parse_as(key, &v, "a non-negative integer")?)),
            None => Ok(None),
        }
    }

    /// Comma-separated widths, e.g. `50,20,20,10`.
    pub fn widths(&mut self, key: &str) -> Result<Vec<usize>, ConfigError> {
        let v = self.str(key)?;
        self.widths_from(key, &v)
    }

    pub fn opt_widths(&mut self, key: &str) -> Result<Option<Vec<usize>>, ConfigError> {
        match self.take(key) {
            Some(v) => Ok(Some(self.widths_from(key, &v)?)),
            None => Ok(None),
        }
    }

    fn widths_from(&self, key: &str, v: &str) -> Result<Vec<usize>, ConfigError> {
        v.split(',')
            .map(|part| self.parse_as(key, part.trim(), "comma-separated layer widths"))
            .collect()
    }

    /// Mark every key of a section as consumed (for commands that reuse a
    /// config file but only care about some sections).
    pub fn ignore_section(&mut self, section: &str) {
        let prefix = format!("{section}.");
        for (key, entry) in self.entries.iter_mut() {
            if key.starts_with(&prefix) {
                entry.used = true;
            }
        }
    }

    /// Error if any key was never consumed (unknown-key rejection).
    pub fn finish(&self) -> Result<(), ConfigError> {
        let mut unknown: Vec<(&String, &Entry)> =
            self.entries.iter().filter(|(_, e)| !e.used).collect();
        unknown.sort_by_key(|(_, e)| e.line);
        if let Some((key, entry)) = unknown.first() {
            return Err(err(format!(
                "{}:{}: unknown key `{key}`",
                self.source, entry.line
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\n# comment\n[model]\nkind = deeponet\nsensors = 50\nbranch = 50, 20, 10\n\n[training]\nlr0 = 1e-3\n";

    #[test]
    fn parses_sections_and_types() {
        let mut cfg = Config::parse(SAMPLE, "test.cfg").unwrap();
        assert_eq!(cfg.str("model.kind").unwrap(), "deeponet");
        assert_eq!(cfg.usize("model.sensors").unwrap(), 50);
        assert_eq!(cfg.widths("model.branch").unwrap(), vec![50, 20, 10]);
        assert_eq!(cfg.f64("training.lr0").unwrap(), 1e-3);
        cfg.finish().unwrap();
    }

    #[test]
    fn unknown_key_named_with_location() {
        let mut cfg = Config::parse(SAMPLE, "test.cfg").unwrap();
        let _ = cfg.str("model.kind");
        let e = cfg.finish().unwrap_err().to_string();
        assert!(e.contains("unknown key"), "{e}");
        assert!(e.contains("model.sensors"), "{e}");
        assert!(e.contains("test.cfg:5"), "{e}");
    }

    #[test]
    fn bad_value_names_key_and_line() {
        let mut cfg = Config::parse("[a]\nx = hello\n", "f.cfg").unwrap();
        let e = cfg.usize("a.x").unwrap_err().to_string();
        assert!(e.contains("f.cfg:2") && e.contains("`a.x`"), "{e}");
    }

    #[test]
    fn duplicate_and_malformed_lines_rejected() {
        assert!(Config::parse("[a]\nx = 1\nx = 2\n", "f").is_err());
        assert!(Config::parse("just a line\n", "f").is_err());
        assert!(Config::parse("[unterminated\n", "f").is_err());
    }

    #[test]
    fn missing_required_key_is_an_error() {
        let mut cfg = Config::parse("[a]\nx = 1\n", "f").unwrap();
        assert!(cfg.str("a.y").unwrap_err().to_string().contains("`a.y`"));
    }
}
