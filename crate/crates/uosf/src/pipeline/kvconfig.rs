//! Sectioned key-value configuration files.
//!
//! ```text
//! # comment
//! [section]
//! key = value
//! ```
//!
//! Consumers take typed values through [`KvFile`]; any key left untaken is
//! an unknown key and fails the run.

use crate::error::{Error, Result};
use std::collections::BTreeMap;

/// A parsed config file with take-tracking for fail-fast unknown keys.
#[derive(Debug, Clone, Default)]
pub struct KvFile {
    entries: BTreeMap<(String, String), String>,
    taken: std::collections::BTreeSet<(String, String)>,
}

impl KvFile {
    /// Parses config text. Syntax errors report 1-based line numbers.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section: Option<String> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| syntax(lineno, "unterminated section header"))?
                    .trim();
                if name.is_empty() {
                    return Err(syntax(lineno, "empty section name"));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| syntax(lineno, "expected 'key = value'"))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(syntax(lineno, "empty key"));
            }
            let section = section
                .clone()
                .ok_or_else(|| syntax(lineno, "key appears before any [section]"))?;
            let slot = (section, key.to_string());
            if entries.contains_key(&slot) {
                return Err(syntax(lineno, &format!("duplicate key '{key}'")));
            }
            entries.insert(slot, value.trim().to_string());
        }
        Ok(Self { entries, taken: Default::default() })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn take_raw(&mut self, section: &str, key: &str) -> Option<String> {
        let slot = (section.to_string(), key.to_string());
        let value = self.entries.get(&slot).cloned();
        if value.is_some() {
            self.taken.insert(slot);
        }
        value
    }

    pub fn take_str(&mut self, section: &str, key: &str) -> Option<String> {
        self.take_raw(section, key)
    }

    pub fn take_parsed<T>(&mut self, section: &str, key: &str) -> Result<Option<T>>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        match self.take_raw(section, key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|e| {
                Error::Config(format!("[{section}] {key} = '{raw}': {e}"))
            }),
        }
    }

    pub fn take_bool(&mut self, section: &str, key: &str) -> Result<Option<bool>> {
        match self.take_raw(section, key).as_deref() {
            None => Ok(None),
            Some("true") => Ok(Some(true)),
            Some("false") => Ok(Some(false)),
            Some(other) => Err(Error::Config(format!(
                "[{section}] {key} = '{other}': expected true or false"
            ))),
        }
    }

    /// Comma-separated list of parseable items.
    pub fn take_list<T>(&mut self, section: &str, key: &str) -> Result<Option<Vec<T>>>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        match self.take_raw(section, key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<T>()
                        .map_err(|e| Error::Config(format!("[{section}] {key} item '{s}': {e}")))
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    /// Fails if any key was never taken: unknown keys are errors.
    pub fn finish(self) -> Result<()> {
        let leftovers: Vec<String> = self
            .entries
            .keys()
            .filter(|slot| !self.taken.contains(*slot))
            .map(|(section, key)| format!("[{section}] {key}"))
            .collect();
        if leftovers.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("unknown keys: {}", leftovers.join(", "))))
        }
    }

    /// Serializes entries back to config text (sections sorted, keys sorted).
    pub fn render(entries: &[(&str, &str, String)]) -> String {
        let mut grouped: BTreeMap<&str, Vec<(&str, &String)>> = BTreeMap::new();
        for (section, key, value) in entries {
            grouped.entry(section).or_default().push((key, value));
        }
        let mut out = String::new();
        for (section, pairs) in grouped {
            out.push_str(&format!("[{section}]\n"));
            for (key, value) in pairs {
                out.push_str(&format!("{key} = {value}\n"));
            }
            out.push('\n');
        }
        out
    }
}

fn syntax(lineno: usize, msg: &str) -> Error {
    Error::Config(format!("line {}: {msg}", lineno + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_values() {
        let text = "\n# heading comment\n[spectral]\nsegment_length = 512\nwindow = hann\n\n[psd]\nr = 100\n";
        let mut kv = KvFile::parse(text).unwrap();
        assert_eq!(kv.take_parsed::<usize>("spectral", "segment_length").unwrap(), Some(512));
        assert_eq!(kv.take_str("spectral", "window").as_deref(), Some("hann"));
        assert_eq!(kv.take_parsed::<usize>("psd", "r").unwrap(), Some(100));
        kv.finish().unwrap();
    }

    #[test]
    fn unknown_keys_fail_fast() {
        let mut kv = KvFile::parse("[psd]\nr = 5\nbogus = 1\n").unwrap();
        let _ = kv.take_parsed::<usize>("psd", "r").unwrap();
        let err = kv.finish().unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn syntax_errors() {
        assert!(KvFile::parse("key = 1\n").is_err()); // before section
        assert!(KvFile::parse("[s]\nnovalue\n").is_err());
        assert!(KvFile::parse("[unterminated\n").is_err());
        assert!(KvFile::parse("[s]\nk = 1\nk = 2\n").is_err());
        assert!(KvFile::parse("[]\n").is_err());
    }

    #[test]
    fn typed_errors_name_the_key() {
        let mut kv = KvFile::parse("[psd]\nr = banana\n").unwrap();
        let err = kv.take_parsed::<usize>("psd", "r").unwrap_err();
        assert!(err.to_string().contains("[psd] r"), "{err}");
        let mut kv = KvFile::parse("[run]\ndb = yep\n").unwrap();
        assert!(kv.take_bool("run", "db").is_err());
    }

    #[test]
    fn lists_and_scientific_floats() {
        let mut kv =
            KvFile::parse("[simulate]\ncheckpoints = 499, 999,1499\nc = 1e5\n").unwrap();
        assert_eq!(
            kv.take_list::<usize>("simulate", "checkpoints").unwrap(),
            Some(vec![499, 999, 1499])
        );
        assert_eq!(kv.take_parsed::<f64>("simulate", "c").unwrap(), Some(1e5));
        kv.finish().unwrap();
    }

    #[test]
    fn render_round_trips() {
        let text = KvFile::render(&[
            ("psd", "r", "100".into()),
            ("psd", "q", "1".into()),
            ("spectral", "window", "hann".into()),
        ]);
        let mut kv = KvFile::parse(&text).unwrap();
        assert_eq!(kv.take_parsed::<usize>("psd", "r").unwrap(), Some(100));
        assert_eq!(kv.take_parsed::<usize>("psd", "q").unwrap(), Some(1));
        assert_eq!(kv.take_str("spectral", "window").as_deref(), Some("hann"));
        kv.finish().unwrap();
    }
}
