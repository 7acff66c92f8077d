//! Plain-text numeric coefficient tables.
//!
//! The format is one `key = value` pair per line, `#` comments, blank lines
//! ignored. Keys are `[A-Za-z0-9_.]`; values are anything `f64` parses.
//! Writing is deterministic: header comments first, then keys in sorted
//! order, values printed with Rust's shortest round-trip formatting, so a
//! regenerated file is byte-identical when the numbers are.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KvError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: bad numeric value {text:?}")]
    BadValue { line: usize, text: String },
    #[error("line {line}: duplicate key {key:?}")]
    DuplicateKey { line: usize, key: String },
    #[error("missing key {0:?}")]
    Missing(String),
    #[error("key {key:?} holds {value}, not a non-negative integer")]
    NotInteger { key: String, value: f64 },
    #[error("io error for {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// An ordered `key = value` table of named coefficients.
#[derive(Debug, Clone, Default)]
pub struct KvFile {
    header: Vec<String>,
    map: BTreeMap<String, f64>,
}

impl KvFile {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets the comment lines written at the top of the file (without `#`).
    pub fn with_header(mut self, lines: &[&str]) -> Self {
        self.header = lines.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn parse(text: &str) -> Result<Self, KvError> {
        let mut kv = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            };
            let body = body.trim();
            if body.is_empty() {
                continue;
            }
            let (key, val) = body
                .split_once('=')
                .ok_or_else(|| KvError::Malformed { line, text: raw.to_string() })?;
            let key = key.trim();
            let val = val.trim();
            if key.is_empty()
                || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
            {
                return Err(KvError::Malformed { line, text: raw.to_string() });
            }
            let value: f64 = val
                .parse()
                .map_err(|_| KvError::BadValue { line, text: val.to_string() })?;
            if kv.map.insert(key.to_string(), value).is_some() {
                return Err(KvError::DuplicateKey { line, key: key.to_string() });
            }
        }
        Ok(kv)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, KvError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| KvError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), KvError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_string()).map_err(|source| KvError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn set(&mut self, key: &str, value: f64) {
        self.map.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Result<f64, KvError> {
        self.map.get(key).copied().ok_or_else(|| KvError::Missing(key.to_string()))
    }

    pub fn get_or(&self, key: &str, default: f64) -> f64 {
        self.map.get(key).copied().unwrap_or(default)
    }

    pub fn get_usize(&self, key: &str) -> Result<usize, KvError> {
        let v = self.get(key)?;
        if v >= 0.0 && v.fract() == 0.0 && v <= usize::MAX as f64 {
            Ok(v as usize)
        } else {
            Err(KvError::NotInteger { key: key.to_string(), value: v })
        }
    }

    pub fn contains(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    /// Values `prefix1, prefix2, ..` as a vector; stops at the first gap.
    /// Errors when `prefix1` itself is absent.
    pub fn series(&self, prefix: &str) -> Result<Vec<f64>, KvError> {
        let mut out = Vec::new();
        loop {
            let key = format!("{}{}", prefix, out.len() + 1);
            match self.map.get(&key) {
                Some(&v) => out.push(v),
                None => break,
            }
        }
        if out.is_empty() {
            return Err(KvError::Missing(format!("{prefix}1")));
        }
        Ok(out)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.map.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

impl fmt::Display for KvFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in &self.header {
            if line.is_empty() {
                writeln!(f, "#")?;
            } else {
                writeln!(f, "# {line}")?;
            }
        }
        if !self.header.is_empty() {
            writeln!(f)?;
        }
        for (k, v) in &self.map {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_blanks_and_inline_comments() {
        let text = "# header\n\nomega_1 = -0.57424  # trailing note\nomega_2 = 13.3893\n\nn_terms = 2\n";
        let kv = KvFile::parse(text).unwrap();
        assert_eq!(kv.len(), 3);
        assert_eq!(kv.get("omega_1").unwrap(), -0.57424);
        assert_eq!(kv.get_usize("n_terms").unwrap(), 2);
    }

    #[test]
    fn series_collects_contiguous_indices() {
        let kv = KvFile::parse("w_1 = 1\nw_2 = 2\nw_3 = 3\nw_5 = 9\n").unwrap();
        assert_eq!(kv.series("w_").unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(matches!(kv.series("q_"), Err(KvError::Missing(_))));
    }

    #[test]
    fn writing_is_deterministic_and_round_trips() {
        let mut kv = KvFile::new().with_header(&["demo table", "", "source: none"]);
        kv.set("b", 2.5e-3);
        kv.set("a", 1.0 / 3.0);
        kv.set("z.sub", -7.0);
        let text = kv.to_string();
        let again = KvFile::parse(&text).unwrap();
        // Values survive the round trip exactly; rewriting is stable.
        assert_eq!(KvFile::parse(&again.to_string()).unwrap().to_string(), again.to_string());
        assert_eq!(again.get("a").unwrap(), 1.0 / 3.0);
        assert_eq!(again.get("b").unwrap(), 2.5e-3);
        // Sorted key order, independent of insertion order.
        let lines: Vec<&str> = text.lines().filter(|l| l.contains('=')).collect();
        assert_eq!(lines, vec!["a = 0.3333333333333333", "b = 0.0025", "z.sub = -7"]);
    }

    #[test]
    fn malformed_lines_are_rejected_with_position() {
        let err = KvFile::parse("good = 1\nbad line\n").unwrap_err();
        assert!(matches!(err, KvError::Malformed { line: 2, .. }));
        let err = KvFile::parse("x = notanumber\n").unwrap_err();
        assert!(matches!(err, KvError::BadValue { line: 1, .. }));
        let err = KvFile::parse("x = 1\nx = 2\n").unwrap_err();
        assert!(matches!(err, KvError::DuplicateKey { line: 2, .. }));
    }

    #[test]
    fn integer_accessor_guards_fractions() {
        let kv = KvFile::parse("k = 3\nf = 2.5\n").unwrap();
        assert_eq!(kv.get_usize("k").unwrap(), 3);
        assert!(matches!(kv.get_usize("f"), Err(KvError::NotInteger { .. })));
    }
}
