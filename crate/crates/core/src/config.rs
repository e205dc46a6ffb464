//! Key–value configuration files.
//!
//! ```text
//! # comment
//! [params]
//! omega_a = 4.22
//! j = 0.05
//!
//! [grid]
//! drive = 3.7, 4.7, 2001      # start, stop, count
//! ```
//!
//! Keys before the first header belong to the unnamed root section. Duplicate
//! sections, duplicate keys and (when checked) unknown keys are errors that
//! carry the offending line number.

use crate::params::FIELD_NAMES;
use crate::{Error, FrequencyGrid, Result, SystemParams};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    /// Header line; 0 for the root section.
    pub line: usize,
    pub entries: Vec<Entry>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigDoc {
    pub sections: Vec<Section>,
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn valid_name(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

impl ConfigDoc {
    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = ConfigDoc {
            sections: vec![Section {
                name: String::new(),
                line: 0,
                entries: Vec::new(),
            }],
        };
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(line, "unterminated section header"))?
                    .trim();
                if !valid_name(name) {
                    return Err(err(line, format!("invalid section name `{name}`")));
                }
                if let Some(prev) = doc.sections.iter().find(|s| s.name == name) {
                    return Err(err(
                        line,
                        format!("duplicate section [{name}] (first at line {})", prev.line),
                    ));
                }
                doc.sections.push(Section {
                    name: name.to_string(),
                    line,
                    entries: Vec::new(),
                });
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !valid_name(key) {
                return Err(err(line, format!("invalid key `{key}`")));
            }
            let section = doc.sections.last_mut().expect("root section");
            if let Some(prev) = section.entries.iter().find(|e| e.key == key) {
                return Err(err(
                    line,
                    format!("duplicate key `{key}` (first at line {})", prev.line),
                ));
            }
            section.entries.push(Entry {
                key: key.to_string(),
                value: value.to_string(),
                line,
            });
        }
        Ok(doc)
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn root(&self) -> &Section {
        &self.sections[0]
    }

    pub fn require(&self, name: &str) -> Result<&Section> {
        self.section(name)
            .ok_or_else(|| err(0, format!("missing section [{name}]")))
    }

    /// Fails on the first section not in `allowed` (the root always passes).
    pub fn check_sections(&self, allowed: &[&str]) -> Result<()> {
        for s in &self.sections[1..] {
            if !allowed.contains(&s.name.as_str()) {
                return Err(err(s.line, format!("unknown section [{}]", s.name)));
            }
        }
        Ok(())
    }

    /// Canonical text form; parses back to an equal document up to line numbers.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.sections {
            if s.name.is_empty() && s.entries.is_empty() {
                continue;
            }
            if !s.name.is_empty() {
                if !out.is_empty() {
                    out.push('\n');
                }
                out.push_str(&format!("[{}]\n", s.name));
            }
            for e in &s.entries {
                out.push_str(&format!("{} = {}\n", e.key, e.value));
            }
        }
        out
    }

    /// Merges `other` over `self`: sections and keys in `other` win.
    pub fn overlay(&self, other: &ConfigDoc) -> ConfigDoc {
        let mut out = self.clone();
        for s in &other.sections {
            match out.sections.iter_mut().find(|t| t.name == s.name) {
                Some(t) => {
                    for e in &s.entries {
                        match t.entries.iter_mut().find(|f| f.key == e.key) {
                            Some(f) => *f = e.clone(),
                            None => t.entries.push(e.clone()),
                        }
                    }
                }
                None => out.sections.push(s.clone()),
            }
        }
        out
    }
}

fn parse_f64(s: &str, line: usize, key: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| err(line, format!("`{key}`: `{}` is not a number", s.trim())))?;
    if !v.is_finite() {
        return Err(err(line, format!("`{key}`: value must be finite")));
    }
    Ok(v)
}

impl Section {
    pub fn entry(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for e in &self.entries {
            if !allowed.contains(&e.key.as_str()) {
                let where_ = if self.name.is_empty() {
                    String::new()
                } else {
                    format!(" in [{}]", self.name)
                };
                return Err(err(e.line, format!("unknown key `{}`{where_}", e.key)));
            }
        }
        Ok(())
    }

    fn missing(&self, key: &str) -> Error {
        err(self.line, format!("[{}] is missing `{key}`", self.name))
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.entry(key).map(|e| e.value.as_str())
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.entry(key)
            .map(|e| parse_f64(&e.value, e.line, key))
            .transpose()
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.f64(key)?.ok_or_else(|| self.missing(key))
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.entry(key)
            .map(|e| {
                e.value.parse::<usize>().map_err(|_| {
                    err(e.line, format!("`{key}`: `{}` is not a non-negative integer", e.value))
                })
            })
            .transpose()
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>> {
        self.entry(key)
            .map(|e| match e.value.as_str() {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                other => Err(err(e.line, format!("`{key}`: `{other}` is not a boolean"))),
            })
            .transpose()
    }

    /// Comma-separated numbers.
    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.entry(key)
            .map(|e| {
                e.value
                    .split(',')
                    .map(|s| parse_f64(s, e.line, key))
                    .collect()
            })
            .transpose()
    }

    /// `lo, hi` with `lo < hi`.
    pub fn interval(&self, key: &str) -> Result<Option<(f64, f64)>> {
        let Some(v) = self.list(key)? else {
            return Ok(None);
        };
        let line = self.entry(key).map_or(self.line, |e| e.line);
        match v[..] {
            [lo, hi] if lo < hi => Ok(Some((lo, hi))),
            _ => Err(err(line, format!("`{key}` must be `lo, hi` with lo < hi"))),
        }
    }

    /// `start, stop, count`.
    pub fn grid(&self, key: &str) -> Result<Option<FrequencyGrid>> {
        let Some(e) = self.entry(key) else {
            return Ok(None);
        };
        let parts: Vec<&str> = e.value.split(',').map(str::trim).collect();
        let [a, b, n] = parts[..] else {
            return Err(err(e.line, format!("`{key}` must be `start, stop, count`")));
        };
        let count = n
            .parse::<usize>()
            .map_err(|_| err(e.line, format!("`{key}`: count `{n}` is not an integer")))?;
        FrequencyGrid::new(parse_f64(a, e.line, key)?, parse_f64(b, e.line, key)?, count)
            .map(Some)
            .map_err(|x| err(e.line, x.to_string()))
    }

    pub fn require_grid(&self, key: &str) -> Result<FrequencyGrid> {
        self.grid(key)?.ok_or_else(|| self.missing(key))
    }

    /// Semicolon-separated rows of comma-separated numbers, each `width` long.
    pub fn rows(&self, key: &str, width: usize) -> Result<Option<Vec<Vec<f64>>>> {
        let Some(e) = self.entry(key) else {
            return Ok(None);
        };
        let mut out = Vec::new();
        for row in e.value.split(';').map(str::trim).filter(|r| !r.is_empty()) {
            let v: Vec<f64> = row
                .split(',')
                .map(|s| parse_f64(s, e.line, key))
                .collect::<Result<_>>()?;
            if v.len() != width {
                return Err(err(
                    e.line,
                    format!("`{key}`: each row needs {width} values, got `{row}`"),
                ));
            }
            out.push(v);
        }
        Ok(Some(out))
    }
}

/// Builds [`SystemParams`] from a section holding every field by name.
pub fn params_from_section(s: &Section) -> Result<SystemParams> {
    s.check_keys(&FIELD_NAMES)?;
    let mut v = [0.0; 8];
    for (slot, name) in v.iter_mut().zip(FIELD_NAMES) {
        *slot = s.require_f64(name)?;
    }
    SystemParams::from_array(v).map_err(|e| {
        let line = match &e {
            Error::Validation { field, .. } => s.entry(field).map_or(s.line, |x| x.line),
            _ => s.line,
        };
        err(line, e.to_string())
    })
}

/// Formats a float so that parsing it back yields the same value.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn params_to_section(p: &SystemParams, name: &str) -> String {
    let mut s = format!("[{name}]\n");
    for (key, v) in FIELD_NAMES.iter().zip(p.to_array()) {
        s.push_str(&format!("{key} = {}\n", fmt_f64(v)));
    }
    s
}
