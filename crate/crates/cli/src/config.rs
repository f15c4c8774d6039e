//! Flat `key = value` settings: recipe defaults, then the config file, then
//! command-line flags, each layer overriding the previous one.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

#[derive(Debug, Clone, Default)]
pub struct Settings(BTreeMap<String, String>);

fn normalize(key: &str) -> String {
    key.trim().replace('_', "-")
}

impl Settings {
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.0.insert(normalize(key), value.into());
    }

    pub fn set_opt(&mut self, key: &str, value: Option<impl ToString>) {
        if let Some(v) = value {
            self.set(key, v.to_string());
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(&normalize(key)).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| anyhow!("missing setting `{key}`"))
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        let raw = self.require(key)?;
        raw.parse().map_err(|e| anyhow!("bad value `{raw}` for `{key}`: {e}"))
    }

    pub fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: fmt::Display,
    {
        let raw = self.require(key)?;
        raw.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse().map_err(|e| anyhow!("bad entry `{s}` in `{key}`: {e}")))
            .collect()
    }

    /// Layers `other` on top of `self`.
    pub fn merge(&mut self, other: &Settings) {
        for (k, v) in &other.0 {
            self.0.insert(k.clone(), v.clone());
        }
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut out = Settings::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", no + 1))?;
            if k.trim().is_empty() {
                bail!("line {}: empty key", no + 1);
            }
            out.set(k, v.trim());
        }
        Ok(out)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse_text(&text).with_context(|| format!("in config {}", path.display()))
    }
}

/// A threshold given absolutely or relative to the population `MMD²` or to
/// the limiting score `(1 - s/(M-s-1))² MMD²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "factor", rename_all = "snake_case")]
pub enum Threshold {
    Absolute(f64),
    Mmd2(f64),
    Limit(f64),
}

impl Threshold {
    pub fn resolve(&self, mmd2: f64, limit: f64) -> f64 {
        match *self {
            Threshold::Absolute(v) => v,
            Threshold::Mmd2(f) => f * mmd2,
            Threshold::Limit(f) => f * limit,
        }
    }
}

impl std::str::FromStr for Threshold {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let (factor, base) = match s.split_once('*') {
            Some((f, b)) => (f.trim(), b.trim()),
            None if s == "mmd2" || s == "limit" => ("1", s),
            None => (s, ""),
        };
        let f: f64 = factor.parse().map_err(|_| format!("bad threshold `{s}`"))?;
        match base {
            "" => Ok(Threshold::Absolute(f)),
            "mmd2" => Ok(Threshold::Mmd2(f)),
            "limit" => Ok(Threshold::Limit(f)),
            other => Err(format!("unknown threshold base `{other}` (use mmd2 or limit)")),
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Absolute(v) => write!(f, "{v}"),
            Threshold::Mmd2(v) => write!(f, "{v}*mmd2"),
            Threshold::Limit(v) => write!(f, "{v}*limit"),
        }
    }
}

/// `mean,variance`.
pub fn parse_gaussian(s: &str) -> Result<(f64, f64)> {
    let (m, v) = s.split_once(',').ok_or_else(|| anyhow!("expected `mean,variance`, got `{s}`"))?;
    Ok((m.trim().parse()?, v.trim().parse()?))
}
