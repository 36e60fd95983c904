//! Flat `key=value` configuration with command-line overrides.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{AppError, AppResult};

/// Parses a config file. Blank lines and lines starting with `#` are
/// skipped; keys may not repeat.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value", n + 1))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(format!("line {}: empty key", n + 1));
        }
        if out.insert(k.to_string(), v.trim().to_string()).is_some() {
            return Err(format!("line {}: duplicate key {k}", n + 1));
        }
    }
    Ok(out)
}

/// Resolves settings in the order flag, config file, built-in default and
/// records every resolved value for echoing into output headers.
#[derive(Debug, Default)]
pub struct Settings {
    file: BTreeMap<String, String>,
    used: BTreeSet<String>,
    echo: Vec<(String, String)>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> AppResult<Self> {
        let file = match path {
            None => BTreeMap::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| AppError::io(p, e))?;
                parse_config(&text).map_err(|m| AppError::Usage(format!("{}: {m}", p.display())))?
            }
        };
        Ok(Self {
            file,
            ..Self::default()
        })
    }

    pub fn from_map(file: BTreeMap<String, String>) -> Self {
        Self {
            file,
            ..Self::default()
        }
    }

    /// Resolved value or `None` when neither the flag nor the file sets it.
    pub fn optional<T>(&mut self, key: &str, flag: Option<T>) -> AppResult<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(raw) => Some(
                    raw.parse::<T>()
                        .map_err(|e| AppError::Usage(format!("config key {key}={raw}: {e}")))?,
                ),
                None => None,
            },
        };
        self.used.insert(key.to_string());
        if let Some(v) = &value {
            self.echo.push((key.to_string(), v.to_string()));
        }
        Ok(value)
    }

    pub fn value<T>(&mut self, key: &str, flag: Option<T>, default: T) -> AppResult<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        match self.optional(key, flag)? {
            Some(v) => Ok(v),
            None => {
                self.echo.push((key.to_string(), default.to_string()));
                Ok(default)
            }
        }
    }

    pub fn required<T>(&mut self, key: &str, flag: Option<T>) -> AppResult<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        self.optional(key, flag)?.ok_or_else(|| {
            AppError::Usage(format!(
                "missing required setting --{}",
                key.replace('_', "-")
            ))
        })
    }

    pub fn optional_path(
        &mut self,
        key: &str,
        flag: Option<PathBuf>,
    ) -> AppResult<Option<PathBuf>> {
        let raw = self.optional(key, flag.map(|p| p.to_string_lossy().into_owned()))?;
        Ok(raw.map(PathBuf::from))
    }

    pub fn required_path(&mut self, key: &str, flag: Option<PathBuf>) -> AppResult<PathBuf> {
        self.optional_path(key, flag)?.ok_or_else(|| {
            AppError::Usage(format!(
                "missing required setting --{}",
                key.replace('_', "-")
            ))
        })
    }

    /// Fails on config keys the subcommand never asked for.
    pub fn finish(&self) -> AppResult<()> {
        match self.file.keys().find(|k| !self.used.contains(*k)) {
            Some(k) => Err(AppError::Usage(format!("unknown config key {k}"))),
            None => Ok(()),
        }
    }

    pub fn echo(&self) -> &[(String, String)] {
        &self.echo
    }

    /// `# key=value` lines, one per resolved setting.
    pub fn header(&self) -> String {
        self.echo
            .iter()
            .map(|(k, v)| format!("# {k}={v}\n"))
            .collect()
    }
}
