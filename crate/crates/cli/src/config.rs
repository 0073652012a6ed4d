//! Flat `key = value` run configuration with command-line overrides.
//!
//! Blank lines and lines starting with `#` are ignored. Values resolve as
//! command-line flag, then config file, then built-in default.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::CliError;

/// Keys a config file may set.
pub const KEYS: [&str; 17] = [
    "records",
    "stations",
    "data",
    "checkpoint",
    "out",
    "arch",
    "seq_len",
    "seed",
    "epochs",
    "batch_size",
    "lr",
    "patience",
    "clip_norm",
    "train_years",
    "val_years",
    "test_years",
    "split",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    path: Option<PathBuf>,
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str, path: Option<&Path>) -> Result<Self, CliError> {
        let origin = path.map_or_else(|| "config".to_string(), |p| p.display().to_string());
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("{origin}:{}: expected `key = value`, found {line:?}", i + 1)))?;
            let key = key.trim().replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::usage(format!("{origin}:{}: unknown key {key:?}", i + 1)));
            }
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::usage(format!("{origin}:{}: key {key:?} set twice", i + 1)));
            }
        }
        Ok(Self {
            path: path.map(Path::to_path_buf),
            values,
        })
    }

    /// Reads `path`, or returns an empty config when no path is given.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read config file {}: {e}", path.display())))?;
        Self::parse(&text, Some(path))
    }

    /// Resolves `key` from the flag value, then this file.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>().map_err(|e| {
                    let origin = self.path.as_ref().map_or_else(|| "config".to_string(), |p| p.display().to_string());
                    CliError::usage(format!("{origin}: invalid value {v:?} for {key}: {e}"))
                })
            })
            .transpose()
    }

    pub fn pick_or<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }
}

/// An inclusive year range written `1957-2006` (or a single year).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct YearRange(pub i32, pub i32);

impl FromStr for YearRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |t: &str| t.trim().parse::<i32>().map_err(|_| format!("bad year {t:?} in {s:?}"));
        match s.split_once('-') {
            Some((a, b)) => Ok(Self(parse(a)?, parse(b)?)),
            None => {
                let y = parse(s)?;
                Ok(Self(y, y))
            }
        }
    }
}

impl std::fmt::Display for YearRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", self.0, self.1)
    }
}
