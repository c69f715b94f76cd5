//! Option resolution: command-line flag, then `--config` file, then
//! `HSDCOV_SEED` (seed only), then the built-in default.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const SEED_ENV: &str = "HSDCOV_SEED";
pub const DEFAULT_SEED: u64 = 20_240_601;

/// Overwrites every `None` field of the first argument with the matching field of the second.
macro_rules! fill_from {
    ($into:expr, $from:expr; $($field:ident),+ $(,)?) => {
        $( if $into.$field.is_none() { $into.$field = $from.$field.take(); } )+
    };
}
pub(crate) use fill_from;

/// Parses a config file. A JSON summary written by a previous run is also
/// accepted: its `config` member is used.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let name = path.display();
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{name}: {e}")))?;
    let mut value: Value = serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{name}: {e}")))?;
    if let Some(inner) = value.get_mut("config") {
        value = inner.take();
    }
    serde_json::from_value(value).map_err(|e| CliError::Input(format!("{name}: {e}")))
}

pub fn seed(resolved: Option<u64>) -> CliResult<u64> {
    if let Some(s) = resolved {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Input(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

pub fn parse<T>(what: &str, s: &str) -> CliResult<T>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e| CliError::Input(format!("--{what}: {e}")))
}

/// Comma-separated list.
pub fn parse_list<T>(what: &str, s: &str) -> CliResult<Vec<T>>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    let items = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| parse(what, t.trim()))
        .collect::<CliResult<Vec<T>>>()?;
    if items.is_empty() {
        return Err(CliError::Input(format!("--{what}: empty list")));
    }
    Ok(items)
}

pub fn required<T>(what: &str, v: Option<T>) -> CliResult<T> {
    v.ok_or_else(|| CliError::Input(format!("missing required option --{what}")))
}
