//! JSON run configuration. A file holds flat keys for one subcommand plus the
//! global keys `threads` and `out_dir`; command-line flags win over the file.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, Context, Result};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{Map, Value};

/// `jx,jy,jz` on the command line, `[jx, jy, jz]` in JSON.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct Vec3Arg(pub [f64; 3]);

impl FromStr for Vec3Arg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("expected three comma-separated numbers, got {s:?}"));
        }
        let mut v = [0.0f64; 3];
        for (x, p) in v.iter_mut().zip(&parts) {
            *x = p.parse().map_err(|_| format!("bad number {p:?}"))?;
            if !x.is_finite() {
                return Err(format!("non-finite component {p:?}"));
            }
        }
        Ok(Vec3Arg(v))
    }
}

/// Comma-separated list of group numbers.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Groups(pub Vec<usize>);

impl FromStr for Groups {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| format!("bad group {t:?}")))
            .collect::<std::result::Result<_, _>>()
            .map(Groups)
    }
}

#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalKeys {
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

/// Subcommands without keys of their own.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoKeys {}

/// Splits a config file into the global keys and the subcommand keys.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<(GlobalKeys, T)> {
    let Some(path) = path else {
        return Ok((GlobalKeys::default(), T::default()));
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    let Value::Object(mut map) = value else {
        return Err(anyhow!("config {} must be a JSON object", path.display()));
    };
    let mut global = Map::new();
    for key in ["threads", "out_dir"] {
        if let Some(v) = map.remove(key) {
            global.insert(key.into(), v);
        }
    }
    let g: GlobalKeys = serde_json::from_value(Value::Object(global))?;
    let t: T = serde_json::from_value(Value::Object(map)).with_context(|| format!("config {}", path.display()))?;
    Ok((g, t))
}

/// Field-by-field `flag.or(file)` for structs of options.
macro_rules! merge_options {
    ($flags:expr, $file:expr, $ty:ident { $($f:ident),* $(,)? }) => {{
        let (a, b) = ($flags, $file);
        $ty { $($f: a.$f.or(b.$f)),* }
    }};
}
pub(crate) use merge_options;
