//! Flat `key = value` configuration files.

use std::collections::BTreeMap;

use crate::error::{parse_error, Result};

/// Parses `key = value` lines; `#` starts a comment, keys are normalized to
/// lower case with `-` read as `_`.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or_else(|| parse_error(i + 1, format!("expected key=value, got {line:?}")))?;
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        if key.is_empty() {
            return Err(parse_error(i + 1, "empty key"));
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}
