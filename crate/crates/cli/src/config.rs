//! Command settings: JSON config file merged under command-line flags.

use crate::exit::{fail, CliResult, WithCode, VALIDATION};
use crate::io::SCHEMA;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::path::Path;

/// Merges `flags` over the settings for `command` found in `config`.
///
/// The config file is a JSON object holding either the command's settings
/// directly or a section named after the command. Flags given on the
/// command line win.
pub fn resolve<T: Serialize + DeserializeOwned>(
    flags: &T,
    config: Option<&Path>,
    command: &str,
) -> CliResult<T> {
    let mut merged = match config {
        None => Map::new(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(anyhow::Error::from)
                .map_err(|e| e.context(format!("reading config {}", path.display())))
                .invalid()?;
            let v: Value = serde_json::from_str(&text)
                .map_err(|e| anyhow::anyhow!("parsing config {}: {e}", path.display()))
                .invalid()?;
            let Value::Object(mut obj) = v else {
                return fail(VALIDATION, "config file must hold a JSON object");
            };
            if let Some(s) = obj.remove("schema") {
                if s != SCHEMA {
                    return fail(VALIDATION, format!("config schema {s} is not {SCHEMA}"));
                }
            }
            match obj.remove(command) {
                Some(Value::Object(section)) => section,
                Some(_) => return fail(VALIDATION, format!("config section '{command}' must be an object")),
                None => obj,
            }
        }
    };
    let Value::Object(cli) = serde_json::to_value(flags).invalid()? else {
        unreachable!("settings serialize to objects")
    };
    for (k, v) in cli {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| anyhow::anyhow!("invalid settings for {command}: {e}"))
        .invalid()
}

/// Seed from settings, else from HETCOP_SEED.
pub fn seed(given: Option<u64>) -> CliResult<u64> {
    if let Some(s) = given {
        return Ok(s);
    }
    match std::env::var("HETCOP_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| anyhow::anyhow!("HETCOP_SEED='{v}' is not an unsigned integer"))
            .invalid(),
        Err(_) => fail(VALIDATION, "a seed is required: pass --seed or set HETCOP_SEED"),
    }
}

/// The fully resolved settings as echoed next to every output.
pub fn echo<T: Serialize>(command: &str, settings: &T) -> Value {
    json!({ "schema": SCHEMA, "command": command, "settings": settings })
}
