//! `--config` files: a JSON object whose keys are long flag names.
//!
//! The object is turned into flags and spliced in right after the subcommand
//! path. Keys whose flag already appears on the command line are dropped, so
//! the command line wins.

use std::path::Path;

use grasslearn::{Error, Result};
use serde_json::Value;

fn flag_tokens(key: &str, value: &Value, path: &Path) -> Result<Vec<String>> {
    let flag = format!("--{}", key.replace('_', "-"));
    let scalar = |v: &Value| -> Result<String> {
        match v {
            Value::String(s) => Ok(s.clone()),
            Value::Number(n) => Ok(n.to_string()),
            Value::Bool(b) => Ok(b.to_string()),
            _ => Err(Error::Parse {
                path: path.to_owned(),
                message: format!("key '{key}': nested objects are not supported"),
            }),
        }
    };
    Ok(match value {
        Value::Null | Value::Bool(false) => Vec::new(),
        Value::Bool(true) => vec![flag],
        Value::Array(items) => {
            let parts = items.iter().map(scalar).collect::<Result<Vec<_>>>()?;
            vec![flag, parts.join(",")]
        }
        v => vec![flag, scalar(v)?],
    })
}

/// Subcommand names in `argv`, outermost first, as clap resolved them.
fn subcommand_path(argv: &[String]) -> Vec<String> {
    use clap::CommandFactory;
    let mut path = Vec::new();
    let Ok(mut m) = crate::Cli::command().try_get_matches_from(argv) else {
        return path;
    };
    while let Some((name, sub)) = m.subcommand() {
        path.push(name.to_string());
        let next = sub.clone();
        m = next;
    }
    path
}

/// `argv` with the config file's flags inserted after the subcommand path.
pub fn merge(argv: &[String], config: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(config).map_err(|e| Error::Parse {
        path: config.to_owned(),
        message: e.to_string(),
    })?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: config.to_owned(),
        message: e.to_string(),
    })?;
    let Value::Object(map) = value else {
        return Err(Error::Parse {
            path: config.to_owned(),
            message: "config must be a JSON object".into(),
        });
    };
    let given = |flag: &str| {
        argv.iter().any(|a| {
            a == flag
                || a.strip_prefix(flag)
                    .is_some_and(|rest| rest.starts_with('='))
        })
    };
    let mut tokens = Vec::new();
    for (key, v) in &map {
        if key == "config" || given(&format!("--{}", key.replace('_', "-"))) {
            continue;
        }
        tokens.extend(flag_tokens(key, v, config)?);
    }

    let path = subcommand_path(argv);
    let mut at = 1;
    for name in &path {
        match argv[at..].iter().position(|a| a == name) {
            Some(i) => at += i + 1,
            None => break,
        }
    }
    let mut merged = argv[..at].to_vec();
    merged.extend(tokens);
    merged.extend_from_slice(&argv[at..]);
    Ok(merged)
}
