//! `key = value` config files, merged under the explicit command line.

use std::path::Path;

use ftchain_core::{Error, Result};

use crate::args::Command;

/// Turns config lines into flags: `key = value` becomes `--key=value`,
/// `key = true` a bare `--key`, and `key = false` is dropped. Underscores in
/// keys map to dashes. Blank lines and lines starting with `#` are skipped.
pub fn parse_config(text: &str) -> Result<Vec<String>> {
    let mut flags = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Format {
            line: i + 1,
            msg: "expected `key = value`".into(),
        })?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() {
            return Err(Error::Format {
                line: i + 1,
                msg: "empty key".into(),
            });
        }
        match value {
            "true" => flags.push(format!("--{key}")),
            "false" => {}
            _ => flags.push(format!("--{key}={value}")),
        }
    }
    Ok(flags)
}

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--" {
            break;
        }
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

fn subcommand_index(args: &[String]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let a = args[i].as_str();
        if a == "--threads" || a == "--config" {
            i += 2;
            continue;
        }
        if Command::NAMES.contains(&a) {
            return Some(i);
        }
        i += 1;
    }
    None
}

/// Inserts the config file's flags right after the subcommand, so that flags
/// given on the command line come later and win.
pub fn merge_config(args: Vec<String>) -> Result<Vec<String>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let Some(at) = subcommand_index(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(Path::new(&path), e))?;
    let flags = parse_config(&text)?;
    let mut merged = args[..=at].to_vec();
    merged.extend(flags);
    merged.extend_from_slice(&args[at + 1..]);
    Ok(merged)
}
