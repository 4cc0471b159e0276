//! Flat `key = value` config files that mirror command-line flags.
//!
//! Each key becomes `--key value` (a value of `true` becomes a bare
//! `--key`, `false` drops the key). The generated flags are inserted right
//! after the subcommand name, so flags given on the command line win.

use std::path::Path;

use anyhow::{bail, Context, Result};

pub fn parse_config(text: &str) -> Result<Vec<String>> {
    let mut args = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config line {}: expected key = value, got '{}'", n + 1, raw.trim());
        };
        let key = key.trim().trim_start_matches("--");
        let value = value.trim();
        if key.is_empty() {
            bail!("config line {}: empty key", n + 1);
        }
        match value {
            "true" => args.push(format!("--{key}")),
            "false" => {}
            v => {
                args.push(format!("--{key}"));
                args.push(v.to_string());
            }
        }
    }
    Ok(args)
}

/// Splices flags from `--config FILE` (if present) into `argv`.
pub fn expand_config(argv: Vec<String>) -> Result<Vec<String>> {
    let Some(pos) = argv.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(argv);
    };
    let (path, consumed) = match argv[pos].strip_prefix("--config=") {
        Some(p) => (p.to_string(), 1),
        None => match argv.get(pos + 1) {
            Some(p) => (p.clone(), 2),
            None => return Ok(argv),
        },
    };
    let text = std::fs::read_to_string(Path::new(&path)).with_context(|| format!("reading config file {path}"))?;
    let extra = parse_config(&text)?;
    let mut rest: Vec<String> = argv[..pos].to_vec();
    rest.extend_from_slice(&argv[pos + consumed..]);
    // The subcommand is the first non-flag argument after the program name.
    let sub = rest
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, a)| !a.starts_with('-'))
        .map(|(i, _)| i);
    match sub {
        Some(i) => {
            let mut out = rest[..=i].to_vec();
            out.extend(extra);
            out.extend_from_slice(&rest[i + 1..]);
            Ok(out)
        }
        None => Ok(rest),
    }
}
