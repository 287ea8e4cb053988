//! `--config path`: one `key=value` per line, keys are the long flag names
//! of the chosen subcommand (or the global `seed`, `output`, `threads`).
//! Values are spliced in ahead of the command line, so explicit flags win.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{ArgAction, Command};

use crate::Failure;

/// The `--config` path and the subcommand name, when both are present.
pub fn locate(cmd: &Command, argv: &[OsString]) -> Option<(PathBuf, String)> {
    let args: Vec<&str> = argv.iter().skip(1).map(|a| a.to_str().unwrap_or("")).collect();
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        if let Some(p) = a.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        } else if *a == "--config" {
            path = args.get(i + 1).map(PathBuf::from);
        }
    }
    let name = args.iter().find(|a| cmd.find_subcommand(a).is_some())?;
    Some((path?, name.to_string()))
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_lines(text: &str) -> Result<Vec<(String, String)>, Failure> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("config line {}: expected key=value, got '{line}'", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Rewrites `argv` with the config entries inserted right after the
/// subcommand name.
pub fn splice(
    cmd: &Command,
    argv: &[OsString],
    subcommand: &str,
    entries: &[(String, String)],
) -> Result<Vec<OsString>, Failure> {
    let sub =
        cmd.find_subcommand(subcommand).ok_or_else(|| Failure::Usage(format!("unknown subcommand '{subcommand}'")))?;
    let mut flags = Vec::new();
    for (key, value) in entries {
        let arg = sub
            .get_arguments()
            .chain(cmd.get_arguments().filter(|a| a.is_global_set()))
            .find(|a| a.get_long() == Some(key.as_str()) && key != "config" && key != "help")
            .ok_or_else(|| Failure::Usage(format!("unknown config key '{key}' for {subcommand}")))?;
        match arg.get_action() {
            ArgAction::SetTrue => match value.as_str() {
                "true" => flags.push(OsString::from(format!("--{key}"))),
                "false" => {}
                _ => return Err(Failure::Usage(format!("config key '{key}' takes true or false"))),
            },
            _ => flags.push(OsString::from(format!("--{key}={value}"))),
        }
    }
    let pos = argv
        .iter()
        .position(|a| a == subcommand)
        .ok_or_else(|| Failure::Usage("subcommand missing from the command line".into()))?;
    let mut out = argv[..=pos].to_vec();
    out.extend(flags);
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines() {
        let e = parse_lines("# c\n seed = 3 \n\nstate=ghz:4\n").unwrap();
        assert_eq!(e, vec![("seed".into(), "3".into()), ("state".into(), "ghz:4".into())]);
        assert!(parse_lines("oops").is_err());
    }
}
