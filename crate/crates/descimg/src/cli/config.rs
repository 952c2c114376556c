//! `--config` files: TOML whose keys are flag names (with `-` or `_`).
//!
//! ```toml
//! manifest = "data/manifest.csv"   # any subcommand taking --manifest
//! log-level = "info"
//!
//! [evaluate]
//! scores = "runs/scores"
//! format = "csv"
//! ```
//!
//! Values are turned into flags and inserted after the subcommand name,
//! skipping every flag already present on the command line. Relative paths
//! are taken relative to the working directory.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{ArgAction, CommandFactory};

use super::args::Cli;

const GLOBAL_VALUE_FLAGS: [&str; 2] = ["config", "log-level"];

struct Scan {
    config: Option<PathBuf>,
    subcommand: Option<(usize, String)>,
    given: Vec<String>,
}

fn scan(argv: &[String], subcommands: &[String]) -> Scan {
    let mut out = Scan {
        config: None,
        subcommand: None,
        given: Vec::new(),
    };
    let mut i = 1;
    while i < argv.len() {
        let tok = &argv[i];
        if tok == "--" {
            break;
        }
        if let Some(flag) = tok.strip_prefix("--") {
            let (name, inline) = match flag.split_once('=') {
                Some((n, v)) => (n, Some(v.to_string())),
                None => (flag, None),
            };
            out.given.push(name.to_string());
            if GLOBAL_VALUE_FLAGS.contains(&name) {
                let value = match inline {
                    Some(v) => Some(v),
                    None => {
                        i += 1;
                        argv.get(i).cloned()
                    }
                };
                if name == "config" {
                    out.config = value.map(PathBuf::from);
                }
            }
        } else if out.subcommand.is_none() && subcommands.contains(tok) {
            out.subcommand = Some((i, tok.clone()));
        }
        i += 1;
    }
    out
}

fn scalar(key: &str, value: &toml::Value) -> Result<String, String> {
    match value {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(n) => Ok(n.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        toml::Value::Datetime(d) => Ok(d.to_string()),
        _ => Err(format!("config key `{key}` needs a single value")),
    }
}

/// Returns `argv` with the config file's values spliced in.
pub fn apply(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let text_argv: Vec<String> = argv
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let command = Cli::command();
    let subcommands: Vec<String> = command
        .get_subcommands()
        .map(|s| s.get_name().to_string())
        .collect();
    let scan = scan(&text_argv, &subcommands);
    let (Some(path), Some((position, name))) = (scan.config, scan.subcommand) else {
        return Ok(argv);
    };

    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| format!("invalid config {}: {e}", path.display()))?;

    let flags_of = |sub: &str| -> BTreeMap<String, ArgAction> {
        command
            .find_subcommand(sub)
            .map(|s| {
                s.get_arguments()
                    .filter_map(|a| a.get_long().map(|l| (l.to_string(), a.get_action().clone())))
                    .collect()
            })
            .unwrap_or_default()
    };
    let known_anywhere = |key: &str| {
        key == "log-level" || subcommands.iter().any(|s| flags_of(s).contains_key(key))
    };
    let own = flags_of(&name);

    let mut chosen: BTreeMap<String, toml::Value> = BTreeMap::new();
    for (raw_key, value) in &table {
        let key = raw_key.replace('_', "-");
        if let toml::Value::Table(section) = value {
            if !subcommands.contains(&key) {
                return Err(format!("unknown config section [{raw_key}]"));
            }
            let section_flags = flags_of(&key);
            for k in section.keys() {
                let k = k.replace('_', "-");
                if k != "log-level" && !section_flags.contains_key(&k) {
                    return Err(format!("unknown config key `{k}` in [{raw_key}]"));
                }
            }
            continue;
        }
        if key == "config" {
            return Err("config files cannot name another config".into());
        }
        if !known_anywhere(&key) {
            return Err(format!("unknown config key `{raw_key}`"));
        }
        if key == "log-level" || own.contains_key(&key) {
            chosen.insert(key, value.clone());
        }
    }
    if let Some(toml::Value::Table(section)) = table.get(&name) {
        for (k, v) in section {
            chosen.insert(k.replace('_', "-"), v.clone());
        }
    }

    let mut injected: Vec<OsString> = Vec::new();
    for (key, value) in chosen {
        if scan.given.contains(&key) {
            continue;
        }
        let flag = format!("--{key}");
        match own.get(&key) {
            Some(ArgAction::SetTrue) => match value {
                toml::Value::Boolean(true) => injected.push(flag.into()),
                toml::Value::Boolean(false) => {}
                _ => return Err(format!("config key `{key}` must be true or false")),
            },
            Some(ArgAction::Append) => {
                let values = match &value {
                    toml::Value::Array(items) => items.clone(),
                    other => vec![other.clone()],
                };
                for v in &values {
                    injected.push(flag.clone().into());
                    injected.push(scalar(&key, v)?.into());
                }
            }
            _ => {
                injected.push(flag.into());
                injected.push(scalar(&key, &value)?.into());
            }
        }
    }
    tracing::debug!(config = %path.display(), ?injected, "config applied");

    let mut merged = argv;
    merged.splice(position + 1..position + 1, injected);
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn argv(items: &[&str]) -> Vec<OsString> {
        items.iter().map(OsString::from).collect()
    }

    fn strings(v: Vec<OsString>) -> Vec<String> {
        v.into_iter().map(|s| s.into_string().unwrap()).collect()
    }

    fn config(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn flags_override_file_values() {
        let f = config("manifest = \"m.csv\"\n[evaluate]\nformat = \"csv\"\nscores = \"s\"\n");
        let p = f.path().to_str().unwrap();
        let out = strings(
            apply(argv(&["descimg", "--config", p, "evaluate", "--format", "json"])).unwrap(),
        );
        assert_eq!(
            out,
            ["descimg", "--config", p, "evaluate", "--manifest", "m.csv", "--scores", "s", "--format", "json"]
        );
    }

    #[test]
    fn shared_keys_are_ignored_where_absent() {
        let f = config("manifest = \"m.csv\"\nsnapshots = \"snaps\"\n");
        let p = f.path().to_str().unwrap();
        let out = strings(apply(argv(&["descimg", "evaluate", "--config", p])).unwrap());
        assert_eq!(out, ["descimg", "evaluate", "--manifest", "m.csv", "--config", p]);
    }

    #[test]
    fn repeated_flags_take_arrays() {
        let f = config("[classify]\nmetric = [\"A15\", \"S05\"]\n");
        let p = f.path().to_str().unwrap();
        let out = strings(apply(argv(&["descimg", "classify", "--config", p])).unwrap());
        assert_eq!(
            out,
            ["descimg", "classify", "--metric", "A15", "--metric", "S05", "--config", p]
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let f = config("manifets = \"m.csv\"\n");
        let p = f.path().to_str().unwrap();
        assert!(apply(argv(&["descimg", "evaluate", "--config", p]))
            .unwrap_err()
            .contains("manifets"));
        let f = config("[evaluate]\nsnapshots = \"x\"\n");
        let p = f.path().to_str().unwrap();
        assert!(apply(argv(&["descimg", "evaluate", "--config", p])).is_err());
    }

    #[test]
    fn no_config_is_identity() {
        let a = argv(&["descimg", "synth", "--out", "x"]);
        assert_eq!(apply(a.clone()).unwrap(), a);
    }
}
