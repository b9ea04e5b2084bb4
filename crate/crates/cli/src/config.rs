//! Plain-text `key = value` configuration files merged into the argument list.

use std::fs;
use std::path::Path;

use fuse_core::{FuseError, Result};

/// Parsed `key = value` pairs in file order. Blank lines and `#` comments are
/// skipped; keys use flag names (`t-final` or `t_final`).
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(FuseError::Parse {
                line: i + 1,
                msg: format!("expected key = value, got `{line}`"),
            });
        };
        let key = k.trim().replace('_', "-");
        let value = v.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(FuseError::Parse {
                line: i + 1,
                msg: "empty key or value".into(),
            });
        }
        if out.iter().any(|(k, _)| *k == key) {
            return Err(FuseError::Parse {
                line: i + 1,
                msg: format!("duplicate key `{key}`"),
            });
        }
        out.push((key, value));
    }
    Ok(out)
}

fn flag_present(args: &[String], key: &str) -> bool {
    let long = format!("--{key}");
    let with_eq = format!("{long}=");
    args.iter().any(|a| *a == long || a.starts_with(&with_eq))
}

/// Appends config entries not already given as flags. The `config` flag
/// itself is consumed here; boolean keys take `true`/`false`. Keys outside
/// `known` are rejected.
pub fn merge_config(args: Vec<String>, known: &[String]) -> Result<Vec<String>> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().ok_or_else(|| FuseError::Config("--config needs a path".into()))?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = fs::read_to_string(Path::new(&path))
        .map_err(|e| FuseError::Config(format!("cannot read config file {path}: {e}")))?;
    let mut merged = rest.clone();
    for (key, value) in parse_config(&text)? {
        if key == "config" {
            return Err(FuseError::Config("config files cannot include other config files".into()));
        }
        if !known.contains(&key) {
            return Err(FuseError::Config(format!(
                "unknown key `{key}` in {path} (expected one of: {})",
                known.join(", ")
            )));
        }
        if flag_present(&rest, &key) {
            continue;
        }
        match value.as_str() {
            "true" => merged.push(format!("--{key}")),
            "false" => {}
            _ => {
                merged.push(format!("--{key}"));
                merged.push(value);
            }
        }
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let c = parse_config("# sweep\np = 3\nt_final=0.5 # short\n\n").unwrap();
        assert_eq!(c, vec![("p".into(), "3".into()), ("t-final".into(), "0.5".into())]);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(matches!(parse_config("p 3"), Err(FuseError::Parse { line: 1, .. })));
        assert!(parse_config("p=3\np=4").is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "p = 5\ncase = poisson1d\n").unwrap();
        let args: Vec<String> = ["fuse", "converge", "--p", "3", "--config", path.to_str().unwrap()]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let known = ["p".to_string(), "case".to_string()];
        let merged = merge_config(args, &known).unwrap();
        assert_eq!(merged, ["fuse", "converge", "--p", "3", "--case", "poisson1d"]);
        fs::write(&path, "q = 1\n").unwrap();
        let args = vec!["fuse".to_string(), "--config".into(), path.to_str().unwrap().into()];
        assert!(matches!(merge_config(args, &known), Err(FuseError::Config(_))));
    }
}
