//! Config files mirror the flags: either a flat JSON object or `key = value`
//! lines. Their entries are spliced into argv right after the subcommand, so
//! any flag given on the command line wins.

use std::fs;

use serde_json::Value;

pub fn file_args(path: &str) -> Result<Vec<String>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let pairs = if text.trim_start().starts_with('{') {
        json_pairs(&text)?
    } else {
        kv_pairs(&text)?
    };
    let mut args = Vec::new();
    for (k, v) in pairs {
        let flag = format!("--{}", k.trim().replace('_', "-"));
        match v.as_str() {
            "true" => args.push(flag),
            "false" => {}
            _ => {
                args.push(flag);
                args.push(v);
            }
        }
    }
    Ok(args)
}

fn json_pairs(text: &str) -> Result<Vec<(String, String)>, String> {
    let v: Value = serde_json::from_str(text).map_err(|e| format!("config is not valid JSON: {e}"))?;
    let obj = v.as_object().ok_or("config JSON must be an object")?;
    obj.iter()
        .map(|(k, v)| {
            let s = match v {
                Value::String(s) => s.clone(),
                Value::Number(n) => n.to_string(),
                Value::Bool(b) => b.to_string(),
                Value::Array(a) => a
                    .iter()
                    .map(|x| match x {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join(","),
                _ => return Err(format!("config key {k}: nested values are not supported")),
            };
            Ok((k.clone(), s))
        })
        .collect()
}

fn kv_pairs(text: &str) -> Result<Vec<(String, String)>, String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (k, v) = l
                .split_once('=')
                .or_else(|| l.split_once(':'))
                .ok_or_else(|| format!("config line '{l}' is not key=value"))?;
            Ok((k.trim().to_string(), v.trim().trim_matches('"').to_string()))
        })
        .collect()
}

/// Moves config entries behind the subcommand and re-appends flags that came
/// before it, so that command-line values override the file.
pub fn splice(argv: Vec<String>, subcommands: &[&str]) -> Result<Vec<String>, String> {
    let mut config = None;
    let mut i = 1;
    while i < argv.len() {
        if argv[i] == "--config" {
            config = argv.get(i + 1).cloned();
            i += 1;
        } else if let Some(p) = argv[i].strip_prefix("--config=") {
            config = Some(p.to_string());
        }
        i += 1;
    }
    let Some(path) = config else {
        return Ok(argv);
    };
    let Some(pos) = argv.iter().skip(1).position(|a| subcommands.contains(&a.as_str())).map(|p| p + 1) else {
        return Ok(argv);
    };
    let mut out = vec![argv[0].clone(), argv[pos].clone()];
    out.extend(file_args(&path)?);
    out.extend(argv[1..pos].iter().cloned());
    out.extend(argv[pos + 1..].iter().cloned());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn both_formats() {
        let mut j = tempfile::NamedTempFile::new().unwrap();
        writeln!(j, r#"{{"n": 8, "lambda": 1.5, "p_grid": [0.2, 0.4], "unchecked": true}}"#).unwrap();
        let a = file_args(j.path().to_str().unwrap()).unwrap();
        assert_eq!(a, ["--lambda", "1.5", "--n", "8", "--p-grid", "0.2,0.4", "--unchecked"]);
        let mut k = tempfile::NamedTempFile::new().unwrap();
        writeln!(k, "# comment\nn = 8\nrho=3").unwrap();
        assert_eq!(file_args(k.path().to_str().unwrap()).unwrap(), ["--n", "8", "--rho", "3"]);
    }

    #[test]
    fn flags_after_file() {
        let mut k = tempfile::NamedTempFile::new().unwrap();
        writeln!(k, "seed=1\nn=4").unwrap();
        let path = k.path().to_str().unwrap().to_string();
        let argv: Vec<String> = ["ersa", "--seed", "9", "--config", &path, "estimate-h", "--n", "8"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let out = splice(argv, &["estimate-h"]).unwrap();
        assert_eq!(out[..2], ["ersa", "estimate-h"]);
        let last_seed = out.iter().rposition(|a| a == "--seed").unwrap();
        assert_eq!(out[last_seed + 1], "9");
        let last_n = out.iter().rposition(|a| a == "--n").unwrap();
        assert_eq!(out[last_n + 1], "8");
    }
}
