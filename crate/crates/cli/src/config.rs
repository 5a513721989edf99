//! JSON run configurations.
//!
//! A configuration names a subcommand and its flags:
//!
//! ```json
//! {"subcommand": "reproduce", "flags": {"family": "gw", "measure": "d1m2", "assert": true}, "seed": 7}
//! ```
//!
//! Flags map to `--name value`; `true` becomes a bare switch, `false` and
//! `null` are dropped and arrays are joined with commas.

use serde::Deserialize;
use serde_json::{Map, Value};
use std::path::Path;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: String,
    #[serde(default)]
    pub flags: Map<String, Value>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn to_argv(&self) -> Result<Vec<String>, String> {
        let mut argv = vec!["cwt".to_string()];
        if let Some(seed) = self.seed {
            argv.push("--seed".into());
            argv.push(seed.to_string());
        }
        if let Some(t) = self.threads {
            argv.push("--threads".into());
            argv.push(t.to_string());
        }
        argv.push(self.subcommand.clone());
        for (name, value) in &self.flags {
            let flag = format!("--{}", name.replace('_', "-"));
            match value {
                Value::Null | Value::Bool(false) => {}
                Value::Bool(true) => argv.push(flag),
                Value::Array(items) => {
                    let parts: Vec<String> = items.iter().map(scalar).collect::<Result<_, _>>()?;
                    argv.push(flag);
                    argv.push(parts.join(","));
                }
                other => {
                    argv.push(flag);
                    argv.push(scalar(other)?);
                }
            }
        }
        Ok(argv)
    }
}

fn scalar(v: &Value) -> Result<String, String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        other => Err(format!("flag value {other} is not a scalar")),
    }
}

pub fn load_argv(path: &Path) -> Result<Vec<String>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let config: RunConfig = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    config.to_argv()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_become_arguments() {
        let c: RunConfig = serde_json::from_str(
            r#"{"subcommand": "radon", "flags": {"angles": 90, "epsilons": [0.1, 0.01], "assert": true, "sinogram": null}, "seed": 3}"#,
        )
        .unwrap();
        assert_eq!(
            c.to_argv().unwrap(),
            [
                "cwt",
                "--seed",
                "3",
                "radon",
                "--angles",
                "90",
                "--assert",
                "--epsilons",
                "0.1,0.01"
            ]
        );
    }

    #[test]
    fn rejects_unknown_keys_and_nested_values() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"subcommand": "cone", "extra": 1}"#).is_err());
        let c: RunConfig = serde_json::from_str(r#"{"subcommand": "cone", "flags": {"m": {"x": 1}}}"#).unwrap();
        assert!(c.to_argv().is_err());
    }
}
