//! Resolved configuration: built-in defaults, then the TOML file, then
//! `--set key=value` overrides, then dedicated flags.

use std::path::Path;

use errnav::pipeline::CampaignConfig;
use toml::{Table, Value};

use crate::CliError;

pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<CampaignConfig, CliError> {
    let mut table = match file {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            text.parse::<Table>().map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => Table::new(),
    };
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let cfg: CampaignConfig =
        Value::Table(table.clone()).try_into().map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
    let known = Value::try_from(&cfg).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(path) = unknown_key(&table, &known, "") {
        return Err(CliError::Config(format!("unknown configuration key `{path}`")));
    }
    Ok(cfg)
}

/// `a.b.c=value`. The value is read as a TOML literal, falling back to a
/// bare string.
fn apply_override(table: &mut Table, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{spec}` is not of the form key=value")))?;
    let value = match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.trim().split('.').collect();
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let slot = cur.entry(part.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = slot
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("`{key}`: `{part}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn unknown_key(given: &Table, known: &Value, prefix: &str) -> Option<String> {
    for (k, v) in given {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match known.get(k) {
            None => return Some(path),
            Some(kv) => {
                if let (Value::Table(g), Value::Table(_)) = (v, kv) {
                    if let Some(p) = unknown_key(g, kv, &path) {
                        return Some(p);
                    }
                }
            }
        }
    }
    None
}

pub fn validate(cfg: &CampaignConfig) -> Result<(), CliError> {
    cfg.validate().map_err(CliError::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_nest_and_parse_literals() {
        let cfg = load(None, &["rounds=2".into(), "nav.mppi.num_samples=16".into(), "map.densities.shrub=0.1".into()]).unwrap();
        assert_eq!(cfg.rounds, 2);
        assert_eq!(cfg.nav.mppi.num_samples, 16);
        assert_eq!(cfg.map.densities.shrub, 0.1);
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_path() {
        match load(None, &["nav.mppi.num_sample=16".into()]) {
            Err(CliError::Config(m)) => assert!(m.contains("nav.mppi.num_sample"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn type_errors_are_config_errors() {
        assert!(matches!(load(None, &["rounds=\"many\"".into()]), Err(CliError::Config(_))));
    }
}
