//! Config files, `--set` overrides, species data and the config digest.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};
use tuneout_core::atomic::{load_species_data, SpeciesData, RB87_TOML};

use crate::error::CliError;

/// Reads an optional TOML file, applies `key.path=value` overrides and deserializes.
///
/// Unknown keys are rejected by the target type.
pub fn load_config<T: DeserializeOwned>(path: Option<&Path>, overrides: &[String]) -> Result<T, CliError> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::validation(format!("cannot read config {}: {e}", p.display())))?;
            text.parse::<toml::Table>()
                .map_err(|e| CliError::validation(format!("config {}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    T::deserialize(toml::Value::Table(table)).map_err(|e| CliError::validation(format!("config: {e}")))
}

fn apply_override(table: &mut toml::Table, entry: &str) -> Result<(), CliError> {
    let (key, raw) = entry
        .split_once('=')
        .ok_or_else(|| CliError::validation(format!("override `{entry}` is not key=value")))?;
    let value = parse_value(raw.trim());
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::validation(format!("override key `{key}` is malformed")));
    }
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        let next = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = next
            .as_table_mut()
            .ok_or_else(|| CliError::validation(format!("override `{key}`: `{part}` is not a table")))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Species data and a provenance string naming its origin and content hash.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub data: SpeciesData,
    pub provenance: String,
}

pub fn load_data(path: Option<&PathBuf>) -> Result<LoadedData, CliError> {
    let (data, origin, text) = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::validation(format!("cannot read species data {}: {e}", p.display())))?;
            (load_species_data(p)?, p.display().to_string(), text)
        }
        None => (SpeciesData::rubidium87(), "bundled".to_string(), RB87_TOML.to_string()),
    };
    let provenance = format!(
        "{} {} v{} ({origin}, sha256 {})",
        data.species.name,
        data.format,
        data.version,
        &hex(&Sha256::digest(text.as_bytes()))[..16]
    );
    Ok(LoadedData { data, provenance })
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of the canonical JSON of the resolved configuration, command name and seed.
pub fn config_digest<T: Serialize>(command: &str, config: &T, seed: Option<u64>) -> Result<String, CliError> {
    let canonical = serde_json::to_string(&serde_json::json!({
        "command": command,
        "config": config,
        "seed": seed,
    }))?;
    Ok(hex(&Sha256::digest(canonical.as_bytes())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Deserialize, Serialize, PartialEq)]
    #[serde(deny_unknown_fields, default)]
    struct Demo {
        a: f64,
        inner: Inner,
    }

    #[derive(Debug, Deserialize, Serialize, PartialEq, Default)]
    #[serde(deny_unknown_fields, default)]
    struct Inner {
        name: String,
        list: Vec<i32>,
    }

    impl Default for Demo {
        fn default() -> Self {
            Self {
                a: 1.0,
                inner: Inner::default(),
            }
        }
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let d: Demo = load_config(None, &["a=2.5".into(), "inner.name=abc".into(), "inner.list=[1, 2]".into()]).unwrap();
        assert_eq!(d.a, 2.5);
        assert_eq!(d.inner.name, "abc");
        assert_eq!(d.inner.list, vec![1, 2]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = load_config::<Demo>(None, &["b=1".into()]).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(load_config::<Demo>(None, &["novalue".into()]).is_err());
        assert!(load_config::<Demo>(None, &["a.=1".into()]).is_err());
    }

    #[test]
    fn digest_depends_on_every_input() {
        let d = Demo::default();
        let base = config_digest("x", &d, Some(1)).unwrap();
        assert_eq!(base, config_digest("x", &d, Some(1)).unwrap());
        assert_ne!(base, config_digest("y", &d, Some(1)).unwrap());
        assert_ne!(base, config_digest("x", &d, Some(2)).unwrap());
        assert_ne!(base, config_digest("x", &Demo { a: 3.0, ..Demo::default() }, Some(1)).unwrap());
        assert_eq!(base.len(), 64);
    }

    #[test]
    fn bundled_provenance_names_dataset() {
        let d = load_data(None).unwrap();
        assert!(d.provenance.contains("bundled"));
        assert!(d.provenance.contains("sha256"));
    }
}
