use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::CliError;

/// Named curve, point and discriminant sets usable through `--preset`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preset {
    pub curve: Option<String>,
    pub point: Option<String>,
    pub discriminants: Option<String>,
    pub primes: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    presets: BTreeMap<String, Preset>,
}

fn builtin(name: &str) -> Option<Preset> {
    let s = |v: &str| Some(v.to_string());
    match name {
        "exa" => Some(Preset { curve: s("12,11,0"), point: s("1/4,15/8"), discriminants: s("5"), primes: None }),
        "exadense" => Some(Preset {
            curve: s("7,2,0"),
            point: s("-2/1,4/1"),
            discriminants: None,
            primes: s("5,13,29,41,53"),
        }),
        _ => None,
    }
}

/// Looks `name` up in the config file first, then among the built-in presets.
pub fn resolve(name: &str, config: Option<&Path>) -> Result<Preset, CliError> {
    if let Some(path) = config {
        let text = fs::read_to_string(path).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))?;
        let file: ConfigFile =
            toml::from_str(&text).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))?;
        if let Some(p) = file.presets.get(name) {
            return Ok(p.clone());
        }
    }
    builtin(name).ok_or_else(|| CliError::Domain(format!("unknown preset '{name}'")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_overrides_builtin() {
        let dir = std::env::temp_dir().join(format!("edslab-preset-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("edslab.toml");
        fs::write(&path, "[presets.exa]\ncurve = \"1,2,0\"\n").unwrap();
        assert_eq!(resolve("exa", Some(&path)).unwrap().curve.as_deref(), Some("1,2,0"));
        assert_eq!(resolve("exadense", Some(&path)).unwrap().curve.as_deref(), Some("7,2,0"));
        assert!(resolve("nope", None).is_err());
        fs::remove_dir_all(dir).unwrap();
    }
}
