//! Run settings assembled from three layers: command-line flags, environment
//! variables, and an optional flat TOML settings file. Flags win over the
//! environment, which wins over the file, so batch runs stay reproducible
//! while credentials can be kept out of files and shell history.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use faraid_core::bridge::EndpointConfig;
use serde::Deserialize;

/// Environment variables recognized for endpoint settings.
pub const ENV_URL: &str = "FARAID_ENDPOINT_URL";
pub const ENV_KEY: &str = "FARAID_ENDPOINT_KEY";
pub const ENV_MODEL: &str = "FARAID_ENDPOINT_MODEL";

/// Keys accepted in the settings file. All are optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSettings {
    endpoint_url: Option<String>,
    endpoint_key: Option<String>,
    endpoint_model: Option<String>,
    /// Seconds before an endpoint request is abandoned.
    endpoint_timeout: Option<u64>,
    /// Key renames applied to each output object before packaging.
    #[serde(default)]
    rename: BTreeMap<String, String>,
}

/// Endpoint values passed as flags; `None` means the flag was not given.
#[derive(Debug, Default, Clone)]
pub struct EndpointFlags {
    pub url: Option<String>,
    pub key: Option<String>,
    pub model: Option<String>,
}

/// Fully resolved settings after layering flags over env over file.
#[derive(Debug, Default)]
pub struct Settings {
    pub endpoint_url: Option<String>,
    pub endpoint_key: Option<String>,
    pub endpoint_model: Option<String>,
    pub endpoint_timeout: Option<u64>,
    pub rename: BTreeMap<String, String>,
}

/// The rename applied when neither the file nor the flags specify one. The
/// downstream evaluator expects the adjusted-base key under a different name;
/// this default is a documented guess, overridable in the settings file.
pub fn default_rename() -> BTreeMap<String, String> {
    BTreeMap::from([("tasil_stage".to_string(), "awl_stage".to_string())])
}

fn read_file(path: &Path) -> Result<FileSettings> {
    if !path.exists() {
        bail!("settings file not found: {}", path.display());
    }
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read settings file {}", path.display()))?;
    toml::from_str(&text)
        .with_context(|| format!("cannot parse settings file {}", path.display()))
}

fn env_var(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.is_empty())
}

/// Resolves settings: explicit flags, then environment variables, then the
/// file named by `config_path` (an error if named but missing).
pub fn resolve(config_path: Option<&Path>, flags: &EndpointFlags) -> Result<Settings> {
    let file = match config_path {
        Some(path) => read_file(path)?,
        None => FileSettings::default(),
    };
    Ok(Settings {
        endpoint_url: flags.url.clone().or_else(|| env_var(ENV_URL)).or(file.endpoint_url),
        endpoint_key: flags.key.clone().or_else(|| env_var(ENV_KEY)).or(file.endpoint_key),
        endpoint_model: flags
            .model
            .clone()
            .or_else(|| env_var(ENV_MODEL))
            .or(file.endpoint_model),
        endpoint_timeout: file.endpoint_timeout,
        rename: if file.rename.is_empty() { default_rename() } else { file.rename },
    })
}

impl Settings {
    /// Builds the endpoint configuration, or explains which setting is missing
    /// and every place it may be supplied.
    pub fn endpoint(&self) -> Result<EndpointConfig> {
        let url = self.endpoint_url.clone().with_context(|| {
            format!("endpoint URL not set; pass --endpoint-url, set {ENV_URL}, or add endpoint_url to the settings file")
        })?;
        let model = self.endpoint_model.clone().with_context(|| {
            format!("endpoint model not set; pass --endpoint-model, set {ENV_MODEL}, or add endpoint_model to the settings file")
        })?;
        let mut config = EndpointConfig::new(url, model);
        config.api_key = self.endpoint_key.clone();
        if let Some(seconds) = self.endpoint_timeout {
            config.timeout = Duration::from_secs(seconds);
        }
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn missing_named_file_is_an_error_naming_it() {
        let err = resolve(Some(Path::new("/no/such/settings.toml")), &EndpointFlags::default())
            .unwrap_err();
        assert!(err.to_string().contains("/no/such/settings.toml"), "got: {err}");
    }

    #[test]
    fn file_values_are_read_and_flags_override_them() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "endpoint_url = \"http://file.example/v1\"").unwrap();
        writeln!(file, "endpoint_model = \"file-model\"").unwrap();
        writeln!(file, "[rename]").unwrap();
        writeln!(file, "tasil_stage = \"adjusted_base\"").unwrap();

        let from_file = resolve(Some(file.path()), &EndpointFlags::default()).unwrap();
        assert_eq!(from_file.endpoint_url.as_deref(), Some("http://file.example/v1"));
        assert_eq!(from_file.rename["tasil_stage"], "adjusted_base");

        let flags = EndpointFlags {
            url: Some("http://flag.example/v1".to_string()),
            ..EndpointFlags::default()
        };
        let with_flags = resolve(Some(file.path()), &flags).unwrap();
        assert_eq!(with_flags.endpoint_url.as_deref(), Some("http://flag.example/v1"));
        assert_eq!(with_flags.endpoint_model.as_deref(), Some("file-model"));
    }

    #[test]
    fn unknown_file_keys_are_rejected() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "endpoint_urll = \"typo\"").unwrap();
        let err = resolve(Some(file.path()), &EndpointFlags::default()).unwrap_err();
        assert!(format!("{err:#}").contains("cannot parse settings file"), "got: {err:#}");
    }

    #[test]
    fn rename_defaults_when_absent() {
        let settings = resolve(None, &EndpointFlags::default()).unwrap();
        assert_eq!(settings.rename["tasil_stage"], "awl_stage");
    }

    #[test]
    fn endpoint_requires_url_and_model() {
        let settings = Settings::default();
        let err = settings.endpoint().unwrap_err();
        assert!(format!("{err:#}").contains("endpoint URL not set"));

        let settings = Settings {
            endpoint_url: Some("http://h/v1".to_string()),
            ..Settings::default()
        };
        let err = settings.endpoint().unwrap_err();
        assert!(format!("{err:#}").contains("endpoint model not set"));
    }
}
