//! Service configuration.
//!
//! Values come from, in decreasing precedence: `SPINEPLAN_*` environment
//! variables, the TOML config file, built-in defaults.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

pub const DEFAULT_LISTEN: &str = "127.0.0.1:8080";

pub const ENV_LISTEN: &str = "SPINEPLAN_LISTEN";
pub const ENV_PORT: &str = "SPINEPLAN_PORT";
pub const ENV_DETECTOR_COMMAND: &str = "SPINEPLAN_DETECTOR_COMMAND";
pub const ENV_PRECOMPUTED_DIR: &str = "SPINEPLAN_PRECOMPUTED_DIR";
pub const ENV_FIXTURE_ROOT: &str = "SPINEPLAN_FIXTURE_ROOT";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("invalid listen address '{0}'")]
    Listen(String),
    #[error("invalid port '{0}'")]
    Port(String),
}

/// Contents of the config file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub listen: Option<String>,
    pub detector_command: Option<String>,
    pub precomputed_dir: Option<PathBuf>,
    pub fixture_root: Option<PathBuf>,
}

impl FileConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|source| ConfigError::Parse { path: path.to_path_buf(), source })
    }

    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text, path)
    }
}

/// Resolved configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub listen: SocketAddr,
    /// Detector command template with `{image}` and `{outdir}` placeholders.
    pub detector_command: Option<String>,
    /// Directory holding precomputed `<stem>.txt` box files.
    pub precomputed_dir: Option<PathBuf>,
    /// Root for relative image references, also served under `/images/`.
    pub fixture_root: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            listen: DEFAULT_LISTEN.parse().unwrap(),
            detector_command: None,
            precomputed_dir: None,
            fixture_root: None,
        }
    }
}

impl Config {
    /// Merges `file` with the environment as seen through `env`.
    ///
    /// `SPINEPLAN_LISTEN` replaces the whole address; `SPINEPLAN_PORT` then
    /// replaces just the port.
    pub fn resolve(file: FileConfig, env: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let listen = env(ENV_LISTEN).or(file.listen).unwrap_or_else(|| DEFAULT_LISTEN.to_string());
        let mut listen: SocketAddr = listen.parse().map_err(|_| ConfigError::Listen(listen.clone()))?;
        if let Some(port) = env(ENV_PORT) {
            listen.set_port(port.trim().parse().map_err(|_| ConfigError::Port(port.clone()))?);
        }
        Ok(Config {
            listen,
            detector_command: env(ENV_DETECTOR_COMMAND).or(file.detector_command),
            precomputed_dir: env(ENV_PRECOMPUTED_DIR).map(PathBuf::from).or(file.precomputed_dir),
            fixture_root: env(ENV_FIXTURE_ROOT).map(PathBuf::from).or(file.fixture_root),
        })
    }

    /// Reads `path` (if any) and applies the process environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let file = match path {
            Some(p) => FileConfig::read(p)?,
            None => FileConfig::default(),
        };
        Self::resolve(file, |k| std::env::var(k).ok())
    }
}
