//! Local agent configuration file.
//!
//! ```toml
//! session_key_hex = "000102030405060708090a0b0c0d0e0f"  # or key_file = "session.key"
//! mapping = "demo_mapping.toml"      # relative to this file
//! keepalive_ms = 5000
//! queue_capacity = 1024
//! backpressure = "block"             # or "drop"
//! expect_ack = true
//! max_retries = 8                    # omit for unlimited
//! connect_timeout_ms = 3000
//! ack_timeout_ms = 10000
//!
//! [[endpoint]]
//! interface_id = "monitor"
//! host = "127.0.0.1"
//! port = 7001
//! resolution = "800x600"             # optional; otherwise learned from HELLO
//! mapping = "monitor_mapping.toml"   # optional per-endpoint override
//! state_url = "http://127.0.0.1:7002"  # optional, used by script `expect` lines
//! ```

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::Deserialize;
use sink_core::mapping::{load_mapping, Mapping, MappingError, Resolution};
use sink_core::protocol::{SessionKey, DEFAULT_KEEPALIVE_MS};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Mapping { path: PathBuf, source: MappingError },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backpressure {
    /// Wait for queue space.
    #[default]
    Block,
    /// Skip the endpoint and report it.
    Drop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentOptions {
    pub keepalive: Duration,
    /// Unsettled items allowed per endpoint.
    pub queue_capacity: usize,
    pub backpressure: Backpressure,
    pub expect_ack: bool,
    /// Consecutive failed connection attempts before an endpoint is marked
    /// down; `None` retries forever.
    pub max_retries: Option<u32>,
    pub connect_timeout: Duration,
    pub ack_timeout: Duration,
}

impl Default for AgentOptions {
    fn default() -> Self {
        AgentOptions {
            keepalive: Duration::from_millis(DEFAULT_KEEPALIVE_MS),
            queue_capacity: 1024,
            backpressure: Backpressure::Block,
            expect_ack: true,
            max_retries: None,
            connect_timeout: Duration::from_secs(3),
            ack_timeout: Duration::from_secs(10),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndpointConfig {
    pub interface_id: String,
    pub host: String,
    pub port: u16,
    pub resolution: Option<Resolution>,
    pub mapping: Option<PathBuf>,
    pub state_url: Option<String>,
}

impl EndpointConfig {
    pub fn addr(&self) -> String {
        format!("{}:{}", self.host, self.port)
    }
}

#[derive(Debug, Clone)]
pub struct LocalConfig {
    pub key: SessionKey,
    pub mapping: PathBuf,
    pub options: AgentOptions,
    pub endpoints: Vec<EndpointConfig>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    session_key_hex: Option<String>,
    key_file: Option<PathBuf>,
    mapping: PathBuf,
    keepalive_ms: Option<u64>,
    queue_capacity: Option<usize>,
    #[serde(default)]
    backpressure: Backpressure,
    expect_ack: Option<bool>,
    max_retries: Option<u32>,
    connect_timeout_ms: Option<u64>,
    ack_timeout_ms: Option<u64>,
    #[serde(default)]
    endpoint: Vec<RawEndpoint>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEndpoint {
    interface_id: String,
    host: String,
    port: u16,
    resolution: Option<String>,
    mapping: Option<PathBuf>,
    state_url: Option<String>,
}

/// Reads a key file holding 32 hex characters.
pub fn read_key_file(path: &Path) -> Result<SessionKey, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    SessionKey::from_hex(&text).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

impl LocalConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            ConfigError::Invalid(message) => ConfigError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    /// Parses config text; relative paths are taken against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let key = match (raw.session_key_hex, raw.key_file) {
            (Some(hex), None) => {
                SessionKey::from_hex(&hex).map_err(|e| ConfigError::Invalid(e.to_string()))?
            }
            (None, Some(file)) => read_key_file(&base.join(file))?,
            _ => {
                return Err(ConfigError::Invalid(
                    "exactly one of session_key_hex and key_file is required".into(),
                ))
            }
        };
        let defaults = AgentOptions::default();
        let options = AgentOptions {
            keepalive: raw.keepalive_ms.map(Duration::from_millis).unwrap_or(defaults.keepalive),
            queue_capacity: raw.queue_capacity.unwrap_or(defaults.queue_capacity),
            backpressure: raw.backpressure,
            expect_ack: raw.expect_ack.unwrap_or(defaults.expect_ack),
            max_retries: raw.max_retries,
            connect_timeout: raw
                .connect_timeout_ms
                .map(Duration::from_millis)
                .unwrap_or(defaults.connect_timeout),
            ack_timeout: raw.ack_timeout_ms.map(Duration::from_millis).unwrap_or(defaults.ack_timeout),
        };
        if options.keepalive.is_zero() || options.queue_capacity == 0 {
            return Err(ConfigError::Invalid(
                "keepalive_ms and queue_capacity must be positive".into(),
            ));
        }
        let mut seen = HashMap::new();
        let mut endpoints = Vec::new();
        for e in raw.endpoint {
            if seen.insert(e.interface_id.clone(), ()).is_some() {
                return Err(ConfigError::Invalid(format!(
                    "duplicate endpoint interface_id {:?}",
                    e.interface_id
                )));
            }
            let resolution = e
                .resolution
                .map(|r| r.parse::<Resolution>())
                .transpose()
                .map_err(|err| ConfigError::Invalid(format!("endpoint {}: {err}", e.interface_id)))?;
            endpoints.push(EndpointConfig {
                interface_id: e.interface_id,
                host: e.host,
                port: e.port,
                resolution,
                mapping: e.mapping.map(|m| base.join(m)),
                state_url: e.state_url,
            });
        }
        if endpoints.is_empty() {
            return Err(ConfigError::Invalid("at least one [[endpoint]] is required".into()));
        }
        Ok(LocalConfig {
            key,
            mapping: base.join(raw.mapping),
            options,
            endpoints,
        })
    }

    /// Loads the shared mapping and any per-endpoint overrides, in endpoint order.
    pub fn load_mappings(&self) -> Result<Vec<Arc<Mapping>>, ConfigError> {
        let mut cache: HashMap<PathBuf, Arc<Mapping>> = HashMap::new();
        let mut load = |path: &Path| -> Result<Arc<Mapping>, ConfigError> {
            if let Some(m) = cache.get(path) {
                return Ok(m.clone());
            }
            let m = Arc::new(load_mapping_file(path)?);
            cache.insert(path.to_path_buf(), m.clone());
            Ok(m)
        };
        self.endpoints
            .iter()
            .map(|e| load(e.mapping.as_deref().unwrap_or(&self.mapping)))
            .collect()
    }
}

pub fn load_mapping_file(path: &Path) -> Result<Mapping, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_mapping(&text).map_err(|source| ConfigError::Mapping {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = r#"
session_key_hex = "000102030405060708090a0b0c0d0e0f"
mapping = "maps/demo.toml"
keepalive_ms = 250
backpressure = "drop"
max_retries = 3

[[endpoint]]
interface_id = "a"
host = "127.0.0.1"
port = 7001
resolution = "800x600"

[[endpoint]]
interface_id = "b"
host = "localhost"
port = 7003
mapping = "other.toml"
"#;

    #[test]
    fn parses_and_resolves_paths() {
        let cfg = LocalConfig::parse(TEXT, Path::new("/etc/sink")).unwrap();
        assert_eq!(cfg.mapping, Path::new("/etc/sink/maps/demo.toml"));
        assert_eq!(cfg.options.keepalive, Duration::from_millis(250));
        assert_eq!(cfg.options.backpressure, Backpressure::Drop);
        assert_eq!(cfg.options.max_retries, Some(3));
        assert_eq!(cfg.options.queue_capacity, 1024);
        assert!(cfg.options.expect_ack);
        assert_eq!(cfg.endpoints[0].resolution, Some(Resolution::new(800, 600).unwrap()));
        assert_eq!(cfg.endpoints[1].mapping.as_deref(), Some(Path::new("/etc/sink/other.toml")));
        assert_eq!(cfg.endpoints[1].addr(), "localhost:7003");
    }

    #[test]
    fn rejects_bad_configs() {
        let dup = TEXT.replace("interface_id = \"b\"", "interface_id = \"a\"");
        assert!(LocalConfig::parse(&dup, Path::new(".")).is_err());
        let short_key = TEXT.replace("0e0f\"", "0e\"");
        assert!(LocalConfig::parse(&short_key, Path::new(".")).is_err());
        let unknown = format!("{TEXT}\nsurprise = 1\n");
        assert!(LocalConfig::parse(&unknown, Path::new(".")).is_err());
        let bad_res = TEXT.replace("800x600", "800");
        assert!(LocalConfig::parse(&bad_res, Path::new(".")).is_err());
    }
}
