//! Small HTTP clients for the agents' JSON endpoints.
//!
//! [`StateClient`] reads a remote agent's `GET /state`; [`BridgeClient`]
//! posts operator actions to a local agent's bridge.

use std::time::Duration;

use serde::de::DeserializeOwned;
use sink_core::api::{DispatchSummary, EndpointStatus, RawAction, StateDocument};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("request to {url} failed: {source}")]
    Transport { url: String, source: reqwest::Error },
    #[error("{url} answered {status}: {body}")]
    Status { url: String, status: u16, body: String },
    #[error("{url} sent an unexpected body: {source}")]
    Decode { url: String, source: reqwest::Error },
}

impl ClientError {
    /// True when the server was never reached.
    pub fn is_connect(&self) -> bool {
        matches!(self, ClientError::Transport { source, .. } if source.is_connect() || source.is_timeout())
    }
}

fn http_client(timeout: Duration) -> reqwest::Client {
    reqwest::Client::builder()
        .timeout(timeout)
        .build()
        .expect("http client builds")
}

/// Accepts `host:port` or a full `http://` URL.
fn normalize(base: &str) -> String {
    let base = base.trim_end_matches('/');
    if base.starts_with("http://") || base.starts_with("https://") {
        base.to_string()
    } else {
        format!("http://{base}")
    }
}

async fn decode<T: DeserializeOwned>(url: String, resp: Result<reqwest::Response, reqwest::Error>) -> Result<T, ClientError> {
    let resp = resp.map_err(|source| ClientError::Transport { url: url.clone(), source })?;
    let status = resp.status();
    if !status.is_success() {
        let body = resp.text().await.unwrap_or_default();
        return Err(ClientError::Status {
            url,
            status: status.as_u16(),
            body,
        });
    }
    resp.json().await.map_err(|source| ClientError::Decode { url, source })
}

#[derive(Debug, Clone)]
pub struct StateClient {
    base: String,
    http: reqwest::Client,
}

impl StateClient {
    pub fn new(base: &str) -> Self {
        Self::with_timeout(base, Duration::from_secs(5))
    }

    pub fn with_timeout(base: &str, timeout: Duration) -> Self {
        StateClient {
            base: normalize(base),
            http: http_client(timeout),
        }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub async fn get_state(&self) -> Result<StateDocument, ClientError> {
        let url = format!("{}/state", self.base);
        let resp = self.http.get(&url).send().await;
        decode(url, resp).await
    }
}

#[derive(Debug, Clone)]
pub struct BridgeClient {
    base: String,
    http: reqwest::Client,
}

impl BridgeClient {
    pub fn new(base: &str) -> Self {
        BridgeClient {
            base: normalize(base),
            http: http_client(Duration::from_secs(30)),
        }
    }

    pub async fn post_action(&self, action: &RawAction) -> Result<DispatchSummary, ClientError> {
        let url = format!("{}/actions", self.base);
        let resp = self.http.post(&url).json(action).send().await;
        decode(url, resp).await
    }

    pub async fn endpoints(&self) -> Result<Vec<EndpointStatus>, ClientError> {
        let url = format!("{}/endpoints", self.base);
        let resp = self.http.get(&url).send().await;
        decode(url, resp).await
    }
}

#[cfg(test)]
mod tests {
    use super::normalize;

    #[test]
    fn base_urls() {
        assert_eq!(normalize("127.0.0.1:7002"), "http://127.0.0.1:7002");
        assert_eq!(normalize("http://h:1/"), "http://h:1");
        assert_eq!(normalize("https://h"), "https://h");
    }
}
