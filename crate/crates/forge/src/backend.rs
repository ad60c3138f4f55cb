//! Chat-completion backends.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{ForgeError, Result};

/// Anything that turns one user prompt into response text.
pub trait ChatBackend: Send + Sync {
    /// Model name recorded on proposals this backend produced.
    fn name(&self) -> &str;

    /// The request document that `complete` would send, kept for auditing.
    fn request(&self, prompt: &str) -> Value;

    fn complete(&self, prompt: &str) -> Result<String>;
}

/// One endpoint profile. Secrets never live here, only the name of the
/// environment variable holding them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendProfile {
    pub name: String,
    pub endpoint: String,
    pub model: String,
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_auth_header")]
    pub auth_header: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Outstanding requests allowed at once.
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
}

fn default_auth_header() -> String {
    "Authorization".into()
}

fn default_timeout() -> u64 {
    60
}

fn default_in_flight() -> usize {
    4
}

impl BackendProfile {
    pub fn new(name: impl Into<String>, endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        BackendProfile {
            name: name.into(),
            endpoint: endpoint.into(),
            model: model.into(),
            api_key_env: None,
            auth_header: default_auth_header(),
            timeout_secs: default_timeout(),
            max_in_flight: default_in_flight(),
        }
    }
}

/// Blocking HTTP client for a chat-completion endpoint. Sampling settings are
/// left at the provider's defaults.
pub struct HttpBackend {
    profile: BackendProfile,
    token: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(profile: BackendProfile) -> Result<Self> {
        let token = match &profile.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                ForgeError::Config(format!("backend {}: environment variable {var} is not set", profile.name))
            })?),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(profile.timeout_secs))
            .build()
            .map_err(|e| ForgeError::Backend { backend: profile.name.clone(), reason: e.to_string() })?;
        Ok(HttpBackend { profile, token, client })
    }

    pub fn profile(&self) -> &BackendProfile {
        &self.profile
    }
}

impl ChatBackend for HttpBackend {
    fn name(&self) -> &str {
        &self.profile.model
    }

    fn request(&self, prompt: &str) -> Value {
        json!({
            "model": self.profile.model,
            "messages": [{"role": "user", "content": prompt}],
        })
    }

    fn complete(&self, prompt: &str) -> Result<String> {
        let fail = |reason: String| ForgeError::Backend { backend: self.profile.name.clone(), reason };
        let mut req = self.client.post(&self.profile.endpoint).json(&self.request(prompt));
        if let Some(token) = &self.token {
            let value = if self.profile.auth_header.eq_ignore_ascii_case("authorization") {
                format!("Bearer {token}")
            } else {
                token.clone()
            };
            req = req.header(self.profile.auth_header.as_str(), value);
        }
        let resp = req.send().map_err(|e| fail(e.to_string()))?;
        let status = resp.status();
        let body = resp.text().map_err(|e| fail(e.to_string()))?;
        if !status.is_success() {
            return Err(fail(format!("HTTP {status}: {}", truncate(&body, 200))));
        }
        Ok(response_text(&body))
    }
}

/// `choices[0].message.content` when the body is a chat-completion document,
/// otherwise the body itself.
pub fn response_text(body: &str) -> String {
    serde_json::from_str::<Value>(body)
        .ok()
        .and_then(|v| v.pointer("/choices/0/message/content").and_then(Value::as_str).map(str::to_string))
        .unwrap_or_else(|| body.to_string())
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}
