//! OpenAI-style chat-completion backend.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::backend::{AgentBackend, BackendError, Completion, Request, Usage};

pub const ENV_API_BASE: &str = "MIRAGE_API_BASE";
pub const ENV_API_KEY: &str = "MIRAGE_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Backoff {
    /// Transport-level retries after the first request.
    pub max_retries: u32,
    pub initial_ms: u64,
    pub max_ms: u64,
}

impl Default for Backoff {
    fn default() -> Self {
        Self {
            max_retries: 4,
            initial_ms: 500,
            max_ms: 8_000,
        }
    }
}

impl Backoff {
    pub fn delay(&self, retry: u32) -> Duration {
        let ms = self
            .initial_ms
            .saturating_mul(1u64 << retry.min(20))
            .min(self.max_ms);
        Duration::from_millis(ms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    /// Base URL; requests go to `{api_base}/chat/completions`.
    pub api_base: String,
    #[serde(default, skip_serializing)]
    pub api_key: Option<String>,
    pub model: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_top_p")]
    pub top_p: f64,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub backoff: Backoff,
}

fn default_temperature() -> f64 {
    0.8
}

fn default_top_p() -> f64 {
    1.0
}

fn default_timeout_secs() -> u64 {
    120
}

impl RemoteConfig {
    pub fn new(api_base: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            api_base: api_base.into(),
            api_key: None,
            model: model.into(),
            temperature: default_temperature(),
            top_p: default_top_p(),
            timeout_secs: default_timeout_secs(),
            backoff: Backoff::default(),
        }
    }

    /// Fills base URL and key from `MIRAGE_API_BASE` / `MIRAGE_API_KEY` when unset.
    pub fn with_env_defaults(mut self) -> Self {
        if self.api_base.is_empty() {
            if let Ok(base) = std::env::var(ENV_API_BASE) {
                self.api_base = base;
            }
        }
        if self.api_key.is_none() {
            self.api_key = std::env::var(ENV_API_KEY).ok();
        }
        self
    }

    fn url(&self) -> String {
        let base = self.api_base.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

pub struct RemoteBackend {
    config: RemoteConfig,
    client: reqwest::blocking::Client,
}

impl std::fmt::Debug for RemoteBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteBackend")
            .field("url", &self.config.url())
            .field("model", &self.config.model)
            .finish()
    }
}

pub fn remote_backend(config: RemoteConfig) -> Result<RemoteBackend, BackendError> {
    RemoteBackend::new(config)
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    usage: Option<ProviderUsage>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

#[derive(Deserialize)]
struct ProviderUsage {
    prompt_tokens: Option<u64>,
    completion_tokens: Option<u64>,
}

enum Outcome {
    Done(Completion),
    Retry(BackendError),
    Fatal(BackendError),
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Result<Self, BackendError> {
        if config.api_base.is_empty() {
            return Err(BackendError::Unavailable(format!(
                "no endpoint configured (set `api_base` or {ENV_API_BASE})"
            )));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| BackendError::Unavailable(e.to_string()))?;
        Ok(Self { config, client })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn attempt(&self, request: &Request) -> Outcome {
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": self.config.temperature,
            "top_p": self.config.top_p,
        });
        let mut builder = self.client.post(self.config.url()).json(&body);
        if let Some(key) = &self.config.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = match builder.send() {
            Ok(r) => r,
            Err(e) if e.is_timeout() => return Outcome::Retry(BackendError::Timeout(e.to_string())),
            Err(e) => return Outcome::Retry(BackendError::Unavailable(e.to_string())),
        };
        let status = response.status();
        if status.as_u16() == 401 || status.as_u16() == 403 {
            let text = response.text().unwrap_or_default();
            return Outcome::Fatal(BackendError::Auth(format!("{status}: {text}")));
        }
        if status.as_u16() == 408 {
            return Outcome::Retry(BackendError::Timeout(status.to_string()));
        }
        if status.as_u16() == 429 || status.is_server_error() {
            return Outcome::Retry(BackendError::Unavailable(status.to_string()));
        }
        if !status.is_success() {
            let text = response.text().unwrap_or_default();
            return Outcome::Fatal(BackendError::Unavailable(format!("{status}: {text}")));
        }
        let parsed: ChatResponse = match response.json() {
            Ok(p) => p,
            Err(e) => {
                return Outcome::Fatal(BackendError::Unavailable(format!(
                    "unexpected response body: {e}"
                )))
            }
        };
        let text = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .unwrap_or_default();
        let heuristic = Usage::heuristic(&request.prompt, &text);
        let usage = match parsed.usage {
            Some(u) => Usage {
                input_tokens: u.prompt_tokens.unwrap_or(heuristic.input_tokens),
                output_tokens: u.completion_tokens.unwrap_or(heuristic.output_tokens),
            },
            None => heuristic,
        };
        Outcome::Done(Completion { text, usage })
    }
}

impl AgentBackend for RemoteBackend {
    fn complete(&self, request: &Request) -> Result<Completion, BackendError> {
        let mut retry = 0;
        loop {
            match self.attempt(request) {
                Outcome::Done(c) => return Ok(c),
                Outcome::Fatal(e) => return Err(e),
                Outcome::Retry(e) if retry >= self.config.backoff.max_retries => return Err(e),
                Outcome::Retry(e) => {
                    let delay = self.config.backoff.delay(retry);
                    log::warn!("{}: {e}; retrying in {delay:?}", request.agent);
                    std::thread::sleep(delay);
                    retry += 1;
                }
            }
        }
    }
}
