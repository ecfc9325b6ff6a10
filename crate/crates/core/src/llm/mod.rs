//! Chat-completions client for binary interaction classification.

mod batch;
mod transport;

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::finetune::{ChatMessage, Role};
use crate::pairs::Label;
use crate::prompt::{PromptError, PromptExchange};

pub use batch::{load_records, run_batch, BatchOptions};
pub use transport::{
    extract_content, write_replay_fixtures, ChatRequest, ChatTransport, HttpTransport,
    ReplayEntry, ReplayTransport, TransportError,
};

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("invalid endpoint configuration: {0}")]
    Config(String),
    #[error("transport failed after {attempts} attempt(s): {last}")]
    Transport { attempts: u32, last: TransportError },
    #[error("prompt of {chars} characters exceeds the {limit}-character limit")]
    PromptTooLong { chars: usize, limit: usize },
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Outcome of reading a model's answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParsedLabel {
    Interaction,
    NoInteraction,
    Invalid,
}

impl ParsedLabel {
    pub fn label(self) -> Option<Label> {
        match self {
            ParsedLabel::Interaction => Some(Label::Interaction),
            ParsedLabel::NoInteraction => Some(Label::NoInteraction),
            ParsedLabel::Invalid => None,
        }
    }
}

impl From<Label> for ParsedLabel {
    fn from(l: Label) -> Self {
        match l {
            Label::Interaction => ParsedLabel::Interaction,
            Label::NoInteraction => ParsedLabel::NoInteraction,
        }
    }
}

impl fmt::Display for ParsedLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParsedLabel::Interaction => "interaction",
            ParsedLabel::NoInteraction => "no_interaction",
            ParsedLabel::Invalid => "invalid",
        })
    }
}

/// Trims and lowercases, then looks for "no interaction" before
/// "interaction" (the former contains the latter).
pub fn parse_label(raw: &str) -> ParsedLabel {
    let norm = raw.trim().to_lowercase();
    if norm.contains("no interaction") {
        ParsedLabel::NoInteraction
    } else if norm.contains("interaction") {
        ParsedLabel::Interaction
    } else {
        ParsedLabel::Invalid
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
    pub multiplier: f64,
    pub max_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 4,
            initial_backoff_ms: 500,
            multiplier: 2.0,
            max_backoff_ms: 30_000,
        }
    }
}

impl RetryPolicy {
    /// Wait before attempt `attempt + 1`, where `attempt` counts from 1.
    pub fn backoff(&self, attempt: u32) -> Duration {
        let ms = self.initial_backoff_ms as f64 * self.multiplier.powi(attempt.saturating_sub(1) as i32);
        Duration::from_millis(ms.min(self.max_backoff_ms as f64) as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransportKind {
    #[default]
    Http,
    Replay { path: Option<PathBuf> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model_name: String,
    /// Environment variable holding the API key. The key itself is never
    /// stored in configuration or written to logs.
    pub api_key_env: Option<String>,
    pub temperature: f64,
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
    pub timeout_secs: u64,
    pub max_prompt_chars: Option<usize>,
    pub transport: TransportKind,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "http://localhost:1234".into(),
            model_name: String::new(),
            api_key_env: None,
            temperature: 0.0,
            max_in_flight: 1,
            retry: RetryPolicy::default(),
            timeout_secs: 120,
            max_prompt_chars: None,
            transport: TransportKind::Http,
        }
    }
}

impl EndpointConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        if self.max_in_flight < 1 {
            return Err(LlmError::Config("max_in_flight must be at least 1".into()));
        }
        if self.retry.max_attempts < 1 {
            return Err(LlmError::Config("retry.max_attempts must be at least 1".into()));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(LlmError::Config(format!("bad temperature {}", self.temperature)));
        }
        if self.model_name.is_empty() {
            return Err(LlmError::Config("model_name is empty".into()));
        }
        if matches!(self.transport, TransportKind::Replay { path: None }) {
            return Err(LlmError::Config("replay transport requires a fixture path".into()));
        }
        Ok(())
    }
}

/// One model answer for one (pair, repeat).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub pair_index: usize,
    pub drug1: String,
    pub drug2: String,
    pub model_name: String,
    pub repeat_index: u32,
    pub request_hash: String,
    pub raw_response: String,
    pub parsed: ParsedLabel,
    pub latency_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl PredictionRecord {
    /// Equality ignoring timing.
    pub fn same_outcome(&self, other: &Self) -> bool {
        Self {
            latency_ms: 0,
            ..self.clone()
        } == Self {
            latency_ms: 0,
            ..other.clone()
        }
    }
}

pub struct LlmClient {
    config: EndpointConfig,
    transport: Arc<dyn ChatTransport>,
}

impl fmt::Debug for LlmClient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LlmClient").field("config", &self.config).finish()
    }
}

/// Answer of a single request, before it is tied to a pair.
#[derive(Debug, Clone)]
pub struct Completion {
    pub request_hash: String,
    pub raw_response: String,
    pub parsed: ParsedLabel,
    pub latency_ms: u64,
    pub attempts: u32,
}

impl LlmClient {
    /// Builds the transport named by the configuration.
    pub fn from_config(config: EndpointConfig) -> Result<Self, LlmError> {
        config.validate()?;
        let transport: Arc<dyn ChatTransport> = match &config.transport {
            TransportKind::Http => {
                let api_key = match &config.api_key_env {
                    Some(var) => Some(std::env::var(var).map_err(|_| {
                        LlmError::Config(format!("environment variable {var} is not set"))
                    })?),
                    None => None,
                };
                Arc::new(HttpTransport::new(
                    &config.base_url,
                    api_key,
                    Duration::from_secs(config.timeout_secs),
                ))
            }
            TransportKind::Replay { path } => {
                let path = path.as_ref().expect("validated");
                Arc::new(ReplayTransport::load(path).map_err(|e| {
                    LlmError::Config(format!("replay fixtures {}: {e}", path.display()))
                })?)
            }
        };
        Ok(Self { config, transport })
    }

    pub fn with_transport(config: EndpointConfig, transport: Arc<dyn ChatTransport>) -> Result<Self, LlmError> {
        config.validate()?;
        Ok(Self { config, transport })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    pub fn request_for(&self, exchange: &PromptExchange) -> ChatRequest {
        ChatRequest {
            model: self.config.model_name.clone(),
            temperature: self.config.temperature,
            messages: vec![
                ChatMessage::new(Role::System, exchange.system_text.clone()),
                ChatMessage::new(Role::User, exchange.user_text.clone()),
            ],
        }
    }

    /// Sends one exchange, retrying transport failures, 429 and 5xx per the
    /// retry policy.
    pub fn complete(&self, exchange: &PromptExchange) -> Result<Completion, LlmError> {
        if let Some(limit) = self.config.max_prompt_chars {
            let chars = exchange.system_text.chars().count() + exchange.user_text.chars().count();
            if chars > limit {
                return Err(LlmError::PromptTooLong { chars, limit });
            }
        }
        let request = self.request_for(exchange);
        let request_hash = request.hash();
        let started = Instant::now();
        let policy = &self.config.retry;
        let mut attempt = 0;
        loop {
            attempt += 1;
            match self.transport.complete(&request) {
                Ok(raw) => {
                    return Ok(Completion {
                        request_hash,
                        parsed: parse_label(&raw),
                        raw_response: raw,
                        latency_ms: started.elapsed().as_millis() as u64,
                        attempts: attempt,
                    })
                }
                Err(e) if e.is_retriable() && attempt < policy.max_attempts => {
                    log::debug!("attempt {attempt} failed ({e}); retrying");
                    std::thread::sleep(policy.backoff(attempt));
                }
                Err(last) => return Err(LlmError::Transport { attempts: attempt, last }),
            }
        }
    }

    pub fn classify_one(
        &self,
        exchange: &PromptExchange,
        pair_index: usize,
        drug1: &str,
        drug2: &str,
        repeat_index: u32,
    ) -> Result<PredictionRecord, LlmError> {
        let c = self.complete(exchange)?;
        Ok(PredictionRecord {
            pair_index,
            drug1: drug1.to_string(),
            drug2: drug2.to_string(),
            model_name: self.config.model_name.clone(),
            repeat_index,
            request_hash: c.request_hash,
            raw_response: c.raw_response,
            parsed: c.parsed,
            latency_ms: c.latency_ms,
            error: None,
        })
    }
}
