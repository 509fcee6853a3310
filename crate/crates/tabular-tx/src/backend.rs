//! Text-generation backends behind one blocking trait.
//!
//! The HTTP backend speaks the generic chat-completion shape: POST a JSON
//! body of model, messages, temperature, and max_tokens, read back the
//! first choice's content. The mock backend replays scripted responses
//! keyed by document, step, and attempt, so pipeline runs are exactly
//! reproducible without a network. Stop sequences are applied client-side
//! in both, so behaviour does not depend on server support.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("request timed out")]
    Timeout,
    #[error("rate limited by the generation service")]
    RateLimited,
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("backend returned an empty completion")]
    EmptyCompletion,
}

/// Decoding and robustness settings for one request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub temperature: f64,
    pub max_tokens: u32,
    pub stop_sequences: Vec<String>,
    #[serde(with = "duration_secs")]
    pub timeout: Duration,
    /// Extra attempts after the first failure.
    pub retries: u32,
}

mod duration_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_secs())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_secs(u64::deserialize(d)?))
    }
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            temperature: 0.0,
            max_tokens: 512,
            stop_sequences: Vec::new(),
            timeout: Duration::from_secs(30),
            retries: 2,
        }
    }
}

/// Which pipeline step a request serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineStep {
    Recognition,
    Generation,
}

impl PipelineStep {
    pub fn as_str(self) -> &'static str {
        match self {
            PipelineStep::Recognition => "recognition",
            PipelineStep::Generation => "generation",
        }
    }
}

impl std::fmt::Display for PipelineStep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Provenance of a request, letting scripted backends answer per document
/// and per attempt while staying a pure function of the request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestTag {
    pub document_id: String,
    pub step: PipelineStep,
    pub attempt: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendRequest {
    pub prompt: String,
    pub params: GenerationParams,
    pub tag: Option<RequestTag>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendResponse {
    pub text: String,
    pub prompt_tokens: Option<u32>,
    pub completion_tokens: Option<u32>,
    pub latency: Duration,
}

/// A blocking text-generation service.
pub trait Backend: Send + Sync {
    /// Complete a prompt, retrying internally up to `params.retries` extra
    /// attempts on retryable failures.
    fn complete(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError>;

    fn name(&self) -> &'static str;
}

/// Truncate at the earliest stop-sequence occurrence.
pub fn apply_stop_sequences(text: &str, stops: &[String]) -> String {
    let cut = stops
        .iter()
        .filter(|s| !s.is_empty())
        .filter_map(|s| text.find(s.as_str()))
        .min();
    match cut {
        Some(pos) => text[..pos].to_string(),
        None => text.to_string(),
    }
}

/// Scripted responses for one document: one list per step, indexed by
/// attempt and clamped to the last entry.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocScript {
    #[serde(default)]
    pub recognition: Vec<String>,
    #[serde(default)]
    pub generation: Vec<String>,
}

/// What the mock answers when no script entry matches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FallbackMode {
    /// Return the prompt itself.
    Echo,
    /// Fail the request.
    #[default]
    Error,
}

/// A full mock script, loadable from JSON.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockScript {
    #[serde(default)]
    pub fallback: FallbackMode,
    #[serde(default)]
    pub documents: BTreeMap<String, DocScript>,
}

impl MockScript {
    pub fn from_file(path: impl AsRef<Path>) -> Result<MockScript, BackendError> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Transport(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&raw)
            .map_err(|e| BackendError::Transport(format!("{}: {e}", path.display())))
    }
}

/// Deterministic in-process backend driven by a [`MockScript`].
#[derive(Debug, Clone, Default)]
pub struct MockBackend {
    script: MockScript,
}

impl MockBackend {
    pub fn new(script: MockScript) -> Self {
        MockBackend { script }
    }

    /// A mock that echoes every prompt back, for smoke runs without a
    /// script file.
    pub fn echo() -> Self {
        MockBackend {
            script: MockScript {
                fallback: FallbackMode::Echo,
                documents: BTreeMap::new(),
            },
        }
    }

    fn scripted_text(&self, request: &BackendRequest) -> Option<&str> {
        let tag = request.tag.as_ref()?;
        let doc = self.script.documents.get(&tag.document_id)?;
        let list = match tag.step {
            PipelineStep::Recognition => &doc.recognition,
            PipelineStep::Generation => &doc.generation,
        };
        if list.is_empty() {
            return None;
        }
        let index = (tag.attempt as usize).min(list.len() - 1);
        Some(&list[index])
    }
}

impl Backend for MockBackend {
    fn complete(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        debug_assert!(!request.prompt.is_empty(), "prompts are never empty");
        let start = Instant::now();
        let text = match self.scripted_text(request) {
            Some(text) => text.to_string(),
            None => match self.script.fallback {
                FallbackMode::Echo => request.prompt.clone(),
                FallbackMode::Error => {
                    let id = request
                        .tag
                        .as_ref()
                        .map(|t| t.document_id.as_str())
                        .unwrap_or("<untagged>");
                    return Err(BackendError::Transport(format!(
                        "no scripted response for document {id:?}"
                    )));
                }
            },
        };
        let text = apply_stop_sequences(&text, &request.params.stop_sequences);
        if text.is_empty() {
            return Err(BackendError::EmptyCompletion);
        }
        Ok(BackendResponse {
            text,
            prompt_tokens: None,
            completion_tokens: None,
            latency: start.elapsed(),
        })
    }

    fn name(&self) -> &'static str {
        "mock"
    }
}

/// Chat-completion request body. Field order is fixed by struct order.
#[derive(Debug, Serialize)]
struct ChatRequestBody<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Debug, Serialize)]
struct ChatMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Debug, Deserialize)]
struct ChatResponseBody {
    choices: Vec<ChatChoice>,
    #[serde(default)]
    usage: Option<ChatUsage>,
}

#[derive(Debug, Deserialize)]
struct ChatChoice {
    #[serde(default)]
    message: Option<ChatResponseMessage>,
    #[serde(default)]
    text: Option<String>,
}

#[derive(Debug, Deserialize)]
struct ChatResponseMessage {
    content: String,
}

#[derive(Debug, Deserialize)]
struct ChatUsage {
    #[serde(default)]
    prompt_tokens: Option<u32>,
    #[serde(default)]
    completion_tokens: Option<u32>,
}

/// Backend speaking the chat-completion HTTP shape.
pub struct HttpBackend {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    /// `api_key_env` names the environment variable holding the bearer
    /// token; requests go out unauthenticated when it is unset.
    pub fn new(
        endpoint: impl Into<String>,
        model: impl Into<String>,
        api_key_env: &str,
    ) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(HttpBackend {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: std::env::var(api_key_env).ok(),
            client,
        })
    }

    fn attempt(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        let body = ChatRequestBody {
            model: &self.model,
            messages: [ChatMessage {
                role: "user",
                content: &request.prompt,
            }],
            temperature: request.params.temperature,
            max_tokens: request.params.max_tokens,
        };
        let start = Instant::now();
        let mut builder = self
            .client
            .post(&self.endpoint)
            .timeout(request.params.timeout)
            .json(&body);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().map_err(|e| {
            if e.is_timeout() {
                BackendError::Timeout
            } else {
                BackendError::Transport(e.to_string())
            }
        })?;

        let status = response.status();
        if status.as_u16() == 429 {
            return Err(BackendError::RateLimited);
        }
        if !status.is_success() {
            let body = response.text().unwrap_or_default();
            return Err(BackendError::Transport(format!(
                "status {status}: {}",
                body.chars().take(200).collect::<String>()
            )));
        }

        let parsed: ChatResponseBody = response
            .json()
            .map_err(|e| BackendError::Transport(format!("malformed response body: {e}")))?;
        let choice = parsed.choices.into_iter().next();
        let text = choice
            .and_then(|c| c.message.map(|m| m.content).or(c.text))
            .unwrap_or_default();
        let text = apply_stop_sequences(&text, &request.params.stop_sequences);
        if text.trim().is_empty() {
            return Err(BackendError::EmptyCompletion);
        }
        let (prompt_tokens, completion_tokens) = parsed
            .usage
            .map(|u| (u.prompt_tokens, u.completion_tokens))
            .unwrap_or((None, None));
        Ok(BackendResponse {
            text,
            prompt_tokens,
            completion_tokens,
            latency: start.elapsed(),
        })
    }
}

impl Backend for HttpBackend {
    fn complete(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        debug_assert!(!request.prompt.is_empty(), "prompts are never empty");
        // Timeouts, rate limits, transport blips, and empty completions
        // can all clear up on a retry, so every failure is retried.
        let attempts = request.params.retries + 1;
        let mut last_error = BackendError::EmptyCompletion;
        for _ in 0..attempts {
            match self.attempt(request) {
                Ok(response) => return Ok(response),
                Err(err) => last_error = err,
            }
        }
        Err(last_error)
    }

    fn name(&self) -> &'static str {
        "http"
    }
}
