//! Text-generation endpoint contract and its two adapters: a
//! chat-completion-style HTTP client and a scripted offline mock.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Decoding parameters forwarded to the endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub temperature: f64,
    pub max_output_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self { temperature: 0.0, max_output_tokens: 2048, seed: None }
    }
}

/// One model invocation: a non-empty prompt plus decoding parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRequest {
    pub model_id: String,
    pub prompt: String,
    pub sampling: SamplingParams,
}

/// Transport and endpoint failures. Parse rejections are not errors; they
/// surface through the extraction parser instead.
#[derive(Debug, Error)]
pub enum ClientError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("endpoint returned status {status}: {body}")]
    Endpoint { status: u16, body: String },
    #[error("malformed endpoint response: {0}")]
    MalformedResponse(String),
    #[error("auth environment variable {0:?} is not set")]
    MissingAuth(String),
    #[error("mock script has no response for call {0}")]
    ScriptExhausted(usize),
}

/// Narrow completion contract every adapter satisfies. Implementations must
/// be safe for concurrent use; batch dispatch may call from several workers.
pub trait ModelClient: Send + Sync {
    fn complete(&self, request: &PromptRequest) -> Result<String, ClientError>;
}

impl<F> ModelClient for F
where
    F: Fn(&PromptRequest) -> Result<String, ClientError> + Send + Sync,
{
    fn complete(&self, request: &PromptRequest) -> Result<String, ClientError> {
        self(request)
    }
}

// ── HTTP adapter ─────────────────────────────────────────────────────────

/// Speaks a chat-completion-style JSON API: POST to the endpoint with
/// `{"model", "messages", "temperature", "max_tokens", "seed"?}` and read
/// `choices[0].message.content` back.
#[derive(Debug)]
pub struct HttpModelClient {
    endpoint: String,
    auth_token: Option<String>,
    http: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
    max_tokens: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatChoiceMessage,
}

#[derive(Deserialize)]
struct ChatChoiceMessage {
    content: String,
}

impl HttpModelClient {
    /// Builds a client for `endpoint`. When `auth_env` is given, the bearer
    /// token is read from that environment variable at construction time and
    /// never written into artifacts.
    pub fn new(endpoint: impl Into<String>, auth_env: Option<&str>) -> Result<Self, ClientError> {
        let auth_token = match auth_env {
            None => None,
            Some(var) => Some(
                std::env::var(var).map_err(|_| ClientError::MissingAuth(var.to_string()))?,
            ),
        };
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(300))
            .build()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        Ok(Self { endpoint: endpoint.into(), auth_token, http })
    }
}

impl ModelClient for HttpModelClient {
    fn complete(&self, request: &PromptRequest) -> Result<String, ClientError> {
        let body = ChatRequest {
            model: &request.model_id,
            messages: [ChatMessage { role: "user", content: &request.prompt }],
            temperature: request.sampling.temperature,
            max_tokens: request.sampling.max_output_tokens,
            seed: request.sampling.seed,
        };
        let mut req = self.http.post(&self.endpoint).json(&body);
        if let Some(token) = &self.auth_token {
            req = req.bearer_auth(token);
        }
        let response = req.send().map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = response.status();
        let text = response
            .text()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(ClientError::Endpoint { status: status.as_u16(), body: text });
        }
        let parsed: ChatResponse = serde_json::from_str(&text)
            .map_err(|e| ClientError::MalformedResponse(e.to_string()))?;
        parsed
            .choices
            .first()
            .map(|c| c.message.content.clone())
            .ok_or_else(|| ClientError::MalformedResponse("no choices in response".into()))
    }
}

// ── Scripted mock ────────────────────────────────────────────────────────

/// Canned responses for offline runs and tests, declared in config files.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockScript {
    /// Responses keyed by call sequence number (equals the batch index when
    /// batches are dispatched sequentially).
    #[serde(default)]
    pub responses: BTreeMap<usize, String>,
    /// Fallback when a call has no keyed response.
    #[serde(default)]
    pub default: Option<String>,
}

/// Deterministic offline stand-in for a model endpoint. Replays the script
/// in call order; with parallelism 1 the sequence number is the batch index.
pub struct MockModelClient {
    script: MockScript,
    calls: AtomicUsize,
}

impl MockModelClient {
    pub fn new(script: MockScript) -> Self {
        Self { script, calls: AtomicUsize::new(0) }
    }

    /// A mock that answers every call with the same text.
    pub fn constant(response: impl Into<String>) -> Self {
        Self::new(MockScript { responses: BTreeMap::new(), default: Some(response.into()) })
    }

    /// A mock that answers call `i` with `responses[i]`.
    pub fn sequence(responses: impl IntoIterator<Item = impl Into<String>>) -> Self {
        let responses = responses
            .into_iter()
            .enumerate()
            .map(|(i, r)| (i, r.into()))
            .collect();
        Self::new(MockScript { responses, default: None })
    }
}

impl ModelClient for MockModelClient {
    fn complete(&self, _request: &PromptRequest) -> Result<String, ClientError> {
        let call = self.calls.fetch_add(1, Ordering::SeqCst);
        self.script
            .responses
            .get(&call)
            .or(self.script.default.as_ref())
            .cloned()
            .ok_or(ClientError::ScriptExhausted(call))
    }
}
