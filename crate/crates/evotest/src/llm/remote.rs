//! OpenAI-compatible chat-completions backend over HTTPS.
//!
//! Transport and 5xx/429 failures are retried with exponential backoff
//! (1s/2s/4s, +/-20% jitter) up to the request's retry budget; 401/403 is
//! never retried. The HTTP layer sits behind a trait so tests can count
//! requests with a fake transport.

use std::time::{Duration, Instant};

use rand::Rng;
use serde::Deserialize;

use super::{Backend, BackendKind, CompletionRequest, CompletionResponse, LlmError};

#[derive(Debug, Clone)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

pub trait HttpTransport: Send + Sync {
    /// POST a JSON body; `Err` means the request never produced an HTTP
    /// status (DNS, connect, timeout).
    fn post_json(&self, url: &str, api_key: &str, body: &str) -> Result<HttpResponse, String>;
}

/// Production transport backed by ureq.
pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new() -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .http_status_as_error(false)
            .build();
        UreqTransport {
            agent: config.into(),
        }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        Self::new()
    }
}

impl HttpTransport for UreqTransport {
    fn post_json(&self, url: &str, api_key: &str, body: &str) -> Result<HttpResponse, String> {
        let result = self
            .agent
            .post(url)
            .header("authorization", &format!("Bearer {api_key}"))
            .header("content-type", "application/json")
            .send(body);
        match result {
            Ok(mut response) => {
                let status = response.status().as_u16();
                let body = response
                    .body_mut()
                    .read_to_string()
                    .map_err(|e| format!("failed to read response body: {e}"))?;
                Ok(HttpResponse { status, body })
            }
            Err(e) => Err(e.to_string()),
        }
    }
}

pub struct RemoteBackend {
    url: String,
    model: String,
    api_key: String,
    transport: Box<dyn HttpTransport>,
    sleeper: Box<dyn Fn(Duration) + Send + Sync>,
}

impl RemoteBackend {
    pub fn new(endpoint: &str, model: &str, api_key: &str) -> Self {
        RemoteBackend {
            url: chat_completions_url(endpoint),
            model: model.to_string(),
            api_key: api_key.to_string(),
            transport: Box::new(UreqTransport::new()),
            sleeper: Box::new(std::thread::sleep),
        }
    }

    pub fn with_transport(mut self, transport: Box<dyn HttpTransport>) -> Self {
        self.transport = transport;
        self
    }

    /// Replace the backoff sleeper; tests use a no-op.
    pub fn with_sleeper(mut self, sleeper: Box<dyn Fn(Duration) + Send + Sync>) -> Self {
        self.sleeper = sleeper;
        self
    }

    fn request_body(&self, request: &CompletionRequest) -> String {
        serde_json::json!({
            "model": self.model,
            "temperature": request.temperature,
            "messages": [
                { "role": "system", "content": request.system_prompt },
                { "role": "user", "content": request.user_content },
            ],
        })
        .to_string()
    }
}

fn chat_completions_url(endpoint: &str) -> String {
    let trimmed = endpoint.trim_end_matches('/');
    if trimmed.ends_with("/chat/completions") {
        trimmed.to_string()
    } else {
        format!("{trimmed}/chat/completions")
    }
}

fn backoff_delay(attempt: u32) -> Duration {
    let base_ms = 1000u64 << attempt.min(4);
    let jitter = rand::rng().random_range(-0.2..=0.2);
    let ms = (base_ms as f64 * (1.0 + jitter)).max(0.0) as u64;
    Duration::from_millis(ms)
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: String,
}

#[derive(Deserialize, Default)]
struct Usage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

impl Backend for RemoteBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        let body = self.request_body(request);
        let max_attempts = 1 + request.max_retries;
        let mut last_error = String::new();
        for attempt in 0..max_attempts {
            if attempt > 0 {
                (self.sleeper)(backoff_delay(attempt - 1));
            }
            let started = Instant::now();
            match self.transport.post_json(&self.url, &self.api_key, &body) {
                Err(transport_error) => {
                    last_error = transport_error;
                    continue;
                }
                Ok(HttpResponse { status, body }) => match status {
                    200..=299 => {
                        let parsed: ChatResponse =
                            serde_json::from_str(&body).map_err(|e| LlmError::Http {
                                status,
                                detail: format!("malformed chat response: {e}"),
                            })?;
                        let text = parsed
                            .choices
                            .into_iter()
                            .next()
                            .map(|c| c.message.content)
                            .ok_or(LlmError::Http {
                                status,
                                detail: "chat response carried no choices".to_string(),
                            })?;
                        let usage = parsed.usage.unwrap_or_default();
                        return Ok(CompletionResponse {
                            text,
                            backend: BackendKind::Remote,
                            latency: started.elapsed(),
                            prompt_tokens: usage.prompt_tokens,
                            completion_tokens: usage.completion_tokens,
                        });
                    }
                    401 | 403 => return Err(LlmError::Auth { status }),
                    429 | 500..=599 => {
                        last_error = format!("HTTP {status}");
                        continue;
                    }
                    other => {
                        return Err(LlmError::Http {
                            status: other,
                            detail: truncate(&body, 200),
                        })
                    }
                },
            }
        }
        Err(LlmError::RemoteUnavailable {
            attempts: max_attempts,
            last: last_error,
        })
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Remote
    }
}

fn truncate(s: &str, max: usize) -> String {
    if s.len() <= max {
        s.to_string()
    } else {
        format!("{}...", &s[..max])
    }
}
