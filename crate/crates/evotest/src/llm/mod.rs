//! Uniform chat-completion interface with two backends: a remote
//! OpenAI-compatible endpoint and a deterministic seeded mock.

mod mock;
mod remote;
pub mod templates;

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

pub use mock::MockBackend;
pub use remote::{HttpResponse, HttpTransport, RemoteBackend};
pub use templates::{standard_agents, AgentConfig, AgentId, TemplateId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Mock,
    Remote,
}

impl BackendKind {
    pub fn label(self) -> &'static str {
        match self {
            BackendKind::Mock => "mock",
            BackendKind::Remote => "remote",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub template: TemplateId,
    pub system_prompt: String,
    pub user_content: String,
    pub temperature: f64,
    pub max_retries: u32,
    /// Per-call entropy for the mock backend. Callers derive it from their
    /// pipeline seed so independent pipelines stay reproducible; the remote
    /// backend ignores it.
    pub sampling_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionResponse {
    pub text: String,
    pub backend: BackendKind,
    pub latency: Duration,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("template `{template}` is missing required placeholders: {missing:?}")]
    Template { template: String, missing: Vec<String> },
    #[error("authentication rejected (HTTP {status}); not retried")]
    Auth { status: u16 },
    #[error("remote backend unavailable after {attempts} attempts: {last}")]
    RemoteUnavailable { attempts: u32, last: String },
    #[error("remote request failed with HTTP {status}: {detail}")]
    Http { status: u16, detail: String },
}

pub trait Backend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError>;
    fn kind(&self) -> BackendKind;
}

/// Wrapper that counts completed calls (successful or not) for run reports.
pub struct CallCounter<B> {
    inner: B,
    calls: AtomicU64,
}

impl<B: Backend> CallCounter<B> {
    pub fn new(inner: B) -> Self {
        CallCounter {
            inner,
            calls: AtomicU64::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

impl<B: Backend> Backend for CallCounter<B> {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.complete(request)
    }

    fn kind(&self) -> BackendKind {
        self.inner.kind()
    }
}

impl Backend for Box<dyn Backend> {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        (**self).complete(request)
    }

    fn kind(&self) -> BackendKind {
        (**self).kind()
    }
}

/// Strip a leading/trailing markdown code fence if a model added one
/// despite instructions.
pub fn strip_code_fences(text: &str) -> &str {
    let trimmed = text.trim();
    let Some(stripped) = trimmed.strip_prefix("```") else {
        return trimmed;
    };
    let Some(body) = stripped.split_once('\n').map(|(_, rest)| rest) else {
        return trimmed;
    };
    match body.rfind("```") {
        Some(end) => body[..end].trim(),
        None => body.trim(),
    }
}
