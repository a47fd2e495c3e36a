//! Generation and embedding providers, plus the retry policy shared by
//! every remote call.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProviderError {
    /// Worth retrying: rate limits, 5xx, timeouts, dropped connections.
    #[error("transient provider error: {0}")]
    Transient(String),
    #[error("provider error: {0}")]
    Fatal(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RetryError {
    #[error("provider exhausted after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: String },
    #[error("{0}")]
    Fatal(String),
}

/// Exponential backoff: `base_delay * factor^(attempt-1)`, optionally
/// scaled by a uniform jitter factor in [0.5, 1.0].
#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub factor: f64,
    pub jitter: bool,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 5,
            base_delay: Duration::from_secs(1),
            factor: 2.0,
            jitter: true,
        }
    }
}

impl RetryPolicy {
    /// Same attempt budget without any sleeping; used by tests.
    pub fn immediate() -> Self {
        Self {
            base_delay: Duration::ZERO,
            jitter: false,
            ..Self::default()
        }
    }

    pub fn delay_before(&self, attempt: u32) -> Duration {
        let exp = self.factor.powi(attempt.saturating_sub(1) as i32);
        let mut secs = self.base_delay.as_secs_f64() * exp;
        if self.jitter && secs > 0.0 {
            secs *= rand::rng().random_range(0.5..=1.0);
        }
        Duration::from_secs_f64(secs)
    }

    /// Runs `call` until it succeeds, fails fatally, or the attempt budget
    /// is spent. Returns the value and the number of attempts used.
    pub fn run<T>(
        &self,
        mut call: impl FnMut() -> Result<T, ProviderError>,
    ) -> Result<(T, u32), RetryError> {
        let max = self.max_attempts.max(1);
        let mut last = String::new();
        for attempt in 1..=max {
            match call() {
                Ok(v) => return Ok((v, attempt)),
                Err(ProviderError::Fatal(msg)) => return Err(RetryError::Fatal(msg)),
                Err(ProviderError::Transient(msg)) => {
                    log::debug!("attempt {attempt}/{max} failed: {msg}");
                    last = msg;
                    if attempt < max {
                        thread::sleep(self.delay_before(attempt));
                    }
                }
            }
        }
        Err(RetryError::Exhausted {
            attempts: max,
            last,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// The three request shapes providers understand.
#[derive(Debug, Clone, PartialEq)]
pub enum RequestShape {
    Completion { prompt: String },
    Edit { input: String, instruction: String },
    Chat { messages: Vec<ChatMessage> },
}

/// Identifies which sample and dialogue stage a request belongs to. Remote
/// providers ignore it; the mock uses it to look up scripted replies.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RequestMeta {
    pub bug_id: String,
    pub sample_index: usize,
    /// 0 for single-turn prompts, 1..=3 for reasoning stages.
    pub stage: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenRequest {
    pub meta: RequestMeta,
    pub shape: RequestShape,
    pub temperature: f64,
    pub max_tokens: usize,
}

pub trait GenerationProvider: Send + Sync {
    fn id(&self) -> String;
    fn generate(&self, request: &GenRequest) -> Result<String, ProviderError>;
}

pub trait EmbeddingProvider: Send + Sync {
    fn id(&self) -> String;
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError>;
}

/// One line of a mock script. `index: null` matches every sample index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub bug_id: String,
    pub index: Option<usize>,
    #[serde(default)]
    pub stage: u8,
    pub response: String,
}

type ScriptKey = (String, Option<usize>, u8);

/// Deterministic provider replaying scripted responses keyed by
/// `(bug_id, sample_index, stage)`.
#[derive(Debug, Default)]
pub struct MockProvider {
    script: HashMap<ScriptKey, String>,
    failures: Mutex<HashMap<ScriptKey, u32>>,
    calls: AtomicUsize,
}

impl MockProvider {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = ScriptEntry>) -> Self {
        let mut mock = Self::new();
        for e in entries {
            mock.script.insert((e.bug_id, e.index, e.stage), e.response);
        }
        mock
    }

    pub fn from_jsonl(path: &Path) -> Result<Self, ProviderError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ProviderError::Fatal(format!("cannot read {}: {e}", path.display())))?;
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: ScriptEntry = serde_json::from_str(line).map_err(|e| {
                ProviderError::Fatal(format!("{}:{}: {e}", path.display(), i + 1))
            })?;
            entries.push(entry);
        }
        Ok(Self::from_entries(entries))
    }

    pub fn with_response(mut self, bug_id: &str, index: Option<usize>, stage: u8, response: &str) -> Self {
        self.script.insert((bug_id.to_string(), index, stage), response.to_string());
        self
    }

    /// Makes the next `times` requests for this exact key fail transiently.
    pub fn with_failures(self, bug_id: &str, index: usize, stage: u8, times: u32) -> Self {
        self.failures
            .lock()
            .unwrap()
            .insert((bug_id.to_string(), Some(index), stage), times);
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl GenerationProvider for MockProvider {
    fn id(&self) -> String {
        "mock".to_string()
    }

    fn generate(&self, request: &GenRequest) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let meta = &request.meta;
        let exact = (meta.bug_id.clone(), Some(meta.sample_index), meta.stage);
        if let Some(left) = self.failures.lock().unwrap().get_mut(&exact) {
            if *left > 0 {
                *left -= 1;
                return Err(ProviderError::Transient("scripted failure".into()));
            }
        }
        self.script
            .get(&exact)
            .or_else(|| self.script.get(&(meta.bug_id.clone(), None, meta.stage)))
            .cloned()
            .ok_or_else(|| {
                ProviderError::Fatal(format!(
                    "no scripted response for {} index {} stage {}",
                    meta.bug_id, meta.sample_index, meta.stage
                ))
            })
    }
}

/// Client for OpenAI-style `/completions`, `/edits`, `/chat/completions`
/// and `/embeddings` endpoints.
pub struct HttpProvider {
    base_url: String,
    model: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpProvider {
    pub fn new(base_url: &str, model: &str, api_key: Option<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            base_url: base_url.trim_end_matches('/').to_string(),
            model: model.to_string(),
            api_key,
            agent,
        }
    }

    fn post(&self, path: &str, body: &Value) -> Result<Value, ProviderError> {
        let url = format!("{}{path}", self.base_url);
        let mut req = self.agent.post(&url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send(serde_json::to_vec(body).expect("json body"))
            .map_err(|e| ProviderError::Transient(format!("{url}: {e}")))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| ProviderError::Transient(format!("{url}: reading body: {e}")))?;
        match status {
            200..=299 => serde_json::from_str(&text)
                .map_err(|e| ProviderError::Fatal(format!("{url}: invalid JSON response: {e}"))),
            408 | 409 | 429 | 500..=599 => {
                Err(ProviderError::Transient(format!("{url}: HTTP {status}: {text}")))
            }
            _ => Err(ProviderError::Fatal(format!("{url}: HTTP {status}: {text}"))),
        }
    }
}

fn missing(field: &str) -> ProviderError {
    ProviderError::Fatal(format!("response lacks {field}"))
}

impl GenerationProvider for HttpProvider {
    fn id(&self) -> String {
        format!("http-{}", self.model)
    }

    fn generate(&self, request: &GenRequest) -> Result<String, ProviderError> {
        match &request.shape {
            RequestShape::Completion { prompt } => {
                let body = json!({
                    "model": self.model,
                    "prompt": prompt,
                    "temperature": request.temperature,
                    "max_tokens": request.max_tokens,
                    "n": 1,
                });
                let v = self.post("/completions", &body)?;
                v["choices"][0]["text"]
                    .as_str()
                    .map(str::to_string)
                    .ok_or_else(|| missing("choices[0].text"))
            }
            RequestShape::Edit { input, instruction } => {
                let body = json!({
                    "model": self.model,
                    "input": input,
                    "instruction": instruction,
                    "temperature": request.temperature,
                    "n": 1,
                });
                let v = self.post("/edits", &body)?;
                v["choices"][0]["text"]
                    .as_str()
                    .map(str::to_string)
                    .ok_or_else(|| missing("choices[0].text"))
            }
            RequestShape::Chat { messages } => {
                let body = json!({
                    "model": self.model,
                    "messages": messages,
                    "temperature": request.temperature,
                    "max_tokens": request.max_tokens,
                    "n": 1,
                });
                let v = self.post("/chat/completions", &body)?;
                v["choices"][0]["message"]["content"]
                    .as_str()
                    .map(str::to_string)
                    .ok_or_else(|| missing("choices[0].message.content"))
            }
        }
    }
}

impl EmbeddingProvider for HttpProvider {
    fn id(&self) -> String {
        format!("http-{}", self.model)
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        let v = self.post("/embeddings", &json!({"model": self.model, "input": text}))?;
        v["data"][0]["embedding"]
            .as_array()
            .ok_or_else(|| missing("data[0].embedding"))?
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| missing("numeric embedding")))
            .collect()
    }
}
