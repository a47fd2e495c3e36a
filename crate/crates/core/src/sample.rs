//! Sampling candidate patches from a generation provider, extracting the
//! function text from raw responses, and duplicate accounting.

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::OnceLock;
use std::time::{SystemTime, UNIX_EPOCH};

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cache::{self, path_component};
use crate::metrics::{canonical_form, canonical_hash};
use crate::pool::parallel_map;
use crate::prompt::{PromptSpec, Strategy};
use crate::provider::{
    ChatMessage, GenRequest, GenerationProvider, RequestMeta, RequestShape, RetryError, RetryPolicy,
};

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("provider error for {bug_id}#{index}: {message}")]
    ProviderError {
        bug_id: String,
        index: usize,
        message: String,
    },
    #[error("provider exhausted for {bug_id}#{index} after {attempts} attempts: {last}")]
    ProviderExhausted {
        bug_id: String,
        index: usize,
        attempts: u32,
        last: String,
    },
    #[error("prompt needs {needed} tokens plus {reserve} for generation, budget is {budget}")]
    BudgetExceeded {
        needed: usize,
        reserve: usize,
        budget: usize,
    },
    #[error("invalid generation parameters: {0}")]
    InvalidParams(String),
    #[error("sample cache: {0}")]
    Cache(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Completion,
    Edit,
    Chat,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "completion" => Ok(Mode::Completion),
            "edit" => Ok(Mode::Edit),
            "chat" => Ok(Mode::Chat),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Completion => "completion",
            Mode::Edit => "edit",
            Mode::Chat => "chat",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub temperature: f64,
    pub n_samples: usize,
    pub max_gen_tokens: usize,
    pub context_budget: usize,
    pub mode: Mode,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            temperature: 0.8,
            n_samples: 100,
            max_gen_tokens: 750,
            context_budget: 4096,
            mode: Mode::Chat,
        }
    }
}

impl GenParams {
    /// The two sampling temperatures used for replication runs.
    pub const REPLICATION_TEMPERATURES: [f64; 2] = [0.2, 0.8];

    pub fn replication(temperature: f64, mode: Mode, context_budget: usize) -> Self {
        Self {
            temperature,
            mode,
            context_budget,
            ..Self::default()
        }
    }

    pub fn check(&self) -> Result<(), SampleError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(SampleError::InvalidParams(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.n_samples == 0 || self.max_gen_tokens == 0 {
            return Err(SampleError::InvalidParams(
                "n_samples and max_gen_tokens must be positive".into(),
            ));
        }
        if self.context_budget <= self.max_gen_tokens {
            return Err(SampleError::InvalidParams(format!(
                "context_budget {} leaves no room after max_gen_tokens {}",
                self.context_budget, self.max_gen_tokens
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePatch {
    pub bug_id: String,
    pub sample_index: usize,
    pub raw_response: String,
    pub patch_text: String,
    pub canonical: String,
    pub content_hash: String,
    /// Extraction produced nothing; kept so `n` stays intact for pass@k.
    pub empty: bool,
    pub attempts: u32,
}

impl CandidatePatch {
    pub fn new(bug_id: &str, sample_index: usize, raw_response: String, patch_text: String, attempts: u32) -> Self {
        let canonical = canonical_form(&patch_text);
        Self {
            bug_id: bug_id.to_string(),
            sample_index,
            content_hash: canonical_hash(&canonical),
            empty: patch_text.trim().is_empty(),
            raw_response,
            patch_text,
            canonical,
            attempts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timestamps {
    pub requested_at: f64,
    pub completed_at: f64,
}

/// One cached sample. `transcript` is present for staged dialogues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub raw_response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<Vec<ChatMessage>>,
    pub timestamps: Timestamps,
    #[serde(default = "one")]
    pub attempts: u32,
}

fn one() -> u32 {
    1
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

/// Digest of everything that determines a provider request apart from the
/// temperature (which has its own cache directory level).
pub fn prompt_digest(prompt: &PromptSpec, params: &GenParams) -> String {
    let key = serde_json::json!({
        "strategy": prompt.strategy,
        "turns": prompt.turns,
        "completion_suffix": prompt.completion_suffix,
        "mode": params.mode,
        "max_gen_tokens": params.max_gen_tokens,
    });
    cache::sha256_hex(key.to_string().as_bytes())
}

/// `{root}/{provider_id}/{bug_id}/{prompt_digest}/{temperature}/{index}.json`
#[derive(Debug, Clone)]
pub struct SampleCache {
    root: PathBuf,
}

impl SampleCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn entry_path(&self, provider_id: &str, bug_id: &str, digest: &str, temperature: f64, index: usize) -> PathBuf {
        self.root
            .join(path_component(provider_id))
            .join(path_component(bug_id))
            .join(digest)
            .join(path_component(&format!("{temperature}")))
            .join(format!("{index}.json"))
    }
}

fn fence_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?s)```[^\n]*\n(.*?)(?:```|\z)").unwrap())
}

fn signature_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?m)^[ \t]*(?:@\w+(?:\([^)]*\))?\s+)*(?:(?:public|protected|private|static|final|abstract|synchronized|native|strictfp|default)\s+)*(?:<[^>]+>\s+)?[A-Za-z_][\w.]*(?:<[^;{}()]*>)?(?:\[\])*\s+[A-Za-z_]\w*\s*\([^;]*$",
        )
        .unwrap()
    })
}

const NOT_A_TYPE: [&str; 8] = ["return", "new", "throw", "else", "if", "while", "for", "case"];

/// Pulls the function text out of a raw provider response: the first fenced
/// code block if any; in chat mode, otherwise everything from the first
/// line that looks like a method signature; otherwise the trimmed response.
pub fn extract_patch(raw: &str, mode: Mode) -> String {
    if let Some(caps) = fence_re().captures(raw) {
        let body = caps.get(1).map_or("", |m| m.as_str());
        return body.trim_end().trim_start_matches(['\n', '\r']).to_string();
    }
    if mode == Mode::Chat {
        for m in signature_re().find_iter(raw) {
            let first_word = m.as_str().split_whitespace().next().unwrap_or("");
            if !NOT_A_TYPE.contains(&first_word) {
                return raw[m.start()..].trim().to_string();
            }
        }
    }
    raw.trim().to_string()
}

fn join_completion(signature: &str, body: &str) -> String {
    if body.is_empty() {
        return String::new();
    }
    if body.starts_with('\n') {
        format!("{signature}{body}")
    } else {
        format!("{signature}\n{body}")
    }
}

/// Drives a provider for one prompt: `n_samples` independent requests (or
/// staged dialogues), cached per sample index and restored to index order.
pub struct Sampler<'a> {
    provider: &'a dyn GenerationProvider,
    cache: Option<SampleCache>,
    retry: RetryPolicy,
    concurrency: usize,
}

impl<'a> Sampler<'a> {
    pub fn new(provider: &'a dyn GenerationProvider) -> Self {
        Self {
            provider,
            cache: None,
            retry: RetryPolicy::default(),
            concurrency: 4,
        }
    }

    pub fn with_cache(mut self, cache: SampleCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_concurrency(mut self, concurrency: usize) -> Self {
        self.concurrency = concurrency.max(1);
        self
    }

    pub fn sample(&self, prompt: &PromptSpec, params: &GenParams) -> Result<Vec<CandidatePatch>, SampleError> {
        params.check()?;
        if prompt.strategy == Strategy::ReasoningExtraction && params.mode != Mode::Chat {
            return Err(SampleError::InvalidParams(
                "reasoning extraction needs a chat-mode provider".into(),
            ));
        }
        if prompt.token_estimate + params.max_gen_tokens > params.context_budget {
            return Err(SampleError::BudgetExceeded {
                needed: prompt.token_estimate,
                reserve: params.max_gen_tokens,
                budget: params.context_budget,
            });
        }
        let digest = prompt_digest(prompt, params);
        let indices: Vec<usize> = (0..params.n_samples).collect();
        let results = parallel_map(&indices, self.concurrency, |_, &index| {
            self.sample_one(prompt, params, &digest, index)
        });
        results.into_iter().collect()
    }

    fn sample_one(
        &self,
        prompt: &PromptSpec,
        params: &GenParams,
        digest: &str,
        index: usize,
    ) -> Result<CandidatePatch, SampleError> {
        let path = self.cache.as_ref().map(|c| {
            c.entry_path(&self.provider.id(), &prompt.bug_id, digest, params.temperature, index)
        });
        let cached = match &path {
            Some(p) => cache::read_json::<SampleRecord>(p)?,
            None => None,
        };
        let record = match cached {
            Some(r) => r,
            None => {
                let requested_at = unix_now();
                let (raw, transcript, attempts) = if prompt.strategy == Strategy::ReasoningExtraction {
                    let (transcript, attempts) = self.dialogue(prompt, params, index)?;
                    let last = transcript.last().map(|m| m.content.clone()).unwrap_or_default();
                    (last, Some(transcript), attempts)
                } else {
                    let (raw, attempts) = self.single(prompt, params, index)?;
                    (raw, None, attempts)
                };
                let record = SampleRecord {
                    raw_response: raw,
                    transcript,
                    timestamps: Timestamps {
                        requested_at,
                        completed_at: unix_now(),
                    },
                    attempts,
                };
                if let Some(p) = &path {
                    cache::write_json_atomic(p, &record)?;
                }
                record
            }
        };
        let mut patch_text = extract_patch(&record.raw_response, params.mode);
        if params.mode == Mode::Completion {
            if let Some(sig) = &prompt.completion_suffix {
                patch_text = join_completion(sig, &patch_text);
            }
        }
        Ok(CandidatePatch::new(
            &prompt.bug_id,
            index,
            record.raw_response,
            patch_text,
            record.attempts,
        ))
    }

    fn call(&self, request: &GenRequest) -> Result<(String, u32), SampleError> {
        self.retry
            .run(|| self.provider.generate(request))
            .map_err(|e| match e {
                RetryError::Exhausted { attempts, last } => SampleError::ProviderExhausted {
                    bug_id: request.meta.bug_id.clone(),
                    index: request.meta.sample_index,
                    attempts,
                    last,
                },
                RetryError::Fatal(message) => SampleError::ProviderError {
                    bug_id: request.meta.bug_id.clone(),
                    index: request.meta.sample_index,
                    message,
                },
            })
    }

    fn single(&self, prompt: &PromptSpec, params: &GenParams, index: usize) -> Result<(String, u32), SampleError> {
        let text = prompt.user_turns().next().map(|t| t.text.clone()).unwrap_or_default();
        let shape = match params.mode {
            Mode::Completion => RequestShape::Completion {
                prompt: match &prompt.completion_suffix {
                    Some(sig) => format!("{text}\n{sig}"),
                    None => text,
                },
            },
            Mode::Edit => RequestShape::Edit {
                input: prompt.target.buggy_function.clone(),
                instruction: text,
            },
            Mode::Chat => RequestShape::Chat {
                messages: vec![ChatMessage::user(text)],
            },
        };
        self.call(&GenRequest {
            meta: RequestMeta {
                bug_id: prompt.bug_id.clone(),
                sample_index: index,
                stage: 0,
            },
            shape,
            temperature: params.temperature,
            max_tokens: params.max_gen_tokens,
        })
    }

    /// Localize, explain, fix: each stage is sent with the full conversation
    /// so far. Returns the 6-message transcript and the total attempts.
    fn dialogue(
        &self,
        prompt: &PromptSpec,
        params: &GenParams,
        index: usize,
    ) -> Result<(Vec<ChatMessage>, u32), SampleError> {
        let stages: Vec<&str> = prompt.user_turns().map(|t| t.text.as_str()).collect();
        if stages.len() != 3 {
            return Err(SampleError::InvalidParams(format!(
                "reasoning prompt has {} stages, expected 3",
                stages.len()
            )));
        }
        let mut transcript = Vec::with_capacity(6);
        let mut attempts = 0;
        for (stage, text) in stages.into_iter().enumerate() {
            transcript.push(ChatMessage::user(text));
            let (reply, used) = self.call(&GenRequest {
                meta: RequestMeta {
                    bug_id: prompt.bug_id.clone(),
                    sample_index: index,
                    stage: stage as u8 + 1,
                },
                shape: RequestShape::Chat {
                    messages: transcript.clone(),
                },
                temperature: params.temperature,
                max_tokens: params.max_gen_tokens,
            })?;
            attempts += used;
            transcript.push(ChatMessage::assistant(reply));
        }
        Ok((transcript, attempts))
    }
}

/// Sampled reasoning dialogue for a single index; the candidate is built from
/// the final (fix) reply only.
pub fn run_reasoning_dialogue(
    sampler: &Sampler<'_>,
    stages: &PromptSpec,
    params: &GenParams,
    index: usize,
) -> Result<(CandidatePatch, Vec<ChatMessage>), SampleError> {
    if stages.strategy != Strategy::ReasoningExtraction {
        return Err(SampleError::InvalidParams("prompt is not a staged dialogue".into()));
    }
    let (transcript, attempts) = sampler.dialogue(stages, params, index)?;
    let last = transcript.last().map(|m| m.content.clone()).unwrap_or_default();
    let patch = extract_patch(&last, params.mode);
    Ok((CandidatePatch::new(&stages.bug_id, index, last, patch, attempts), transcript))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DedupStats {
    pub total: usize,
    pub unique_count: usize,
    pub duplicate_fraction: f64,
    /// content hash -> sample indices sharing it
    pub groups: BTreeMap<String, Vec<usize>>,
}

/// Groups candidates by canonical hash. Nothing is removed: pass@k is
/// computed over all `n` samples.
pub fn dedup_stats(candidates: &[CandidatePatch]) -> DedupStats {
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for c in candidates {
        groups.entry(c.content_hash.clone()).or_default().push(c.sample_index);
    }
    let total = candidates.len();
    let unique_count = groups.len();
    DedupStats {
        total,
        unique_count,
        duplicate_fraction: if total == 0 {
            0.0
        } else {
            1.0 - unique_count as f64 / total as f64
        },
        groups,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{BugRecord, MethodSpan};
    use crate::prompt::{build_reasoning_turns, build_zero_shot};
    use crate::provider::MockProvider;

    fn record() -> BugRecord {
        BugRecord {
            bug_id: "B-1".into(),
            project: "P".into(),
            issue_title: "Wrong value".into(),
            issue_description: "f returns 1".into(),
            buggy_function: "int f() {\n  return 1;\n}".into(),
            fixed_function: "int f() {\n  return 2;\n}".into(),
            file_path: "A.java".into(),
            method_span: MethodSpan {
                start_line: 1,
                end_line: 3,
            },
            language: "java".into(),
            workspace_setup_cmd: "s".into(),
            compile_cmd: "c".into(),
            regression_cmd: "r".into(),
            trigger_cmd: "t".into(),
            stage_timeout_s: None,
        }
    }

    fn params(n: usize, mode: Mode) -> GenParams {
        GenParams {
            n_samples: n,
            mode,
            ..GenParams::default()
        }
    }

    #[test]
    fn extract_examples() {
        assert_eq!(
            extract_patch("Here is the fix:\n```\nint f(){return 1;}\n```", Mode::Chat),
            "int f(){return 1;}"
        );
        assert_eq!(
            extract_patch("```java\nA a;\n```\ntext\n```\nB b;\n```", Mode::Chat),
            "A a;"
        );
        assert_eq!(extract_patch("  int f(){}\n\n", Mode::Completion), "int f(){}");
        assert_eq!(extract_patch("```\nunterminated", Mode::Chat), "unterminated");
    }

    #[test]
    fn extract_signature_in_chat() {
        let raw = "Sure, the fix is below.\npublic int f(int a) {\n  return a;\n}";
        assert_eq!(extract_patch(raw, Mode::Chat), "public int f(int a) {\n  return a;\n}");
        // not applied outside chat mode
        assert_eq!(extract_patch(raw, Mode::Edit), raw);
        // statements are not signatures
        assert_eq!(extract_patch("return foo(x);", Mode::Chat), "return foo(x);");
    }

    #[test]
    fn samples_in_script_order() {
        let mock = MockProvider::new()
            .with_response("B-1", Some(0), 0, "```\nint f(){return 2;}\n```")
            .with_response("B-1", Some(1), 0, "int f(){return 3;}")
            .with_response("B-1", Some(2), 0, "");
        let prompt = build_zero_shot(&record()).unwrap();
        let out = Sampler::new(&mock)
            .with_retry(RetryPolicy::immediate())
            .sample(&prompt, &params(3, Mode::Chat))
            .unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].patch_text, "int f(){return 2;}");
        assert_eq!(out[1].patch_text, "int f(){return 3;}");
        assert!(out[2].empty);
        assert_eq!(out.iter().map(|c| c.sample_index).collect::<Vec<_>>(), [0, 1, 2]);
        for c in &out {
            assert_eq!(c.canonical, canonical_form(&c.patch_text));
            assert_eq!(c.content_hash, canonical_hash(&c.canonical));
        }
    }

    #[test]
    fn retries_are_recorded() {
        let mock = MockProvider::new()
            .with_response("B-1", None, 0, "int f(){}")
            .with_failures("B-1", 0, 0, 2);
        let prompt = build_zero_shot(&record()).unwrap();
        let out = Sampler::new(&mock)
            .with_retry(RetryPolicy::immediate())
            .sample(&prompt, &params(1, Mode::Chat))
            .unwrap();
        assert_eq!(out[0].attempts, 3);
    }

    #[test]
    fn exhausted_provider() {
        let mock = MockProvider::new()
            .with_response("B-1", None, 0, "int f(){}")
            .with_failures("B-1", 1, 0, 99);
        let prompt = build_zero_shot(&record()).unwrap();
        let err = Sampler::new(&mock)
            .with_retry(RetryPolicy::immediate())
            .sample(&prompt, &params(2, Mode::Chat))
            .unwrap_err();
        assert!(matches!(err, SampleError::ProviderExhausted { index: 1, attempts: 5, .. }));
    }

    #[test]
    fn warm_cache_makes_no_calls() {
        let dir = tempfile::tempdir().unwrap();
        let prompt = build_zero_shot(&record()).unwrap();
        let p = params(4, Mode::Chat);
        let mock = MockProvider::new().with_response("B-1", None, 0, "int f(){return 2;}");
        let first = Sampler::new(&mock)
            .with_cache(SampleCache::new(dir.path()))
            .sample(&prompt, &p)
            .unwrap();
        assert_eq!(mock.calls(), 4);
        let cold = MockProvider::new();
        let second = Sampler::new(&cold)
            .with_cache(SampleCache::new(dir.path()))
            .sample(&prompt, &p)
            .unwrap();
        assert_eq!(cold.calls(), 0);
        assert_eq!(first, second);
        let digest = prompt_digest(&prompt, &p);
        assert!(dir.path().join("mock/B-1").join(&digest).join("0.8/3.json").is_file());
    }

    #[test]
    fn completion_mode_uses_signature() {
        let mock = MockProvider::new().with_response("B-1", None, 0, "  return 2;\n}");
        let prompt = build_zero_shot(&record()).unwrap();
        let out = Sampler::new(&mock)
            .sample(&prompt, &params(1, Mode::Completion))
            .unwrap();
        assert_eq!(out[0].patch_text, "int f() {\nreturn 2;\n}");
    }

    #[test]
    fn budget_is_checked() {
        let mock = MockProvider::new();
        let prompt = build_zero_shot(&record()).unwrap();
        let p = GenParams {
            context_budget: prompt.token_estimate + 749,
            ..params(1, Mode::Chat)
        };
        assert!(matches!(
            Sampler::new(&mock).sample(&prompt, &p),
            Err(SampleError::BudgetExceeded { .. })
        ));
        assert!(matches!(
            Sampler::new(&mock).sample(&prompt, &GenParams { temperature: 2.5, ..p }),
            Err(SampleError::InvalidParams(_))
        ));
    }

    fn dialogue_mock() -> MockProvider {
        MockProvider::new()
            .with_response("B-1", None, 1, "R1: line 2")
            .with_response("B-1", None, 2, "R2: should return 2")
            .with_response("B-1", None, 3, "```\nint f() { return 2; }\n```")
    }

    #[test]
    fn reasoning_dialogue_transcript() {
        let mock = dialogue_mock();
        let stages = build_reasoning_turns(&record()).unwrap();
        let sampler = Sampler::new(&mock).with_retry(RetryPolicy::immediate());
        let (cand, transcript) = run_reasoning_dialogue(&sampler, &stages, &params(1, Mode::Chat), 0).unwrap();
        assert_eq!(transcript.len(), 6);
        assert_eq!(transcript[1].content, "R1: line 2");
        assert_eq!(transcript[3].content, "R2: should return 2");
        assert_eq!(cand.patch_text, "int f() { return 2; }");
    }

    #[test]
    fn reasoning_stage_failure_emits_nothing() {
        let mock = dialogue_mock().with_failures("B-1", 0, 2, 99);
        let stages = build_reasoning_turns(&record()).unwrap();
        let sampler = Sampler::new(&mock).with_retry(RetryPolicy::immediate());
        let err = run_reasoning_dialogue(&sampler, &stages, &params(1, Mode::Chat), 0).unwrap_err();
        assert!(matches!(err, SampleError::ProviderExhausted { index: 0, .. }));
        // stage 1 once, stage 2 five times, stage 3 never
        assert_eq!(mock.calls(), 6);
    }

    /// Records the conversation length seen by each stage request.
    struct Recorder {
        inner: MockProvider,
        seen: std::sync::Mutex<Vec<(usize, u8, usize)>>,
    }

    impl GenerationProvider for Recorder {
        fn id(&self) -> String {
            "rec".into()
        }

        fn generate(&self, request: &GenRequest) -> Result<String, crate::provider::ProviderError> {
            if let RequestShape::Chat { messages } = &request.shape {
                self.seen.lock().unwrap().push((
                    request.meta.sample_index,
                    request.meta.stage,
                    messages.len(),
                ));
            }
            self.inner.generate(request)
        }
    }

    #[test]
    fn reasoning_samples_are_independent() {
        let rec = Recorder {
            inner: dialogue_mock(),
            seen: Default::default(),
        };
        let stages = build_reasoning_turns(&record()).unwrap();
        let out = Sampler::new(&rec)
            .with_concurrency(1)
            .sample(&stages, &params(2, Mode::Chat))
            .unwrap();
        assert_eq!(out.len(), 2);
        let seen = rec.seen.lock().unwrap().clone();
        assert_eq!(seen, vec![(0, 1, 1), (0, 2, 3), (0, 3, 5), (1, 1, 1), (1, 2, 3), (1, 3, 5)]);
    }

    fn cand(i: usize, text: &str) -> CandidatePatch {
        CandidatePatch::new("B", i, text.into(), text.into(), 1)
    }

    #[test]
    fn dedup_examples() {
        let same: Vec<_> = ["a b", "ab", " a  b\n", "a\tb"].iter().enumerate().map(|(i, t)| cand(i, t)).collect();
        let s = dedup_stats(&same);
        assert_eq!(s.unique_count, 1);
        assert!((s.duplicate_fraction - 0.75).abs() < 1e-12);

        let distinct: Vec<_> = ["a", "b", "c"].iter().enumerate().map(|(i, t)| cand(i, t)).collect();
        assert_eq!(dedup_stats(&distinct).duplicate_fraction, 0.0);

        let pairs: Vec<_> = ["x", "y", "x ", "y\n"].iter().enumerate().map(|(i, t)| cand(i, t)).collect();
        let s = dedup_stats(&pairs);
        assert_eq!(s.unique_count, 2);
        assert_eq!(s.duplicate_fraction, 0.5);
        assert!(s.groups.values().all(|g| g.len() == 2));
    }
}
