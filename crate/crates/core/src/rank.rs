//! Embedding-based recommender: candidates are compared with the buggy
//! input by cosine similarity, pruned below a threshold and ranked from the
//! least to the most similar survivor.

use std::collections::{BTreeSet, HashMap};
use std::io;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cache::{self, path_component, sha256_hex};
use crate::codesim::{tokenize, KeywordSet};
use crate::metrics::quantile;
use crate::patch::Status;
use crate::provider::{EmbeddingProvider, ProviderError, RetryError, RetryPolicy};

pub const LOCAL_DIM: usize = 512;

#[derive(Debug, Error)]
pub enum RankError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("vector dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("cosine undefined for a zero vector")]
    ZeroVector,
    #[error("no similarities to take a median of")]
    EmptyInput,
    #[error("no validation outcome for ranked patch {0}")]
    MissingOutcome(String),
    #[error("embedding provider failed: {0}")]
    Provider(#[from] RetryError),
    #[error("embedding cache: {0}")]
    Cache(#[from] io::Error),
}

/// Offline embedding: hashed bag of lexer tokens, L2-normalized.
#[derive(Debug, Clone)]
pub struct LocalEmbedder {
    keywords: KeywordSet,
    dim: usize,
}

impl Default for LocalEmbedder {
    fn default() -> Self {
        Self {
            keywords: KeywordSet::java(),
            dim: LOCAL_DIM,
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

impl LocalEmbedder {
    pub fn vector(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for tok in tokenize(text, &self.keywords) {
            v[(fnv1a(tok.text.as_bytes()) % self.dim as u64) as usize] += 1.0;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

impl EmbeddingProvider for LocalEmbedder {
    fn id(&self) -> String {
        format!("local-hash-{}", self.dim)
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        Ok(self.vector(text))
    }
}

/// Cached, retrying front end to an [`EmbeddingProvider`].
pub struct Embedder<'p> {
    provider: &'p dyn EmbeddingProvider,
    cache_dir: Option<PathBuf>,
    retry: RetryPolicy,
    calls: AtomicUsize,
}

impl<'p> Embedder<'p> {
    pub fn new(provider: &'p dyn EmbeddingProvider) -> Self {
        Self {
            provider,
            cache_dir: None,
            retry: RetryPolicy::default(),
            calls: AtomicUsize::new(0),
        }
    }

    /// `dir` is the `embeddings/` directory of the cache tree.
    pub fn with_cache(mut self, dir: impl Into<PathBuf>) -> Self {
        self.cache_dir = Some(dir.into());
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    /// Provider calls made so far (cache hits excluded).
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn embed(&self, text: &str) -> Result<Vec<f64>, RankError> {
        if text.trim().is_empty() {
            return Err(RankError::EmptyText);
        }
        let path = self.cache_dir.as_ref().map(|d| {
            d.join(path_component(&self.provider.id()))
                .join(format!("{}.json", sha256_hex(text.as_bytes())))
        });
        if let Some(p) = &path {
            if let Some(v) = cache::read_json::<Vec<f64>>(p)? {
                return Ok(v);
            }
        }
        let (v, _) = self.retry.run(|| {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.provider.embed(text)
        })?;
        if let Some(p) = &path {
            cache::write_json_atomic(p, &v)?;
        }
        Ok(v)
    }
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, RankError> {
    if u.len() != v.len() || u.is_empty() {
        return Err(RankError::DimensionMismatch(u.len(), v.len()));
    }
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(RankError::ZeroVector);
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    All,
    CompilePruned,
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(Variant::All),
            "compile-pruned" => Ok(Variant::CompilePruned),
            other => Err(format!("unknown variant {other:?} (expected all or compile-pruned)")),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::All => "all",
            Variant::CompilePruned => "compile-pruned",
        })
    }
}

/// A unique candidate and its similarity to the buggy input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub content_hash: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub content_hash: String,
    pub similarity: f64,
    /// 1-based.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSuggestions {
    pub bug_id: String,
    pub entries: Vec<RankedEntry>,
    pub pruned: Vec<Scored>,
    pub threshold_used: f64,
    pub variant: Variant,
}

/// Keeps candidates with similarity >= `threshold` and orders them by
/// ascending similarity, ties by hash. Repeated hashes count once.
pub fn prune_and_rank(bug_id: &str, candidates: &[Scored], threshold: f64, variant: Variant) -> RankedSuggestions {
    let mut seen = BTreeSet::new();
    let mut keep = Vec::new();
    let mut pruned = Vec::new();
    for c in candidates {
        if !seen.insert(c.content_hash.as_str()) {
            continue;
        }
        if c.similarity >= threshold {
            keep.push(c.clone());
        } else {
            pruned.push(c.clone());
        }
    }
    let by_sim = |a: &Scored, b: &Scored| {
        a.similarity
            .total_cmp(&b.similarity)
            .then_with(|| a.content_hash.cmp(&b.content_hash))
    };
    keep.sort_by(by_sim);
    pruned.sort_by(by_sim);
    RankedSuggestions {
        bug_id: bug_id.to_string(),
        entries: keep
            .into_iter()
            .enumerate()
            .map(|(i, s)| RankedEntry {
                content_hash: s.content_hash,
                similarity: s.similarity,
                rank: i + 1,
            })
            .collect(),
        pruned,
        threshold_used: threshold,
        variant,
    }
}

/// Interpolated median of every similarity in the run.
pub fn compute_threshold(similarities: &[f64]) -> Result<f64, RankError> {
    quantile(similarities, 0.5).map_err(|_| RankError::EmptyInput)
}

/// Whether any of the first `k` entries is plausible.
pub fn r_pass_at_k(ranked: &RankedSuggestions, outcomes: &HashMap<String, Status>, k: usize) -> Result<bool, RankError> {
    for e in &ranked.entries {
        if !outcomes.contains_key(&e.content_hash) {
            return Err(RankError::MissingOutcome(e.content_hash.clone()));
        }
    }
    Ok(ranked
        .entries
        .iter()
        .take(k)
        .any(|e| outcomes[&e.content_hash] == Status::Plausible))
}

/// Percentage of bugs with a plausible patch in their top `k`.
pub fn aggregate_r_pass_at_k(per_bug: &[bool]) -> f64 {
    if per_bug.is_empty() {
        return 0.0;
    }
    100.0 * per_bug.iter().filter(|b| **b).count() as f64 / per_bug.len() as f64
}

/// Ranks all candidates, and separately only those that compile. Hashes
/// missing from `compiles` are treated as not compiling.
pub fn rank_variants(
    bug_id: &str,
    candidates: &[Scored],
    compiles: &HashMap<String, bool>,
    threshold: f64,
) -> (RankedSuggestions, RankedSuggestions) {
    let all = prune_and_rank(bug_id, candidates, threshold, Variant::All);
    let compiling: Vec<Scored> = candidates
        .iter()
        .filter(|c| compiles.get(&c.content_hash).copied().unwrap_or(false))
        .cloned()
        .collect();
    let pruned = prune_and_rank(bug_id, &compiling, threshold, Variant::CompilePruned);
    (all, pruned)
}
