//! Run configuration and the generate, validate, report and rank phases.
//!
//! Every phase reads its inputs from the cache and report directories and
//! writes its outputs there, so phases can be run separately, repeated, or
//! resumed after an interruption. Report files contain no timestamps or
//! host-dependent data; two runs over the same caches are byte-identical.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::cache::{self, CacheDir};
use crate::codesim::{CodeSim, CodeSimError, Weights};
use crate::corpus::{load_corpus, BugRecord, Corpus};
use crate::metrics::{
    self, distribution_summary, overlap, pass_at_k_capped, summary_stats, wilcoxon_signed_rank_one_sided, BugResult,
};
use crate::patch::{CommandRunner, PatchError, ShellRunner, StageStatus, Status, StubRunner, Validator};
use crate::pool::{default_workers, parallel_map};
use crate::prompt::{self, fit_to_budget, Strategy};
use crate::provider::{EmbeddingProvider, GenerationProvider, HttpProvider, MockProvider};
use crate::rank::{
    aggregate_r_pass_at_k, compute_threshold, cosine, prune_and_rank, r_pass_at_k, Embedder, LocalEmbedder,
    RankError, RankedSuggestions, Scored, Variant,
};
use crate::sample::{CandidatePatch, GenParams, Mode, SampleCache, SampleError, Sampler};

/// k values reported in `passk.csv`.
pub const K_GRID: [usize; 7] = [1, 2, 5, 10, 20, 50, 100];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown bug id {0:?} in filter")]
    UnknownBugId(String),
    #[error("{0}")]
    ProviderExhausted(String),
    #[error("validation infrastructure failure: {0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    Other(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> u8 {
        match self {
            PipelineError::Config(_) | PipelineError::UnknownBugId(_) => 2,
            PipelineError::ProviderExhausted(_) => 3,
            PipelineError::Validation(_) => 4,
            PipelineError::Io { .. } | PipelineError::Other(_) => 1,
        }
    }
}

impl From<SampleError> for PipelineError {
    fn from(e: SampleError) -> Self {
        match e {
            SampleError::ProviderExhausted { .. } | SampleError::ProviderError { .. } => {
                PipelineError::ProviderExhausted(e.to_string())
            }
            SampleError::InvalidParams(_) => PipelineError::Config(e.to_string()),
            other => PipelineError::Other(other.to_string()),
        }
    }
}

impl From<PatchError> for PipelineError {
    fn from(e: PatchError) -> Self {
        PipelineError::Validation(e.to_string())
    }
}

impl From<RankError> for PipelineError {
    fn from(e: RankError) -> Self {
        match e {
            RankError::Provider(_) => PipelineError::ProviderExhausted(e.to_string()),
            other => PipelineError::Other(other.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, PipelineError>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

// ---- configuration ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Http,
    Mock,
    Local,
}

fn default_budget() -> usize {
    4096
}
fn default_mode() -> Mode {
    Mode::Chat
}
fn default_provider_timeout() -> u64 {
    120
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    #[serde(default)]
    pub base_url: Option<String>,
    #[serde(default)]
    pub model_id: Option<String>,
    /// Name of the environment variable holding the API key.
    #[serde(default)]
    pub api_key_env: Option<String>,
    /// JSON-lines response script for `kind: mock`.
    #[serde(default)]
    pub script: Option<PathBuf>,
    #[serde(default = "default_budget")]
    pub context_budget: usize,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_provider_timeout")]
    pub timeout_s: u64,
}

impl ProviderConfig {
    fn local() -> Self {
        Self {
            kind: ProviderKind::Local,
            base_url: None,
            model_id: None,
            api_key_env: None,
            script: None,
            context_budget: default_budget(),
            mode: default_mode(),
            timeout_s: default_provider_timeout(),
        }
    }

    fn http(&self) -> Result<HttpProvider> {
        let (Some(url), Some(model)) = (&self.base_url, &self.model_id) else {
            return Err(PipelineError::Config("http provider needs base_url and model_id".into()));
        };
        let key = match &self.api_key_env {
            Some(var) => Some(
                std::env::var(var)
                    .map_err(|_| PipelineError::Config(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        Ok(HttpProvider::new(url, model, key, Duration::from_secs(self.timeout_s)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdName {
    Median,
}

/// A fixed similarity cutoff or the run-wide median.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Threshold {
    Fixed(f64),
    Named(ThresholdName),
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold::Fixed(0.95)
    }
}

impl FromStr for Threshold {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "median" {
            return Ok(Threshold::Named(ThresholdName::Median));
        }
        s.parse::<f64>()
            .map(Threshold::Fixed)
            .map_err(|_| format!("threshold must be a number or \"median\", got {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunnerKind {
    Shell,
    Stub,
}

fn default_runner() -> RunnerKind {
    RunnerKind::Shell
}
fn default_stage_timeout() -> u64 {
    600
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationConfig {
    #[serde(default = "default_runner")]
    pub runner: RunnerKind,
    /// JSON-lines script for `runner: stub`.
    #[serde(default)]
    pub stub_script: Option<PathBuf>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_stage_timeout")]
    pub stage_timeout_s: u64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            runner: default_runner(),
            stub_script: None,
            workers: None,
            stage_timeout_s: default_stage_timeout(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankingConfig {
    #[serde(default)]
    pub threshold: Threshold,
    /// `None` ranks both variants.
    #[serde(default)]
    pub variant: Option<Variant>,
}

/// Another run's `bug_results.json`, for the cross-model overlap table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlapRun {
    pub label: String,
    pub bug_results: PathBuf,
}

fn default_strategy() -> Strategy {
    Strategy::ZeroShot
}
fn default_temperature() -> f64 {
    0.8
}
fn default_samples() -> usize {
    100
}
fn default_gen_tokens() -> usize {
    750
}
fn default_embedding() -> ProviderConfig {
    ProviderConfig::local()
}
fn default_cache() -> PathBuf {
    PathBuf::from("cache")
}
fn default_report() -> PathBuf {
    PathBuf::from("report")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus_path: PathBuf,
    pub generation: ProviderConfig,
    #[serde(default = "default_embedding")]
    pub embedding: ProviderConfig,
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default = "default_gen_tokens")]
    pub max_gen_tokens: usize,
    #[serde(default)]
    pub validation: ValidationConfig,
    #[serde(default)]
    pub ranking: RankingConfig,
    #[serde(default = "default_cache")]
    pub cache_dir: PathBuf,
    #[serde(default = "default_report")]
    pub report_dir: PathBuf,
    #[serde(default)]
    pub bug_filter: Option<Vec<String>>,
    /// Recorded with the run; no phase currently draws random numbers
    /// apart from retry jitter.
    #[serde(default)]
    pub seed: u64,
    /// Model label used in the overlap table; defaults to the provider id.
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub overlap_with: Vec<OverlapRun>,
    /// Worker count for sampling, validation and scoring.
    #[serde(default)]
    pub jobs: Option<usize>,
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.resolve(base_dir);
        Ok(cfg)
    }

    /// Reads a JSON config; relative paths in it are taken relative to the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus_path);
        fix(&mut self.cache_dir);
        fix(&mut self.report_dir);
        if let Some(p) = self.generation.script.as_mut() {
            fix(p);
        }
        if let Some(p) = self.embedding.script.as_mut() {
            fix(p);
        }
        if let Some(p) = self.validation.stub_script.as_mut() {
            fix(p);
        }
        for run in &mut self.overlap_with {
            fix(&mut run.bug_results);
        }
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.n_samples < 1 {
            return bad("n_samples must be at least 1".into());
        }
        if !(self.temperature >= 0.0) {
            return bad(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if !self.corpus_path.exists() {
            return bad(format!("corpus {} does not exist", self.corpus_path.display()));
        }
        match self.generation.kind {
            ProviderKind::Mock => match &self.generation.script {
                Some(p) if p.exists() => {}
                Some(p) => return bad(format!("mock script {} does not exist", p.display())),
                None => return bad("mock generation provider needs a script".into()),
            },
            ProviderKind::Local => return bad("local provider only supports embeddings".into()),
            ProviderKind::Http => {}
        }
        if self.embedding.kind == ProviderKind::Mock {
            return bad("mock provider only supports generation".into());
        }
        if self.validation.runner == RunnerKind::Stub {
            match &self.validation.stub_script {
                Some(p) if p.exists() => {}
                Some(p) => return bad(format!("stub script {} does not exist", p.display())),
                None => return bad("stub runner needs stub_script".into()),
            }
        }
        if let Threshold::Fixed(t) = self.ranking.threshold {
            if !t.is_finite() {
                return bad("threshold must be finite".into());
            }
        }
        for run in &self.overlap_with {
            if !run.bug_results.exists() {
                return bad(format!("overlap run {} does not exist", run.bug_results.display()));
            }
        }
        Ok(())
    }

    pub fn gen_params(&self) -> GenParams {
        GenParams {
            temperature: self.temperature,
            n_samples: self.n_samples,
            max_gen_tokens: self.max_gen_tokens,
            context_budget: self.generation.context_budget,
            mode: self.generation.mode,
        }
    }
}

// ---- persisted phase outputs ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedBug {
    pub bug_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationInfo {
    pub provider: String,
    pub strategy: Strategy,
    pub temperature: f64,
    pub n_samples: usize,
    pub mode: Mode,
    pub seed: u64,
    pub bugs: Vec<String>,
    pub skipped: Vec<SkippedBug>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub bug_id: String,
    pub sample_index: usize,
    pub content_hash: String,
    pub status: Status,
    pub compile: StageStatus,
}

const MANIFEST: &str = "manifest.jsonl";
const GENERATION: &str = "generation.json";
const OUTCOMES: &str = "outcomes.jsonl";
const BUG_RESULTS: &str = "bug_results.json";

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut bytes = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut bytes, r).map_err(|e| PipelineError::Other(e.to_string()))?;
        bytes.push(b'\n');
    }
    cache::write_bytes_atomic(path, &bytes).map_err(io_err(path))
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<Vec<T>> {
    let text = fs::read_to_string(path)
        .map_err(|e| PipelineError::Other(format!("missing {what} {} ({e}); run the earlier phase first", path.display())))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| PipelineError::Other(format!("{}: {e}", path.display()))))
        .collect()
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    cache::write_json_atomic(path, value).map_err(io_err(path))
}

fn read_json_file<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| PipelineError::Other(format!("missing {what} {} ({e}); run the earlier phase first", path.display())))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Other(format!("{}: {e}", path.display())))
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| PipelineError::Other(e.to_string());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| PipelineError::Other(e.to_string()))?;
    cache::write_bytes_atomic(path, &bytes).map_err(io_err(path))
}

fn pct(x: f64) -> String {
    format!("{x:.4}")
}

// ---- the pipeline ----

pub struct Pipeline {
    pub cfg: RunConfig,
    pub corpus: Corpus,
}

impl Pipeline {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.check()?;
        let corpus = load_corpus(&cfg.corpus_path).map_err(|e| PipelineError::Config(e.to_string()))?;
        if let Some(filter) = &cfg.bug_filter {
            for id in filter {
                if corpus.get(id).is_none() {
                    return Err(PipelineError::UnknownBugId(id.clone()));
                }
            }
        }
        Ok(Self { cfg, corpus })
    }

    /// Records selected by the bug filter, in corpus order.
    pub fn selected(&self) -> Vec<&BugRecord> {
        match &self.cfg.bug_filter {
            None => self.corpus.records.iter().collect(),
            Some(ids) => {
                let ids: BTreeSet<&str> = ids.iter().map(String::as_str).collect();
                self.corpus.records.iter().filter(|r| ids.contains(r.bug_id.as_str())).collect()
            }
        }
    }

    fn jobs(&self) -> usize {
        self.cfg.jobs.unwrap_or_else(default_workers).max(1)
    }

    fn cache(&self) -> CacheDir {
        CacheDir::new(&self.cfg.cache_dir)
    }

    fn report_path(&self, name: &str) -> PathBuf {
        self.cfg.report_dir.join(name)
    }

    pub fn generation_provider(&self) -> Result<Box<dyn GenerationProvider>> {
        match self.cfg.generation.kind {
            ProviderKind::Mock => {
                let script = self.cfg.generation.script.as_ref().expect("checked");
                Ok(Box::new(
                    MockProvider::from_jsonl(script).map_err(|e| PipelineError::Config(e.to_string()))?,
                ))
            }
            ProviderKind::Http => Ok(Box::new(self.cfg.generation.http()?)),
            ProviderKind::Local => Err(PipelineError::Config("local provider cannot generate".into())),
        }
    }

    pub fn embedding_provider(&self) -> Result<Box<dyn EmbeddingProvider>> {
        match self.cfg.embedding.kind {
            ProviderKind::Local => Ok(Box::new(LocalEmbedder::default())),
            ProviderKind::Http => Ok(Box::new(self.cfg.embedding.http()?)),
            ProviderKind::Mock => Err(PipelineError::Config("mock provider cannot embed".into())),
        }
    }

    pub fn runner(&self) -> Result<Box<dyn CommandRunner>> {
        match self.cfg.validation.runner {
            RunnerKind::Shell => Ok(Box::new(ShellRunner)),
            RunnerKind::Stub => {
                let path = self.cfg.validation.stub_script.as_ref().expect("checked");
                let text = fs::read_to_string(path).map_err(|e| PipelineError::Config(e.to_string()))?;
                Ok(Box::new(
                    StubRunner::from_jsonl(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?,
                ))
            }
        }
    }

    fn label(&self) -> String {
        self.cfg
            .label
            .clone()
            .unwrap_or_else(|| match self.cfg.generation.kind {
                ProviderKind::Http => format!("http-{}", self.cfg.generation.model_id.as_deref().unwrap_or("")),
                ProviderKind::Mock => "mock".into(),
                ProviderKind::Local => "local".into(),
            })
    }

    /// Builds prompts, samples `n_samples` candidates per bug and writes the
    /// manifest. Bugs whose prompt cannot be built within the budget are
    /// skipped and listed in `generation.json`.
    pub fn generate(&self) -> Result<Vec<CandidatePatch>> {
        let provider = self.generation_provider()?;
        self.generate_with(provider.as_ref())
    }

    pub fn generate_with(&self, provider: &dyn GenerationProvider) -> Result<Vec<CandidatePatch>> {
        let params = self.cfg.gen_params();
        params.check()?;
        let sampler = Sampler::new(provider)
            .with_cache(SampleCache::new(self.cache().samples()))
            .with_concurrency(self.jobs());
        let mut manifest = Vec::new();
        let mut bugs = Vec::new();
        let mut skipped = Vec::new();
        for record in self.selected() {
            let built = prompt::build(self.cfg.strategy, record, &self.corpus)
                .and_then(|p| fit_to_budget(&p, params.context_budget, params.max_gen_tokens));
            let prompt = match built {
                Ok(p) => p,
                Err(e) => {
                    log::warn!("skipping {}: {e}", record.bug_id);
                    skipped.push(SkippedBug {
                        bug_id: record.bug_id.clone(),
                        reason: e.to_string(),
                    });
                    continue;
                }
            };
            log::info!("sampling {} x{}", record.bug_id, params.n_samples);
            manifest.extend(sampler.sample(&prompt, &params)?);
            bugs.push(record.bug_id.clone());
        }
        fs::create_dir_all(&self.cfg.report_dir).map_err(io_err(&self.cfg.report_dir))?;
        write_jsonl(&self.report_path(MANIFEST), &manifest)?;
        write_json(
            &self.report_path(GENERATION),
            &GenerationInfo {
                provider: provider.id(),
                strategy: self.cfg.strategy,
                temperature: self.cfg.temperature,
                n_samples: self.cfg.n_samples,
                mode: params.mode,
                seed: self.cfg.seed,
                bugs,
                skipped,
            },
        )?;
        Ok(manifest)
    }

    pub fn manifest(&self) -> Result<Vec<CandidatePatch>> {
        read_jsonl(&self.report_path(MANIFEST), "manifest")
    }

    fn validator<'r>(&self, runner: &'r dyn CommandRunner) -> Validator<'r> {
        Validator::new(runner)
            .with_cache(self.cache().outcomes())
            .with_timeout(Duration::from_secs(self.cfg.validation.stage_timeout_s))
    }

    /// Validates every unique candidate in the manifest and writes
    /// per-candidate outcomes and per-bug tallies.
    pub fn validate(&self) -> Result<Vec<BugResult>> {
        let runner = self.runner()?;
        self.validate_with(runner.as_ref())
    }

    pub fn validate_with(&self, runner: &dyn CommandRunner) -> Result<Vec<BugResult>> {
        let manifest = self.manifest()?;
        let records: HashMap<&str, &BugRecord> = self.corpus.records.iter().map(|r| (r.bug_id.as_str(), r)).collect();
        for p in &manifest {
            if !records.contains_key(p.bug_id.as_str()) {
                return Err(PipelineError::UnknownBugId(p.bug_id.clone()));
            }
        }
        let workers = self.cfg.validation.workers.or(self.cfg.jobs).unwrap_or_else(default_workers);
        let outcomes = self.validator(runner).validate_many(&records, &manifest, workers)?;
        let rows: Vec<OutcomeRow> = manifest
            .iter()
            .zip(&outcomes)
            .map(|(p, o)| OutcomeRow {
                bug_id: p.bug_id.clone(),
                sample_index: p.sample_index,
                content_hash: p.content_hash.clone(),
                status: o.status,
                compile: o.stage_results.compile,
            })
            .collect();
        let results = bug_results(&self.corpus, &manifest, &rows);
        write_jsonl(&self.report_path(OUTCOMES), &rows)?;
        write_json(&self.report_path(BUG_RESULTS), &results)?;
        Ok(results)
    }

    fn outcome_rows(&self) -> Result<Vec<OutcomeRow>> {
        read_jsonl(&self.report_path(OUTCOMES), "outcomes")
    }

    /// Writes passk.csv, summary.json, per_project.csv, similarity.json and,
    /// with other runs configured, overlap.json.
    pub fn report(&self) -> Result<()> {
        let results: Vec<BugResult> = read_json_file(&self.report_path(BUG_RESULTS), "bug results")?;
        let rows = self.outcome_rows()?;
        let manifest = self.manifest()?;
        if results.is_empty() {
            return Err(PipelineError::Other("no validated bugs to report on".into()));
        }
        self.write_passk(&results)?;
        self.write_summary(&results, &rows)?;
        self.write_per_project(&results)?;
        self.write_similarity(&manifest, &rows)?;
        self.write_overlap(&results)?;
        Ok(())
    }

    fn write_passk(&self, results: &[BugResult]) -> Result<()> {
        let min_n = results.iter().map(|r| r.n).min().unwrap_or(0);
        let max_n = results.iter().map(|r| r.n).max().unwrap_or(0);
        let mut rows = Vec::new();
        for k in K_GRID {
            let mut total = 0.0;
            for r in results {
                total += pass_at_k_capped(r.n, r.c, k).map_err(|e| PipelineError::Other(e.to_string()))?;
            }
            let warning = if k > min_n {
                format!("k exceeds n for some bugs; capped at n (n ranges {min_n}..{max_n})")
            } else {
                String::new()
            };
            rows.push(vec![
                k.to_string(),
                k.min(max_n).to_string(),
                pct(100.0 * total / results.len() as f64),
                warning,
            ]);
        }
        write_csv(&self.report_path("passk.csv"), &["k", "effective_k", "pass_at_k", "warning"], rows)
    }

    fn write_summary(&self, results: &[BugResult], rows: &[OutcomeRow]) -> Result<()> {
        let stats = summary_stats(results).map_err(|e| PipelineError::Other(e.to_string()))?;
        let mut counts: BTreeMap<&str, usize> = [("plausible", 0), ("wrong", 0), ("uncompilable", 0)].into_iter().collect();
        for r in rows {
            *counts
                .get_mut(match r.status {
                    Status::Plausible => "plausible",
                    Status::Wrong => "wrong",
                    Status::Uncompilable => "uncompilable",
                })
                .expect("all statuses present") += 1;
        }
        let generation: Option<GenerationInfo> = read_json_file(&self.report_path(GENERATION), "generation info").ok();
        let unique: usize = results.iter().map(|r| r.unique_count).sum();
        let summary = json!({
            "label": self.label(),
            "strategy": self.cfg.strategy,
            "temperature": self.cfg.temperature,
            "n_samples": self.cfg.n_samples,
            "bugs": results.len(),
            "candidates": rows.len(),
            "unique_candidates": unique,
            "duplicate_fraction": (rows.len() - unique) as f64 / rows.len().max(1) as f64,
            "status_counts": counts,
            "duplicate_pct": stats.duplicate_pct,
            "compile_pct": stats.compile_pct,
            "plausible_pct": stats.plausible_pct,
            "fixed_bugs": results.iter().filter(|r| r.fixed()).map(|r| r.bug_id.as_str()).collect::<Vec<_>>(),
            "exact_match": {
                "candidates": results.iter().map(|r| r.em_count).sum::<usize>(),
                "bugs": results.iter().filter(|r| r.em_count > 0).count(),
            },
            "skipped": generation.map(|g| g.skipped).unwrap_or_default(),
        });
        write_json(&self.report_path("summary.json"), &summary)
    }

    fn write_per_project(&self, results: &[BugResult]) -> Result<()> {
        let mut by_project: BTreeMap<&str, Vec<BugResult>> = BTreeMap::new();
        for r in results {
            by_project.entry(r.project.as_str()).or_default().push(r.clone());
        }
        let mut rows = Vec::new();
        for (project, group) in by_project {
            let s = summary_stats(&group).map_err(|e| PipelineError::Other(e.to_string()))?;
            rows.push(vec![
                project.to_string(),
                group.len().to_string(),
                group.iter().filter(|r| r.fixed()).count().to_string(),
                group.iter().map(|r| r.n).sum::<usize>().to_string(),
                pct(s.duplicate_pct),
                pct(s.compile_pct),
                pct(s.plausible_pct),
            ]);
        }
        write_csv(
            &self.report_path("per_project.csv"),
            &["project", "bugs", "fixed", "candidates", "duplicate_pct", "compile_pct", "plausible_pct"],
            rows,
        )
    }

    fn write_similarity(&self, manifest: &[CandidatePatch], rows: &[OutcomeRow]) -> Result<()> {
        let status: HashMap<(&str, &str), Status> = rows
            .iter()
            .map(|r| ((r.bug_id.as_str(), r.content_hash.as_str()), r.status))
            .collect();
        // one entry per unique candidate of each bug
        let mut seen = BTreeSet::new();
        let unique: Vec<&CandidatePatch> = manifest
            .iter()
            .filter(|p| seen.insert((p.bug_id.as_str(), p.content_hash.as_str())))
            .collect();
        let scored = parallel_map(&unique, self.jobs(), |_, p| {
            let record = self.corpus.get(&p.bug_id)?;
            let sim = CodeSim::for_language(&record.language);
            let vs_buggy = sim.codebleu(&p.patch_text, &record.buggy_function, Weights::default());
            let vs_fixed = sim.codebleu(&p.patch_text, &record.fixed_function, Weights::default());
            Some((*p, vs_buggy, vs_fixed))
        });
        let mut unparsable = 0usize;
        // (bug, status, vs buggy, vs fixed)
        let mut points: Vec<(&str, Status, f64, f64)> = Vec::new();
        for item in scored.into_iter().flatten() {
            let (p, b, f) = item;
            match (b, f) {
                (Ok(b), Ok(f)) => {
                    let Some(&s) = status.get(&(p.bug_id.as_str(), p.content_hash.as_str())) else {
                        continue;
                    };
                    points.push((p.bug_id.as_str(), s, b.codebleu, f.codebleu));
                }
                (Err(CodeSimError::ReferenceUnparsable(_)), _) | (_, Err(CodeSimError::ReferenceUnparsable(_))) => {
                    unparsable += 1;
                }
                (Err(e), _) | (_, Err(e)) => return Err(PipelineError::Other(e.to_string())),
            }
        }
        let select = |pred: &dyn Fn(Status) -> bool, buggy: bool| -> Vec<f64> {
            points
                .iter()
                .filter(|p| pred(p.1))
                .map(|p| if buggy { p.2 } else { p.3 })
                .collect()
        };
        let plausible = |s: Status| s == Status::Plausible;
        let non_plausible = |s: Status| s != Status::Plausible;
        let any = |_: Status| true;
        let by_status = |buggy: bool| {
            json!({
                "all": describe(&select(&any, buggy)),
                "plausible": describe(&select(&plausible, buggy)),
                "non_plausible": describe(&select(&non_plausible, buggy)),
                "wrong": describe(&select(&|s| s == Status::Wrong, buggy)),
                "uncompilable": describe(&select(&|s| s == Status::Uncompilable, buggy)),
            })
        };

        // per-bug medians of plausible vs non-plausible similarity to the buggy code
        let mut per_bug: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        for (bug, s, b, _) in &points {
            let e = per_bug.entry(bug).or_default();
            if *s == Status::Plausible {
                e.0.push(*b);
            } else {
                e.1.push(*b);
            }
        }
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for (p, np) in per_bug.values() {
            if let (Ok(x), Ok(y)) = (metrics::quantile(p, 0.5), metrics::quantile(np, 0.5)) {
                xs.push(x);
                ys.push(y);
            }
        }
        let buggy_all: Vec<f64> = points.iter().map(|p| p.2).collect();
        let fixed_all: Vec<f64> = points.iter().map(|p| p.3).collect();
        let report = json!({
            "weights": Weights::default(),
            "candidates": points.len(),
            "unparsable_references": unparsable,
            "vs_buggy": by_status(true),
            "vs_fixed": by_status(false),
            "wilcoxon": {
                "plausible_gt_non_plausible_vs_buggy": wilcoxon(&xs, &ys),
                "vs_buggy_gt_vs_fixed": wilcoxon(&buggy_all, &fixed_all),
            },
        });
        write_json(&self.report_path("similarity.json"), &report)
    }

    fn write_overlap(&self, results: &[BugResult]) -> Result<()> {
        if self.cfg.overlap_with.is_empty() {
            return Ok(());
        }
        let mut sets: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        sets.insert(
            self.label(),
            results.iter().filter(|r| r.fixed()).map(|r| r.bug_id.clone()).collect(),
        );
        for run in &self.cfg.overlap_with {
            let other: Vec<BugResult> = read_json_file(&run.bug_results, "bug results")?;
            sets.insert(
                run.label.clone(),
                other.iter().filter(|r| r.fixed()).map(|r| r.bug_id.clone()).collect(),
            );
        }
        let o = overlap(&sets).map_err(|e| PipelineError::Other(e.to_string()))?;
        write_json(&self.report_path("overlap.json"), &o)
    }

    /// Ranks unique candidates by embedding similarity to the buggy code and
    /// writes ranked_suggestions.json and ranking.csv.
    pub fn rank(&self) -> Result<Vec<RankedSuggestions>> {
        let provider = self.embedding_provider()?;
        let runner = self.runner()?;
        self.rank_with(provider.as_ref(), runner.as_ref())
    }

    pub fn rank_with(&self, provider: &dyn EmbeddingProvider, runner: &dyn CommandRunner) -> Result<Vec<RankedSuggestions>> {
        let manifest = self.manifest()?;
        let rows = self.outcome_rows()?;
        let status: HashMap<(&str, &str), Status> = rows
            .iter()
            .map(|r| ((r.bug_id.as_str(), r.content_hash.as_str()), r.status))
            .collect();
        let embedder = Embedder::new(provider).with_cache(self.cache().embeddings());
        let validator = self.validator(runner);

        let mut bug_ids: Vec<&str> = Vec::new();
        let mut per_bug: HashMap<&str, Vec<&CandidatePatch>> = HashMap::new();
        for p in &manifest {
            let list = per_bug.entry(p.bug_id.as_str()).or_insert_with(|| {
                bug_ids.push(p.bug_id.as_str());
                Vec::new()
            });
            list.push(p);
        }

        // similarities of unique, nonempty candidates
        let mut scored: BTreeMap<&str, Vec<Scored>> = BTreeMap::new();
        let mut compiles: HashMap<&str, HashMap<String, bool>> = HashMap::new();
        for bug in &bug_ids {
            let record = self.corpus.get(bug).ok_or_else(|| PipelineError::UnknownBugId(bug.to_string()))?;
            let base = embedder.embed(&record.buggy_function)?;
            let mut seen = BTreeSet::new();
            let unique: Vec<&CandidatePatch> = per_bug[bug]
                .iter()
                .copied()
                .filter(|p| !p.empty && seen.insert(p.content_hash.as_str()))
                .collect();
            let vectors = parallel_map(&unique, self.jobs(), |_, p| embedder.embed(&p.patch_text));
            let mut list = Vec::new();
            for (p, v) in unique.iter().zip(vectors) {
                list.push(Scored {
                    content_hash: p.content_hash.clone(),
                    similarity: cosine(&base, &v?)?,
                });
            }
            let mut c = HashMap::new();
            for p in &unique {
                let st = validator.compile_check(record, p)?;
                c.insert(p.content_hash.clone(), st == StageStatus::Pass);
            }
            compiles.insert(bug, c);
            scored.insert(bug, list);
        }

        let threshold = match self.cfg.ranking.threshold {
            Threshold::Fixed(t) => t,
            Threshold::Named(ThresholdName::Median) => {
                let all: Vec<f64> = scored.values().flatten().map(|s| s.similarity).collect();
                compute_threshold(&all)?
            }
        };
        let variants = match self.cfg.ranking.variant {
            Some(v) => vec![v],
            None => vec![Variant::All, Variant::CompilePruned],
        };

        let mut ranked_all = Vec::new();
        let mut table = Vec::new();
        for variant in variants {
            let mut r1 = Vec::new();
            let mut r5 = Vec::new();
            let (mut p1, mut p5) = (0.0, 0.0);
            for bug in &bug_ids {
                let cands: Vec<Scored> = match variant {
                    Variant::All => scored[bug].clone(),
                    Variant::CompilePruned => scored[bug]
                        .iter()
                        .filter(|s| compiles[bug].get(&s.content_hash).copied().unwrap_or(false))
                        .cloned()
                        .collect(),
                };
                let ranked = prune_and_rank(bug, &cands, threshold, variant);
                let outcomes: HashMap<String, Status> = ranked
                    .entries
                    .iter()
                    .filter_map(|e| status.get(&(*bug, e.content_hash.as_str())).map(|s| (e.content_hash.clone(), *s)))
                    .collect();
                r1.push(r_pass_at_k(&ranked, &outcomes, 1)?);
                r5.push(r_pass_at_k(&ranked, &outcomes, 5)?);

                // unranked pass@k over the candidate pool of this variant
                let pool: Vec<&CandidatePatch> = per_bug[bug]
                    .iter()
                    .copied()
                    .filter(|p| match variant {
                        Variant::All => true,
                        Variant::CompilePruned => !p.empty && compiles[bug].get(&p.content_hash).copied().unwrap_or(false),
                    })
                    .collect();
                let n = pool.len();
                let c = pool
                    .iter()
                    .filter(|p| status.get(&(*bug, p.content_hash.as_str())) == Some(&Status::Plausible))
                    .count();
                if n > 0 {
                    let err = |e: metrics::MetricsError| PipelineError::Other(e.to_string());
                    p1 += pass_at_k_capped(n, c, 1).map_err(err)?;
                    p5 += pass_at_k_capped(n, c, 5).map_err(err)?;
                }
                ranked_all.push(ranked);
            }
            let bugs = bug_ids.len().max(1) as f64;
            table.push(vec![
                variant.to_string(),
                format!("{threshold:.4}"),
                bug_ids.len().to_string(),
                format!("{:.2}", aggregate_r_pass_at_k(&r1)),
                format!("{:.2}", 100.0 * p1 / bugs),
                format!("{:.2}", aggregate_r_pass_at_k(&r5)),
                format!("{:.2}", 100.0 * p5 / bugs),
            ]);
        }
        fs::create_dir_all(&self.cfg.report_dir).map_err(io_err(&self.cfg.report_dir))?;
        write_json(&self.report_path("ranked_suggestions.json"), &ranked_all)?;
        write_csv(
            &self.report_path("ranking.csv"),
            &["variant", "threshold", "bugs", "r.P@1", "P@1", "r.P@5", "P@5"],
            table,
        )?;
        Ok(ranked_all)
    }

    /// All phases in order.
    pub fn run(&self) -> Result<()> {
        self.generate()?;
        self.validate()?;
        self.report()?;
        self.rank()?;
        Ok(())
    }
}

/// Per-bug tallies in manifest order.
pub fn bug_results(corpus: &Corpus, manifest: &[CandidatePatch], rows: &[OutcomeRow]) -> Vec<BugResult> {
    let mut order: Vec<&str> = Vec::new();
    let mut acc: HashMap<&str, (usize, usize, usize, BTreeSet<&str>, usize)> = HashMap::new();
    for (p, r) in manifest.iter().zip(rows) {
        let e = acc.entry(p.bug_id.as_str()).or_insert_with(|| {
            order.push(p.bug_id.as_str());
            (0, 0, 0, BTreeSet::new(), 0)
        });
        e.0 += 1;
        if r.status == Status::Plausible {
            e.1 += 1;
        }
        if r.compile == StageStatus::Pass {
            e.2 += 1;
        }
        e.3.insert(p.content_hash.as_str());
        if let Some(rec) = corpus.get(&p.bug_id) {
            if !p.empty && p.canonical == metrics::canonical_form(&rec.fixed_function) {
                e.4 += 1;
            }
        }
    }
    order
        .into_iter()
        .map(|bug| {
            let (n, c, compile, hashes, em) = &acc[bug];
            BugResult {
                bug_id: bug.to_string(),
                project: corpus.get(bug).map(|r| r.project.clone()).unwrap_or_default(),
                n: *n,
                c: *c,
                compile_count: *compile,
                unique_count: hashes.len(),
                em_count: *em,
            }
        })
        .collect()
}

fn describe(values: &[f64]) -> Value {
    match distribution_summary(values) {
        Ok(d) => serde_json::to_value(d).expect("plain struct"),
        Err(e) => json!({ "count": values.len(), "error": e.to_string() }),
    }
}

fn wilcoxon(x: &[f64], y: &[f64]) -> Value {
    match wilcoxon_signed_rank_one_sided(x, y) {
        Ok(w) => serde_json::to_value(w).expect("plain struct"),
        Err(e) => json!({ "pairs": x.len(), "error": e.to_string() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_parsing() {
        assert_eq!("median".parse::<Threshold>().unwrap(), Threshold::Named(ThresholdName::Median));
        assert_eq!("0.9".parse::<Threshold>().unwrap(), Threshold::Fixed(0.9));
        assert!("high".parse::<Threshold>().is_err());
        let r: RankingConfig = serde_json::from_str(r#"{"threshold": "median"}"#).unwrap();
        assert_eq!(r.threshold, Threshold::Named(ThresholdName::Median));
        let r: RankingConfig = serde_json::from_str(r#"{"threshold": 0.5, "variant": "compile-pruned"}"#).unwrap();
        assert_eq!((r.threshold, r.variant), (Threshold::Fixed(0.5), Some(Variant::CompilePruned)));
    }

    #[test]
    fn config_paths_resolve_against_config_dir() {
        let cfg = RunConfig::parse(
            r#"{"corpus_path": "c.jsonl", "generation": {"kind": "mock", "script": "/abs/m.jsonl"}, "report_dir": "out"}"#,
            Path::new("/base"),
        )
        .unwrap();
        assert_eq!(cfg.corpus_path, Path::new("/base/c.jsonl"));
        assert_eq!(cfg.generation.script.as_deref(), Some(Path::new("/abs/m.jsonl")));
        assert_eq!(cfg.report_dir, Path::new("/base/out"));
        assert_eq!(cfg.cache_dir, Path::new("/base/cache"));
        assert_eq!(cfg.embedding.kind, ProviderKind::Local);
        assert_eq!((cfg.n_samples, cfg.max_gen_tokens, cfg.temperature), (100, 750, 0.8));
    }

    #[test]
    fn config_errors_exit_two() {
        let e = RunConfig::parse(r#"{"corpus_path": "c", "generation": {"kind": "mock"}, "typo": 1}"#, Path::new("."))
            .unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let cfg = RunConfig::parse(r#"{"corpus_path": "/nonexistent/c.jsonl", "generation": {"kind": "http"}}"#, Path::new("."))
            .unwrap();
        assert_eq!(cfg.check().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(PipelineError::ProviderExhausted("x".into()).exit_code(), 3);
        assert_eq!(PipelineError::Validation("x".into()).exit_code(), 4);
        assert_eq!(PipelineError::Other("x".into()).exit_code(), 1);
        assert_eq!(PipelineError::UnknownBugId("x".into()).exit_code(), 2);
    }
}
