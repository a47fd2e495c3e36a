//! Patch application and test-based validation.
//!
//! A candidate is spliced into a freshly provisioned workspace and the
//! record's compile, regression and trigger commands run in that order,
//! stopping at the first failure. Outcomes are cached per
//! `(bug_id, content_hash)` so whitespace variants validate once.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Read};
use std::os::unix::process::CommandExt;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cache::{self, path_component};
use crate::corpus::{BugRecord, MethodSpan};
use crate::metrics::canonical_form;
use crate::pool::parallel_map;
use crate::sample::CandidatePatch;

pub const DEFAULT_STAGE_TIMEOUT: Duration = Duration::from_secs(600);

#[derive(Debug, Error)]
pub enum PatchError {
    #[error("span {start}..={end} out of range for a {lines}-line file")]
    SpanOutOfRange { start: usize, end: usize, lines: usize },
    #[error("workspace setup failed for {bug_id}: {detail}")]
    WorkspaceSetupFailed { bug_id: String, detail: String },
    #[error("cannot apply patch to {path}: {source}")]
    Apply {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

/// Replaces lines `span.start_line..=span.end_line` (1-based) of
/// `file_source` with the lines of `patch_text`. Every other line, including
/// its terminator, is kept byte for byte.
pub fn apply_patch(file_source: &str, span: MethodSpan, patch_text: &str) -> Result<String, PatchError> {
    let lines: Vec<&str> = file_source.split_inclusive('\n').collect();
    let MethodSpan { start_line: start, end_line: end } = span;
    if start == 0 || start > end || end > lines.len() {
        return Err(PatchError::SpanOutOfRange {
            start,
            end,
            lines: lines.len(),
        });
    }
    let mut out = String::with_capacity(file_source.len() + patch_text.len());
    for l in &lines[..start - 1] {
        out.push_str(l);
    }
    out.push_str(patch_text);
    let replaced_had_newline = lines[end - 1].ends_with('\n');
    if replaced_had_newline && !patch_text.ends_with('\n') {
        out.push('\n');
    }
    for l in &lines[end..] {
        out.push_str(l);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Setup,
    Compile,
    Regression,
    Trigger,
}

impl Stage {
    fn command(self, record: &BugRecord) -> &str {
        match self {
            Stage::Setup => &record.workspace_setup_cmd,
            Stage::Compile => &record.compile_cmd,
            Stage::Regression => &record.regression_cmd,
            Stage::Trigger => &record.trigger_cmd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Plausible,
    Wrong,
    Uncompilable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageResults {
    pub compile: StageStatus,
    pub regression: StageStatus,
    pub trigger: StageStatus,
}

impl StageResults {
    pub fn classify(&self) -> Status {
        match (self.compile, self.regression, self.trigger) {
            (StageStatus::Pass, StageStatus::Pass, StageStatus::Pass) => Status::Plausible,
            (StageStatus::Pass, _, _) => Status::Wrong,
            _ => Status::Uncompilable,
        }
    }
}

/// Seconds spent per stage; zero for skipped stages.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimes {
    pub compile: f64,
    pub regression: f64,
    pub trigger: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationOutcome {
    pub bug_id: String,
    pub content_hash: String,
    pub status: Status,
    pub stage_results: StageResults,
    pub wall_time: StageTimes,
    /// Stages that hit the timeout (and therefore failed).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub timed_out: Vec<Stage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CompileRecord {
    compile: StageStatus,
    wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandResult {
    pub success: bool,
    pub timed_out: bool,
    /// Combined stdout and stderr.
    pub output: String,
    pub duration: Duration,
}

/// Executes stage commands. The default `apply` splices the patch into
/// `record.file_path` inside the workspace.
pub trait CommandRunner: Send + Sync {
    fn run(
        &self,
        stage: Stage,
        command: &str,
        workspace: &Path,
        timeout: Duration,
        record: &BugRecord,
        patch: &CandidatePatch,
    ) -> io::Result<CommandResult>;

    fn apply(&self, record: &BugRecord, workspace: &Path, patch: &CandidatePatch) -> Result<(), PatchError> {
        let path = workspace.join(&record.file_path);
        let source = fs::read_to_string(&path).map_err(|source| PatchError::Apply {
            path: path.clone(),
            source,
        })?;
        let patched = apply_patch(&source, record.method_span, &patch.patch_text)?;
        fs::write(&path, patched).map_err(|source| PatchError::Apply { path, source })
    }
}

/// Runs each command with `sh -c` in the workspace directory, exported as
/// `WORKSPACE_DIR`. On timeout the whole process group is killed.
#[derive(Debug, Clone, Default)]
pub struct ShellRunner;

fn drain(mut pipe: impl Read + Send + 'static) -> thread::JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = pipe.read_to_end(&mut buf);
        buf
    })
}

impl CommandRunner for ShellRunner {
    fn run(
        &self,
        _stage: Stage,
        command: &str,
        workspace: &Path,
        timeout: Duration,
        _record: &BugRecord,
        _patch: &CandidatePatch,
    ) -> io::Result<CommandResult> {
        let start = Instant::now();
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .current_dir(workspace)
            .env("WORKSPACE_DIR", workspace)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .process_group(0)
            .spawn()?;
        let out = drain(child.stdout.take().expect("piped stdout"));
        let err = drain(child.stderr.take().expect("piped stderr"));
        let mut timed_out = false;
        let status = loop {
            if let Some(status) = child.try_wait()? {
                break status;
            }
            if start.elapsed() >= timeout {
                timed_out = true;
                // SAFETY: plain syscall on the group we created for the child.
                unsafe {
                    libc::kill(-(child.id() as i32), libc::SIGKILL);
                }
                break child.wait()?;
            }
            thread::sleep(Duration::from_millis(10));
        };
        let mut output = out.join().unwrap_or_default();
        output.extend(err.join().unwrap_or_default());
        Ok(CommandResult {
            success: status.success() && !timed_out,
            timed_out,
            output: String::from_utf8_lossy(&output).into_owned(),
            duration: start.elapsed(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StubScriptEntry {
    pub bug_id: String,
    /// Patch text the entry applies to, compared in canonical form; `None`
    /// applies to every patch of the bug without a more specific entry.
    #[serde(default)]
    pub patch: Option<String>,
    pub compile: bool,
    #[serde(default = "yes")]
    pub regression: bool,
    #[serde(default = "yes")]
    pub trigger: bool,
    #[serde(default)]
    pub setup_fails: bool,
}

fn yes() -> bool {
    true
}

/// Scripted runner for tests and offline runs. Stage results come from a
/// script keyed by bug and canonical patch text; `apply` is a no-op.
/// Unscripted patches fail to compile.
#[derive(Debug, Default)]
pub struct StubRunner {
    script: HashMap<(String, Option<String>), StubScriptEntry>,
    calls: Mutex<Vec<(String, Stage)>>,
}

impl StubRunner {
    pub fn new(entries: impl IntoIterator<Item = StubScriptEntry>) -> Self {
        let script = entries
            .into_iter()
            .map(|e| ((e.bug_id.clone(), e.patch.as_deref().map(canonical_form)), e))
            .collect();
        Self {
            script,
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let entries = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<Vec<StubScriptEntry>, _>>()?;
        Ok(Self::new(entries))
    }

    pub fn calls(&self) -> Vec<(String, Stage)> {
        self.calls.lock().unwrap().clone()
    }

    pub fn call_count(&self) -> usize {
        self.calls.lock().unwrap().len()
    }

    fn entry(&self, bug_id: &str, patch: &CandidatePatch) -> Option<&StubScriptEntry> {
        self.script
            .get(&(bug_id.to_string(), Some(patch.canonical.clone())))
            .or_else(|| self.script.get(&(bug_id.to_string(), None)))
    }
}

impl CommandRunner for StubRunner {
    fn run(
        &self,
        stage: Stage,
        _command: &str,
        _workspace: &Path,
        _timeout: Duration,
        record: &BugRecord,
        patch: &CandidatePatch,
    ) -> io::Result<CommandResult> {
        self.calls.lock().unwrap().push((record.bug_id.clone(), stage));
        let entry = self.entry(&record.bug_id, patch);
        let success = match (stage, entry) {
            (Stage::Setup, e) => !e.is_some_and(|e| e.setup_fails),
            (_, None) => false,
            (Stage::Compile, Some(e)) => e.compile,
            (Stage::Regression, Some(e)) => e.regression,
            (Stage::Trigger, Some(e)) => e.trigger,
        };
        Ok(CommandResult {
            success,
            timed_out: false,
            output: format!("stub {stage:?}: {}\n", if success { "pass" } else { "fail" }),
            duration: Duration::ZERO,
        })
    }

    fn apply(&self, _record: &BugRecord, _workspace: &Path, _patch: &CandidatePatch) -> Result<(), PatchError> {
        Ok(())
    }
}

/// Validation driver with an optional outcome cache.
pub struct Validator<'r> {
    runner: &'r dyn CommandRunner,
    cache_dir: Option<PathBuf>,
    default_timeout: Duration,
}

impl<'r> Validator<'r> {
    pub fn new(runner: &'r dyn CommandRunner) -> Self {
        Self {
            runner,
            cache_dir: None,
            default_timeout: DEFAULT_STAGE_TIMEOUT,
        }
    }

    /// `dir` is the `outcomes/` directory of the cache tree.
    pub fn with_cache(mut self, dir: impl Into<PathBuf>) -> Self {
        self.cache_dir = Some(dir.into());
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.default_timeout = timeout;
        self
    }

    fn entry_path(&self, bug_id: &str, hash: &str, ext: &str) -> Option<PathBuf> {
        self.cache_dir
            .as_ref()
            .map(|d| d.join(path_component(bug_id)).join(format!("{}.{ext}", path_component(hash))))
    }

    fn timeout_for(&self, record: &BugRecord) -> Duration {
        record.stage_timeout_s.map_or(self.default_timeout, Duration::from_secs)
    }

    fn cached_outcome(&self, bug_id: &str, hash: &str) -> io::Result<Option<ValidationOutcome>> {
        match self.entry_path(bug_id, hash, "json") {
            Some(p) => cache::read_json(&p),
            None => Ok(None),
        }
    }

    fn cached_compile(&self, bug_id: &str, hash: &str) -> io::Result<Option<CompileRecord>> {
        match self.entry_path(bug_id, hash, "compile.json") {
            Some(p) => cache::read_json(&p),
            None => Ok(None),
        }
    }

    /// Provisions a fresh workspace, applies the patch and runs `stages`
    /// until one fails. Returns per-stage results and the combined log.
    fn execute(
        &self,
        record: &BugRecord,
        patch: &CandidatePatch,
        stages: &[Stage],
    ) -> Result<(Vec<(Stage, CommandResult)>, String), PatchError> {
        let workspace = tempfile::Builder::new().prefix("nl2fix-ws-").tempdir()?;
        let timeout = self.timeout_for(record);
        let mut log = String::new();
        let setup = self.runner.run(
            Stage::Setup,
            &record.workspace_setup_cmd,
            workspace.path(),
            timeout,
            record,
            patch,
        )?;
        log.push_str(&format!("== setup ({:.3}s)\n{}", setup.duration.as_secs_f64(), setup.output));
        if !setup.success {
            return Err(PatchError::WorkspaceSetupFailed {
                bug_id: record.bug_id.clone(),
                detail: if setup.timed_out {
                    "timed out".to_string()
                } else {
                    setup.output.lines().last().unwrap_or("nonzero exit").to_string()
                },
            });
        }
        self.runner.apply(record, workspace.path(), patch)?;
        let mut results = Vec::new();
        for &stage in stages {
            let r = self
                .runner
                .run(stage, stage.command(record), workspace.path(), timeout, record, patch)?;
            log.push_str(&format!(
                "== {stage:?} ({:.3}s{})\n{}",
                r.duration.as_secs_f64(),
                if r.timed_out { ", timed out" } else { "" },
                r.output
            ));
            let ok = r.success;
            results.push((stage, r));
            if !ok {
                break;
            }
        }
        Ok((results, log))
    }

    fn uncompilable(record: &BugRecord, patch: &CandidatePatch, compile_time: f64, timed_out: bool) -> ValidationOutcome {
        ValidationOutcome {
            bug_id: record.bug_id.clone(),
            content_hash: patch.content_hash.clone(),
            status: Status::Uncompilable,
            stage_results: StageResults {
                compile: StageStatus::Fail,
                regression: StageStatus::Skipped,
                trigger: StageStatus::Skipped,
            },
            wall_time: StageTimes {
                compile: compile_time,
                ..StageTimes::default()
            },
            timed_out: if timed_out { vec![Stage::Compile] } else { Vec::new() },
        }
    }

    /// Full validation. Empty candidates and candidates whose cached compile
    /// check failed are classified without running anything.
    pub fn validate(&self, record: &BugRecord, patch: &CandidatePatch) -> Result<ValidationOutcome, PatchError> {
        if let Some(hit) = self.cached_outcome(&record.bug_id, &patch.content_hash)? {
            return Ok(hit);
        }
        let outcome = if patch.empty {
            Self::uncompilable(record, patch, 0.0, false)
        } else if let Some(CompileRecord {
            compile: StageStatus::Fail,
            wall_time,
        }) = self.cached_compile(&record.bug_id, &patch.content_hash)?
        {
            Self::uncompilable(record, patch, wall_time, false)
        } else {
            let (results, log) = self.execute(record, patch, &[Stage::Compile, Stage::Regression, Stage::Trigger])?;
            let mut stage_results = StageResults {
                compile: StageStatus::Skipped,
                regression: StageStatus::Skipped,
                trigger: StageStatus::Skipped,
            };
            let mut wall_time = StageTimes::default();
            let mut timed_out = Vec::new();
            for (stage, r) in &results {
                let status = if r.success { StageStatus::Pass } else { StageStatus::Fail };
                let secs = r.duration.as_secs_f64();
                match stage {
                    Stage::Compile => (stage_results.compile, wall_time.compile) = (status, secs),
                    Stage::Regression => (stage_results.regression, wall_time.regression) = (status, secs),
                    Stage::Trigger => (stage_results.trigger, wall_time.trigger) = (status, secs),
                    Stage::Setup => {}
                }
                if r.timed_out {
                    timed_out.push(*stage);
                }
            }
            if let Some(p) = self.entry_path(&record.bug_id, &patch.content_hash, "log") {
                cache::write_bytes_atomic(&p, log.as_bytes())?;
            }
            ValidationOutcome {
                bug_id: record.bug_id.clone(),
                content_hash: patch.content_hash.clone(),
                status: stage_results.classify(),
                stage_results,
                wall_time,
                timed_out,
            }
        };
        if let Some(p) = self.entry_path(&record.bug_id, &patch.content_hash, "json") {
            cache::write_json_atomic(&p, &outcome)?;
        }
        Ok(outcome)
    }

    /// Compile-only check. Reuses a cached full outcome when present.
    pub fn compile_check(&self, record: &BugRecord, patch: &CandidatePatch) -> Result<StageStatus, PatchError> {
        if let Some(hit) = self.cached_outcome(&record.bug_id, &patch.content_hash)? {
            return Ok(hit.stage_results.compile);
        }
        if let Some(hit) = self.cached_compile(&record.bug_id, &patch.content_hash)? {
            return Ok(hit.compile);
        }
        let rec = if patch.empty {
            CompileRecord {
                compile: StageStatus::Fail,
                wall_time: 0.0,
            }
        } else {
            let (results, _) = self.execute(record, patch, &[Stage::Compile])?;
            let r = &results[0].1;
            CompileRecord {
                compile: if r.success { StageStatus::Pass } else { StageStatus::Fail },
                wall_time: r.duration.as_secs_f64(),
            }
        };
        if let Some(p) = self.entry_path(&record.bug_id, &patch.content_hash, "compile.json") {
            cache::write_json_atomic(&p, &rec)?;
        }
        Ok(rec.compile)
    }

    /// Validates every unique `(bug, content_hash)` once on a bounded pool
    /// and fans the outcome out to all candidates sharing it. The result is
    /// parallel to `patches`.
    pub fn validate_many(
        &self,
        corpus: &HashMap<&str, &BugRecord>,
        patches: &[CandidatePatch],
        workers: usize,
    ) -> Result<Vec<ValidationOutcome>, PatchError> {
        let mut unique: Vec<&CandidatePatch> = Vec::new();
        let mut index: HashMap<(&str, &str), usize> = HashMap::new();
        for p in patches {
            index.entry((&p.bug_id, &p.content_hash)).or_insert_with(|| {
                unique.push(p);
                unique.len() - 1
            });
        }
        let results = parallel_map(&unique, workers, |_, p| {
            let record = corpus.get(p.bug_id.as_str()).ok_or_else(|| {
                PatchError::Io(io::Error::new(io::ErrorKind::NotFound, format!("unknown bug {}", p.bug_id)))
            })?;
            self.validate(record, p)
        });
        let outcomes = results.into_iter().collect::<Result<Vec<_>, _>>()?;
        Ok(patches
            .iter()
            .map(|p| outcomes[index[&(p.bug_id.as_str(), p.content_hash.as_str())]].clone())
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn span(a: usize, b: usize) -> MethodSpan {
        MethodSpan { start_line: a, end_line: b }
    }

    fn record(id: &str) -> BugRecord {
        BugRecord {
            bug_id: id.into(),
            project: "P".into(),
            issue_title: String::new(),
            issue_description: String::new(),
            buggy_function: "int f() { return 1; }".into(),
            fixed_function: "int f() { return 2; }".into(),
            file_path: "src/F.java".into(),
            method_span: span(2, 2),
            language: "java".into(),
            workspace_setup_cmd: "true".into(),
            compile_cmd: "true".into(),
            regression_cmd: "true".into(),
            trigger_cmd: "true".into(),
            stage_timeout_s: None,
        }
    }

    fn patch(bug: &str, text: &str) -> CandidatePatch {
        CandidatePatch::new(bug, 0, text.into(), text.into(), 1)
    }

    fn entry(bug: &str, patch: Option<&str>, c: bool, r: bool, t: bool) -> StubScriptEntry {
        StubScriptEntry {
            bug_id: bug.into(),
            patch: patch.map(str::to_string),
            compile: c,
            regression: r,
            trigger: t,
            setup_fails: false,
        }
    }

    #[test]
    fn splice_examples() {
        let file: String = (1..=10).map(|i| format!("line{i}\n")).collect();
        let out = apply_patch(&file, span(4, 6), "a\nb\n").unwrap();
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 9);
        assert_eq!(&lines[3..5], ["a", "b"]);
        assert_eq!(lines[2], "line3");
        assert_eq!(lines[5], "line7");

        assert_eq!(apply_patch("only", span(1, 1), "new").unwrap(), "new");
        assert!(matches!(
            apply_patch(&file, span(5, 12), "x"),
            Err(PatchError::SpanOutOfRange { lines: 10, .. })
        ));
        assert!(apply_patch(&file, span(0, 1), "x").is_err());
        assert!(apply_patch(&file, span(3, 2), "x").is_err());
    }

    #[test]
    fn splice_keeps_crlf_and_adds_missing_terminator() {
        let out = apply_patch("a\r\nb\r\nc\r\n", span(2, 2), "B").unwrap();
        assert_eq!(out, "a\r\nB\nc\r\n");
    }

    #[test]
    fn classification_table() {
        let runner = StubRunner::new([
            entry("b", Some("p1"), true, true, true),
            entry("b", Some("p2"), false, true, true),
            entry("b", Some("p3"), true, true, false),
            entry("b", Some("p4"), true, false, true),
        ]);
        let v = Validator::new(&runner);
        let rec = record("b");
        let status = |t: &str| v.validate(&rec, &patch("b", t)).unwrap();
        assert_eq!(status("p1").status, Status::Plausible);
        let o = status("p2");
        assert_eq!(o.status, Status::Uncompilable);
        assert_eq!(o.stage_results.regression, StageStatus::Skipped);
        assert_eq!(o.stage_results.trigger, StageStatus::Skipped);
        let o = status("p3");
        assert_eq!(o.status, Status::Wrong);
        assert_eq!(o.stage_results.trigger, StageStatus::Fail);
        let o = status("p4");
        assert_eq!(o.status, Status::Wrong);
        assert_eq!(o.stage_results.trigger, StageStatus::Skipped);
        // unscripted patches fail to compile
        assert_eq!(status("zzz").status, Status::Uncompilable);
    }

    #[test]
    fn classification_is_total() {
        use StageStatus::*;
        for c in [Pass, Fail] {
            for r in [Pass, Fail, Skipped] {
                for t in [Pass, Fail, Skipped] {
                    let s = StageResults { compile: c, regression: r, trigger: t }.classify();
                    assert_eq!(s == Status::Uncompilable, c == Fail);
                    assert_eq!(s == Status::Plausible, c == Pass && r == Pass && t == Pass);
                }
            }
        }
    }

    #[test]
    fn outcome_cache_reuse_and_whitespace_variants() {
        let dir = tempfile::tempdir().unwrap();
        let runner = StubRunner::new([entry("b", None, true, true, true)]);
        let v = Validator::new(&runner).with_cache(dir.path());
        let rec = record("b");
        let a = v.validate(&rec, &patch("b", "int f() { return 2; }")).unwrap();
        let calls = runner.call_count();
        assert_eq!(calls, 4);
        let b = v.validate(&rec, &patch("b", "int f(){\n  return 2;\n}")).unwrap();
        assert_eq!(runner.call_count(), calls);
        assert_eq!(a, b);
        let path = dir.path().join("b").join(format!("{}.json", a.content_hash));
        assert!(path.exists());
        assert!(dir.path().join("b").join(format!("{}.log", a.content_hash)).exists());
    }

    #[test]
    fn compile_check_cache() {
        let dir = tempfile::tempdir().unwrap();
        let runner = StubRunner::new([entry("b", Some("ok"), true, false, true), entry("b", Some("bad"), false, true, true)]);
        let v = Validator::new(&runner).with_cache(dir.path());
        let rec = record("b");
        assert_eq!(v.compile_check(&rec, &patch("b", "ok")).unwrap(), StageStatus::Pass);
        assert_eq!(v.compile_check(&rec, &patch("b", "bad")).unwrap(), StageStatus::Fail);
        let calls = runner.call_count();
        assert_eq!(v.compile_check(&rec, &patch("b", "ok")).unwrap(), StageStatus::Pass);
        assert_eq!(runner.call_count(), calls);
        // a failed compile check makes validation free
        assert_eq!(v.validate(&rec, &patch("b", "bad")).unwrap().status, Status::Uncompilable);
        assert_eq!(runner.call_count(), calls);
        // a full outcome answers later compile checks
        v.validate(&rec, &patch("b", "ok")).unwrap();
        let calls = runner.call_count();
        assert_eq!(v.compile_check(&rec, &patch("b", "ok")).unwrap(), StageStatus::Pass);
        assert_eq!(runner.call_count(), calls);
    }

    #[test]
    fn empty_patch_is_uncompilable_without_running() {
        let runner = StubRunner::new([entry("b", None, true, true, true)]);
        let v = Validator::new(&runner);
        let o = v.validate(&record("b"), &patch("b", "  \n")).unwrap();
        assert_eq!(o.status, Status::Uncompilable);
        assert_eq!(runner.call_count(), 0);
    }

    #[test]
    fn setup_failure_is_an_error() {
        let mut e = entry("b", None, true, true, true);
        e.setup_fails = true;
        let runner = StubRunner::new([e]);
        let err = Validator::new(&runner).validate(&record("b"), &patch("b", "x")).unwrap_err();
        assert!(matches!(err, PatchError::WorkspaceSetupFailed { .. }));
    }

    #[test]
    fn validate_many_fans_out_duplicates() {
        let runner = StubRunner::new([entry("b", Some("p1"), true, true, true), entry("b", Some("p2"), true, false, true)]);
        let rec = record("b");
        let corpus: HashMap<&str, &BugRecord> = [("b", &rec)].into_iter().collect();
        let patches = vec![patch("b", "p1"), patch("b", "p2"), patch("b", " p1 "), patch("b", "p2")];
        let out = Validator::new(&runner).validate_many(&corpus, &patches, 3).unwrap();
        let statuses: Vec<Status> = out.iter().map(|o| o.status).collect();
        assert_eq!(statuses, [Status::Plausible, Status::Wrong, Status::Plausible, Status::Wrong]);
        // setup + 3 stages for p1, setup + compile + regression for p2
        assert_eq!(runner.call_count(), 7);
    }

    #[test]
    fn shell_runner_real_workspace() {
        let mut rec = record("b");
        rec.method_span = span(2, 2);
        rec.workspace_setup_cmd = "mkdir -p src && printf 'class F {\\nint f() { return 1; }\\n}\\n' > src/F.java".into();
        rec.compile_cmd = "grep -q 'return 2' \"$WORKSPACE_DIR/src/F.java\"".into();
        rec.regression_cmd = "test $(wc -l < src/F.java) -eq 3".into();
        rec.trigger_cmd = "echo triggered".into();
        let runner = ShellRunner;
        let v = Validator::new(&runner);
        assert_eq!(v.validate(&rec, &patch("b", "int f() { return 2; }")).unwrap().status, Status::Plausible);
        assert_eq!(v.validate(&rec, &patch("b", "int f() { return 3; }")).unwrap().status, Status::Uncompilable);
        rec.trigger_cmd = "exit 1".into();
        assert_eq!(v.validate(&rec, &patch("b", "int f() { return 2; }")).unwrap().status, Status::Wrong);
    }

    #[test]
    fn shell_runner_timeout_kills_group() {
        let mut rec = record("b");
        rec.workspace_setup_cmd = "mkdir -p src && echo 'x' > src/F.java && echo 'y' >> src/F.java".into();
        rec.compile_cmd = "sleep 30 & sleep 30".into();
        rec.stage_timeout_s = Some(1);
        let runner = ShellRunner;
        let start = Instant::now();
        let o = Validator::new(&runner).validate(&rec, &patch("b", "z")).unwrap();
        assert!(start.elapsed() < Duration::from_secs(10));
        assert_eq!(o.status, Status::Uncompilable);
        assert_eq!(o.timed_out, [Stage::Compile]);
    }

    #[test]
    fn workspaces_are_distinct() {
        struct Dirs(Mutex<Vec<PathBuf>>);
        impl CommandRunner for Dirs {
            fn run(&self, _: Stage, _: &str, ws: &Path, _: Duration, _: &BugRecord, _: &CandidatePatch) -> io::Result<CommandResult> {
                self.0.lock().unwrap().push(ws.to_path_buf());
                Ok(CommandResult { success: true, timed_out: false, output: String::new(), duration: Duration::ZERO })
            }
            fn apply(&self, _: &BugRecord, _: &Path, _: &CandidatePatch) -> Result<(), PatchError> {
                Ok(())
            }
        }
        let runner = Dirs(Mutex::new(Vec::new()));
        let rec = record("b");
        let corpus: HashMap<&str, &BugRecord> = [("b", &rec)].into_iter().collect();
        let patches: Vec<CandidatePatch> = (0..6).map(|i| patch("b", &format!("p{i}"))).collect();
        Validator::new(&runner).validate_many(&corpus, &patches, 4).unwrap();
        let dirs = runner.0.into_inner().unwrap();
        let unique: std::collections::HashSet<_> = dirs.iter().collect();
        // four commands per validation share a workspace; validations do not
        assert_eq!(unique.len(), 6);
    }
}
