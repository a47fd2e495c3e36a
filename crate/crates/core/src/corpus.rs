//! Benchmark corpus of single-method bugs stored as JSON lines.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::canonical_form;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed record on line {0}: {1}")]
    MalformedLine(usize, String),
    #[error("duplicate bug_id {0:?}")]
    DuplicateBugId(String),
    #[error("invalid record {0:?}: {1}")]
    InvalidRecord(String, String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StripError {
    #[error("unterminated block comment starting at byte {0}")]
    UnterminatedBlockComment(usize),
}

/// Inclusive, 1-based line range of the buggy method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodSpan {
    pub start_line: usize,
    pub end_line: usize,
}

fn default_language() -> String {
    "java".to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugRecord {
    pub bug_id: String,
    pub project: String,
    #[serde(default)]
    pub issue_title: String,
    #[serde(default)]
    pub issue_description: String,
    pub buggy_function: String,
    /// Developer fix. Used for evaluation and as a one-shot example for
    /// other bugs, never in this bug's own prompt.
    pub fixed_function: String,
    pub file_path: String,
    pub method_span: MethodSpan,
    #[serde(default = "default_language")]
    pub language: String,
    pub workspace_setup_cmd: String,
    pub compile_cmd: String,
    pub regression_cmd: String,
    pub trigger_cmd: String,
    /// Per-record override of the stage timeout, in seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage_timeout_s: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    BugIdEmpty,
    ProjectEmpty,
    SpanStartsAtZero,
    SpanInverted,
    BuggyFunctionEmpty,
    FixedFunctionEmpty,
    NoChange,
    BuggyHasComments,
    UnterminatedComment(usize),
    FilePathEmpty,
    CommandEmpty(&'static str),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::BugIdEmpty => f.write_str("bug_id empty"),
            Violation::ProjectEmpty => f.write_str("project empty"),
            Violation::SpanStartsAtZero => f.write_str("span start_line must be >= 1"),
            Violation::SpanInverted => f.write_str("span inverted"),
            Violation::BuggyFunctionEmpty => f.write_str("buggy_function empty"),
            Violation::FixedFunctionEmpty => f.write_str("fixed_function empty"),
            Violation::NoChange => {
                f.write_str("buggy_function equals fixed_function ignoring whitespace")
            }
            Violation::BuggyHasComments => f.write_str("buggy_function contains comments"),
            Violation::UnterminatedComment(at) => {
                write!(f, "buggy_function has an unterminated block comment at byte {at}")
            }
            Violation::FilePathEmpty => f.write_str("file_path empty"),
            Violation::CommandEmpty(which) => write!(f, "{which} empty"),
        }
    }
}

/// Returns every invariant the record breaks; an empty list means valid.
pub fn validate_record(record: &BugRecord) -> Vec<Violation> {
    let mut out = Vec::new();
    if record.bug_id.trim().is_empty() {
        out.push(Violation::BugIdEmpty);
    }
    if record.project.trim().is_empty() {
        out.push(Violation::ProjectEmpty);
    }
    if record.method_span.start_line == 0 {
        out.push(Violation::SpanStartsAtZero);
    }
    if record.method_span.start_line > record.method_span.end_line {
        out.push(Violation::SpanInverted);
    }
    let buggy_canon = canonical_form(&record.buggy_function);
    let fixed_canon = canonical_form(&record.fixed_function);
    if buggy_canon.is_empty() {
        out.push(Violation::BuggyFunctionEmpty);
    }
    if fixed_canon.is_empty() {
        out.push(Violation::FixedFunctionEmpty);
    }
    if !buggy_canon.is_empty() && buggy_canon == fixed_canon {
        out.push(Violation::NoChange);
    }
    match strip_comments(&record.buggy_function, &record.language) {
        Ok(stripped) if stripped != record.buggy_function => out.push(Violation::BuggyHasComments),
        Ok(_) => {}
        Err(StripError::UnterminatedBlockComment(at)) => out.push(Violation::UnterminatedComment(at)),
    }
    if record.file_path.trim().is_empty() {
        out.push(Violation::FilePathEmpty);
    }
    for (name, cmd) in [
        ("workspace_setup_cmd", &record.workspace_setup_cmd),
        ("compile_cmd", &record.compile_cmd),
        ("regression_cmd", &record.regression_cmd),
        ("trigger_cmd", &record.trigger_cmd),
    ] {
        if cmd.trim().is_empty() {
            out.push(Violation::CommandEmpty(name));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub records: Vec<BugRecord>,
    pub source_path: String,
}

impl Corpus {
    pub fn get(&self, bug_id: &str) -> Option<&BugRecord> {
        self.records.iter().find(|r| r.bug_id == bug_id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> io::Result<()> {
        for record in &self.records {
            serde_json::to_writer(&mut out, record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Loads a JSON-lines corpus. Blank lines are skipped; the buggy function
/// of every record is comment-stripped before validation.
pub fn load_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_corpus(&text, &path.display().to_string())
}

pub fn parse_corpus(text: &str, source_path: &str) -> Result<Corpus, CorpusError> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut record: BugRecord = serde_json::from_str(line)
            .map_err(|e| CorpusError::MalformedLine(idx + 1, e.to_string()))?;
        record.buggy_function = strip_comments(&record.buggy_function, &record.language)
            .map_err(|e| CorpusError::InvalidRecord(record.bug_id.clone(), e.to_string()))?;
        let violations = validate_record(&record);
        if !violations.is_empty() {
            let reasons: Vec<String> = violations.iter().map(ToString::to_string).collect();
            return Err(CorpusError::InvalidRecord(record.bug_id, reasons.join("; ")));
        }
        if !seen.insert(record.bug_id.clone()) {
            return Err(CorpusError::DuplicateBugId(record.bug_id));
        }
        records.push(record);
    }
    Ok(Corpus {
        records,
        source_path: source_path.to_string(),
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum LexState {
    Code,
    Str,
    TextBlock,
    Char,
}

/// Removes `//` and `/* */` comments from C-family source (Java, C, C++,
/// JavaScript, ...). Delimiters inside string, text-block and char literals
/// are left alone. A removed block comment that sat directly between two
/// non-blank characters is replaced by one space so adjacent tokens do not
/// fuse. Lines touched by a removal lose trailing blanks and are dropped if
/// nothing else remains on them.
/// Whether two bytes left adjacent by a removed comment would lex as one
/// token (`a/**/b`, `-/**/-`).
fn would_fuse(a: u8, c: u8) -> bool {
    let word = |x: u8| x.is_ascii_alphanumeric() || x == b'_' || x == b'$' || x >= 0x80;
    let op = |x: u8| b"+-*/=<>!&|^%:.?".contains(&x);
    (word(a) && word(c)) || (op(a) && op(c))
}

pub fn strip_comments(source: &str, _language: &str) -> Result<String, StripError> {
    let bytes = source.as_bytes();
    let mut out: Vec<u8> = Vec::with_capacity(bytes.len());
    // indices of output lines that had a comment removed
    let mut touched: Vec<usize> = Vec::new();
    let mut line = 0usize;
    let mut state = LexState::Code;
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match state {
            LexState::Code => {
                if b == b'/' && bytes.get(i + 1) == Some(&b'/') {
                    touched.push(line);
                    while i < bytes.len() && bytes[i] != b'\n' {
                        i += 1;
                    }
                    continue;
                }
                if b == b'/' && bytes.get(i + 1) == Some(&b'*') {
                    let start = i;
                    let close = source[i + 2..]
                        .find("*/")
                        .ok_or(StripError::UnterminatedBlockComment(start))?;
                    touched.push(line);
                    i = i + 2 + close + 2;
                    let before = out.last().copied();
                    let after = bytes.get(i).copied();
                    if let (Some(a), Some(c)) = (before, after) {
                        if would_fuse(a, c) {
                            out.push(b' ');
                        }
                    }
                    continue;
                }
                if b == b'"' {
                    if bytes[i..].starts_with(b"\"\"\"") {
                        state = LexState::TextBlock;
                        out.extend_from_slice(b"\"\"\"");
                        i += 3;
                        continue;
                    }
                    state = LexState::Str;
                } else if b == b'\'' {
                    state = LexState::Char;
                }
            }
            LexState::Str | LexState::Char => {
                let quote = if state == LexState::Str { b'"' } else { b'\'' };
                if b == b'\\' && i + 1 < bytes.len() && bytes[i + 1] != b'\n' {
                    out.push(b);
                    out.push(bytes[i + 1]);
                    i += 2;
                    continue;
                }
                // literals cannot span lines; recover at the newline
                if b == quote || b == b'\n' {
                    state = LexState::Code;
                }
            }
            LexState::TextBlock => {
                if b == b'\\' && i + 1 < bytes.len() {
                    out.push(b);
                    out.push(bytes[i + 1]);
                    i += 2;
                    continue;
                }
                if bytes[i..].starts_with(b"\"\"\"") {
                    state = LexState::Code;
                    out.extend_from_slice(b"\"\"\"");
                    i += 3;
                    continue;
                }
            }
        }
        if b == b'\n' {
            line += 1;
        }
        out.push(b);
        i += 1;
    }
    let text = String::from_utf8(out).expect("only ASCII delimiters are removed");
    if touched.is_empty() {
        return Ok(text);
    }
    let mut result = String::with_capacity(text.len());
    let mut pieces = text.split('\n').enumerate().peekable();
    let mut first = true;
    while let Some((idx, piece)) = pieces.next() {
        let is_last = pieces.peek().is_none();
        let kept = if touched.binary_search(&idx).is_ok() {
            let (body, cr) = match piece.strip_suffix('\r') {
                Some(body) => (body, "\r"),
                None => (piece, ""),
            };
            let body = body.trim_end_matches([' ', '\t', '\x0c']);
            if body.trim().is_empty() {
                if is_last && !first {
                    // keep the preceding newline as the file's final newline
                    result.push('\n');
                }
                continue;
            }
            format!("{body}{cr}")
        } else {
            piece.to_string()
        };
        if !first {
            result.push('\n');
        }
        result.push_str(&kept);
        first = false;
    }
    Ok(result)
}
