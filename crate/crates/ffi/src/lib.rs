//! C ABI over the nl2fix metrics, similarity and corpus functions.
//!
//! Every fallible function returns an [`Nl2fixStatus`] and writes its result
//! through an out pointer. On failure a description is available from
//! [`nl2fix_last_error`] on the same thread. Strings returned to the caller
//! are owned by the caller and released with [`nl2fix_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use nl2fix::codesim::{self, CodeSimError, Weights};
use nl2fix::corpus::{self, Corpus};
use nl2fix::metrics::{self, MetricsError};
use nl2fix::prompt;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nl2fixStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Domain = 3,
    Io = 4,
    Parse = 5,
    OutOfRange = 6,
    Panic = 7,
}

/// CodeBLEU components. `dataflow_match` is NaN when `has_dataflow` is 0.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct Nl2fixSimilarity {
    pub bleu: f64,
    pub keyword_bleu: f64,
    pub syntax_match: f64,
    pub dataflow_match: f64,
    pub has_dataflow: u8,
    pub codebleu: f64,
}

/// Opaque handle to a loaded corpus.
pub struct Nl2fixCorpus(Corpus);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn fail(status: Nl2fixStatus, msg: impl Into<String>) -> Nl2fixStatus {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
    status
}

fn guard(f: impl FnOnce() -> Nl2fixStatus) -> Nl2fixStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    std::panic::catch_unwind(std::panic::AssertUnwindSafe(f))
        .unwrap_or_else(|_| fail(Nl2fixStatus::Panic, "internal panic"))
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, Nl2fixStatus> {
    if p.is_null() {
        return Err(fail(Nl2fixStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| fail(Nl2fixStatus::InvalidUtf8, e.to_string()))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Nl2fixStatus {
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            Nl2fixStatus::Ok
        }
        Err(_) => fail(Nl2fixStatus::InvalidUtf8, "result contains a NUL byte"),
    }
}

fn metrics_status(e: MetricsError) -> Nl2fixStatus {
    fail(Nl2fixStatus::Domain, e.to_string())
}

macro_rules! try_ffi {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(Nl2fixStatus::NullPointer, concat!(stringify!($p), " is null"));
        })+
    };
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn nl2fix_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nl2fix_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nl2fix_pass_at_k(n: usize, c: usize, k: usize, out: *mut f64) -> Nl2fixStatus {
    guard(|| {
        non_null!(out);
        *out = try_ffi!(metrics::pass_at_k(n, c, k).map_err(metrics_status));
        Nl2fixStatus::Ok
    })
}

/// One-sided exact (or normal-approximation) Wilcoxon signed-rank p-value
/// for x > y over `len` pairs.
///
/// # Safety
/// `x` and `y` must point to `len` readable doubles; `p_value` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nl2fix_wilcoxon(x: *const f64, y: *const f64, len: usize, p_value: *mut f64) -> Nl2fixStatus {
    guard(|| {
        non_null!(x, y, p_value);
        let xs = std::slice::from_raw_parts(x, len);
        let ys = std::slice::from_raw_parts(y, len);
        let r = try_ffi!(metrics::wilcoxon_signed_rank_one_sided(xs, ys).map_err(metrics_status));
        *p_value = r.p_value;
        Nl2fixStatus::Ok
    })
}

/// Character-level Levenshtein distance.
///
/// # Safety
/// `a` and `b` must be NUL-terminated UTF-8; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nl2fix_edit_distance(a: *const c_char, b: *const c_char, out: *mut usize) -> Nl2fixStatus {
    guard(|| {
        non_null!(out);
        let a = try_ffi!(read_str(a));
        let b = try_ffi!(read_str(b));
        *out = prompt::edit_distance(a, b);
        Nl2fixStatus::Ok
    })
}

/// # Safety
/// `source` must be NUL-terminated UTF-8; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nl2fix_strip_comments(source: *const c_char, out: *mut *mut c_char) -> Nl2fixStatus {
    guard(|| {
        non_null!(out);
        let source = try_ffi!(read_str(source));
        match corpus::strip_comments(source, "java") {
            Ok(s) => write_string(out, s),
            Err(e) => fail(Nl2fixStatus::Parse, e.to_string()),
        }
    })
}

/// SHA-256 hex digest of the whitespace-free form of `code`.
///
/// # Safety
/// `code` must be NUL-terminated UTF-8; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nl2fix_content_hash(code: *const c_char, out: *mut *mut c_char) -> Nl2fixStatus {
    guard(|| {
        non_null!(out);
        let code = try_ffi!(read_str(code));
        write_string(out, metrics::content_hash(code))
    })
}

/// CodeBLEU of `candidate` against `reference` with equal weights.
///
/// # Safety
/// Both strings must be NUL-terminated UTF-8; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nl2fix_codebleu(
    candidate: *const c_char,
    reference: *const c_char,
    out: *mut Nl2fixSimilarity,
) -> Nl2fixStatus {
    guard(|| {
        non_null!(out);
        let candidate = try_ffi!(read_str(candidate));
        let reference = try_ffi!(read_str(reference));
        match codesim::codebleu(candidate, reference, "java", Weights::default()) {
            Ok(r) => {
                *out = Nl2fixSimilarity {
                    bleu: r.bleu,
                    keyword_bleu: r.keyword_bleu,
                    syntax_match: r.syntax_match,
                    dataflow_match: r.dataflow_match.unwrap_or(f64::NAN),
                    has_dataflow: r.dataflow_match.is_some() as u8,
                    codebleu: r.codebleu,
                };
                Nl2fixStatus::Ok
            }
            Err(e @ CodeSimError::ReferenceUnparsable(_)) => fail(Nl2fixStatus::Parse, e.to_string()),
            Err(e) => fail(Nl2fixStatus::Domain, e.to_string()),
        }
    })
}

/// Loads a JSON-lines corpus. Release the handle with [`nl2fix_corpus_free`].
///
/// # Safety
/// `path` must be NUL-terminated UTF-8; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nl2fix_corpus_load(path: *const c_char, out: *mut *mut Nl2fixCorpus) -> Nl2fixStatus {
    guard(|| {
        non_null!(out);
        let path = try_ffi!(read_str(path));
        match corpus::load_corpus(Path::new(path)) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(Nl2fixCorpus(c)));
                Nl2fixStatus::Ok
            }
            Err(e @ corpus::CorpusError::Io { .. }) => fail(Nl2fixStatus::Io, e.to_string()),
            Err(e) => fail(Nl2fixStatus::Parse, e.to_string()),
        }
    })
}

/// Number of records, or 0 for a NULL handle.
///
/// # Safety
/// `corpus` must be NULL or a live handle from [`nl2fix_corpus_load`].
#[no_mangle]
pub unsafe extern "C" fn nl2fix_corpus_len(corpus: *const Nl2fixCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.0.len())
}

/// Bug id of the record at `index`, in file order.
///
/// # Safety
/// `corpus` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nl2fix_corpus_bug_id(
    corpus: *const Nl2fixCorpus,
    index: usize,
    out: *mut *mut c_char,
) -> Nl2fixStatus {
    guard(|| {
        non_null!(corpus, out);
        let corpus = &*corpus;
        match corpus.0.records.get(index) {
            Some(r) => write_string(out, r.bug_id.clone()),
            None => fail(Nl2fixStatus::OutOfRange, format!("index {index} out of range")),
        }
    })
}

/// # Safety
/// `corpus` must be NULL or a handle from [`nl2fix_corpus_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nl2fix_corpus_free(corpus: *mut Nl2fixCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}
