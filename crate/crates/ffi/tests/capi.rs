use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use nl2fix_ffi::*;

fn take(s: *mut std::ffi::c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { nl2fix_string_free(s) };
    out
}

fn last_error() -> String {
    let p = nl2fix_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn pass_at_k_values_and_errors() {
    let mut v = 0.0;
    assert_eq!(unsafe { nl2fix_pass_at_k(10, 3, 1, &mut v) }, Nl2fixStatus::Ok);
    assert_eq!(v, 0.3);
    assert!(nl2fix_last_error().is_null());
    assert_eq!(unsafe { nl2fix_pass_at_k(3, 4, 1, &mut v) }, Nl2fixStatus::Domain);
    assert!(last_error().contains("domain"));
    assert_eq!(unsafe { nl2fix_pass_at_k(3, 1, 1, ptr::null_mut()) }, Nl2fixStatus::NullPointer);
}

#[test]
fn wilcoxon_all_positive_six() {
    let x = [2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
    let y = [0.0; 6];
    let mut p = 0.0;
    assert_eq!(unsafe { nl2fix_wilcoxon(x.as_ptr(), y.as_ptr(), 6, &mut p) }, Nl2fixStatus::Ok);
    assert_eq!(p, 0.015625);
}

#[test]
fn string_functions() {
    let a = CString::new("kitten").unwrap();
    let b = CString::new("sitting").unwrap();
    let mut d = 0usize;
    assert_eq!(unsafe { nl2fix_edit_distance(a.as_ptr(), b.as_ptr(), &mut d) }, Nl2fixStatus::Ok);
    assert_eq!(d, 3);

    let src = CString::new("int x = 1; // one\n").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { nl2fix_strip_comments(src.as_ptr(), &mut out) }, Nl2fixStatus::Ok);
    assert_eq!(take(out), "int x = 1;\n");

    let bad = CString::new("a /* open").unwrap();
    assert_eq!(unsafe { nl2fix_strip_comments(bad.as_ptr(), &mut out) }, Nl2fixStatus::Parse);

    let h1 = CString::new("int f() { return 1; }").unwrap();
    let h2 = CString::new("int f(){return 1;}").unwrap();
    let mut o1 = ptr::null_mut();
    let mut o2 = ptr::null_mut();
    unsafe {
        nl2fix_content_hash(h1.as_ptr(), &mut o1);
        nl2fix_content_hash(h2.as_ptr(), &mut o2);
    }
    let (h1, h2) = (take(o1), take(o2));
    assert_eq!(h1, h2);
    assert_eq!(h1.len(), 64);
}

#[test]
fn invalid_utf8_is_reported() {
    let bytes = [0xffu8, 0xfe, 0];
    let mut d = 0usize;
    let ok = CString::new("x").unwrap();
    let status = unsafe { nl2fix_edit_distance(bytes.as_ptr().cast(), ok.as_ptr(), &mut d) };
    assert_eq!(status, Nl2fixStatus::InvalidUtf8);
}

#[test]
fn codebleu_reflexive_and_unparsable() {
    let f = CString::new("int f(int a) { int b = a + 1; return b; }").unwrap();
    let mut sim = Nl2fixSimilarity::default();
    assert_eq!(unsafe { nl2fix_codebleu(f.as_ptr(), f.as_ptr(), &mut sim) }, Nl2fixStatus::Ok);
    assert!((sim.codebleu - 1.0).abs() < 1e-9);
    assert_eq!(sim.has_dataflow, 1);

    let broken = CString::new("int f( {").unwrap();
    assert_eq!(unsafe { nl2fix_codebleu(f.as_ptr(), broken.as_ptr(), &mut sim) }, Nl2fixStatus::Parse);
}

#[test]
fn corpus_handle() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/synthetic/corpus.jsonl");
    let path = CString::new(path.to_str().unwrap()).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { nl2fix_corpus_load(path.as_ptr(), &mut h) }, Nl2fixStatus::Ok);
    assert_eq!(unsafe { nl2fix_corpus_len(h) }, 5);
    let mut id = ptr::null_mut();
    assert_eq!(unsafe { nl2fix_corpus_bug_id(h, 0, &mut id) }, Nl2fixStatus::Ok);
    assert_eq!(take(id), "Lang-1");
    assert_eq!(unsafe { nl2fix_corpus_bug_id(h, 5, &mut id) }, Nl2fixStatus::OutOfRange);
    unsafe { nl2fix_corpus_free(h) };
    assert_eq!(unsafe { nl2fix_corpus_len(ptr::null()) }, 0);

    let missing = CString::new("/nonexistent/corpus.jsonl").unwrap();
    assert_eq!(unsafe { nl2fix_corpus_load(missing.as_ptr(), &mut h) }, Nl2fixStatus::Io);
}

#[test]
fn header_compiles_as_c() {
    let header = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/nl2fix.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["nl2fix_pass_at_k", "nl2fix_codebleu", "nl2fix_corpus_free", "NL2FIX_STATUS_OK"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-x", "c"]).arg(&header).output() else {
        eprintln!("no C compiler; syntax check skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
