use nl2fix::codesim::{codebleu, CodeSim, CodeSimError, Weights};

// BLEU parts from an independent implementation over the 18-token streams:
// p = 17/18, 15/17, 13/16, 11/15; keyword unigram precision 33/34.
const BLEU: f64 = 0.8394327083733336;
const KEYWORD_BLEU: f64 = 0.845182583518141;
const CODEBLEU: f64 = 0.9211538229728686;

const REFERENCE: &str = "int f(int a) { int b = a + 1; return b; }";
const CANDIDATE: &str = "int f(int a) { int b = a - 1; return b; }";

#[test]
fn golden_pair() {
    let r = codebleu(CANDIDATE, REFERENCE, "java", Weights::default()).unwrap();
    assert!((r.bleu - BLEU).abs() < 1e-12, "{}", r.bleu);
    assert!((r.keyword_bleu - KEYWORD_BLEU).abs() < 1e-12, "{}", r.keyword_bleu);
    // only an operator token differs, so structure and flow agree fully
    assert_eq!(r.syntax_match, 1.0);
    assert_eq!(r.dataflow_match, Some(1.0));
    assert!((r.codebleu - CODEBLEU).abs() < 1e-12, "{}", r.codebleu);
}

#[test]
fn weights_without_dataflow_renormalize() {
    let sim = CodeSim::for_language("java");
    // no variables, so no def-use edges
    let r = sim.codebleu("int f() { return 1; }", "int f() { return 2; }", Weights::default()).unwrap();
    assert_eq!(r.dataflow_match, None);
    let expected = (r.bleu + r.keyword_bleu + r.syntax_match) / 3.0;
    assert!((r.codebleu - expected).abs() < 1e-12);
    let zero = sim.codebleu("int f() { return 1; }", "int f() { return 2; }", Weights(0.0, 0.0, 0.0, 1.0));
    assert!(matches!(zero, Err(CodeSimError::InvalidWeights)));
}

#[test]
fn unparsable_reference_is_an_error() {
    assert!(matches!(
        codebleu(CANDIDATE, "int f( {", "java", Weights::default()),
        Err(CodeSimError::ReferenceUnparsable(_))
    ));
    // a broken candidate is scored on its parsable prefix
    let r = codebleu("int f(int a) { int b = a +", REFERENCE, "java", Weights::default()).unwrap();
    assert!(r.codebleu > 0.0 && r.codebleu < 1.0);
}
