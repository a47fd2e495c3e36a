//! CodeBLEU and its components: token BLEU, keyword-weighted BLEU, syntax
//! subtree match and def-use dataflow match.

pub mod bleu;
pub mod dataflow;
pub mod lexer;
pub mod parser;
pub mod syntax;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bleu::{bleu, weighted_keyword_bleu};
pub use lexer::{tokenize, KeywordSet, Token, TokenKind};
pub use parser::{parse_prefix, parse_strict, Node};

#[derive(Debug, Error, PartialEq)]
pub enum CodeSimError {
    #[error("reference does not parse (stopped at token {0})")]
    ReferenceUnparsable(usize),
    #[error("weights must be nonnegative with a positive sum")]
    InvalidWeights,
}

/// Weights of (bleu, keyword bleu, syntax, dataflow).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights(pub f64, pub f64, pub f64, pub f64);

impl Default for Weights {
    fn default() -> Self {
        Self(0.25, 0.25, 0.25, 0.25)
    }
}

impl Weights {
    fn check(&self) -> Result<(), CodeSimError> {
        let w = [self.0, self.1, self.2, self.3];
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().sum::<f64>() <= 0.0 {
            return Err(CodeSimError::InvalidWeights);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub bleu: f64,
    pub keyword_bleu: f64,
    pub syntax_match: f64,
    pub dataflow_match: Option<f64>,
    pub codebleu: f64,
    pub weights: Weights,
}

/// Scores candidates against references for one language.
#[derive(Debug, Clone)]
pub struct CodeSim {
    keywords: KeywordSet,
}

impl CodeSim {
    pub fn new(keywords: KeywordSet) -> Self {
        Self { keywords }
    }

    pub fn for_language(language: &str) -> Self {
        Self::new(KeywordSet::for_language(language))
    }

    pub fn keywords(&self) -> &KeywordSet {
        &self.keywords
    }

    pub fn tokenize(&self, source: &str) -> Vec<Token> {
        tokenize(source, &self.keywords)
    }

    fn reference_tree(&self, tokens: &[Token]) -> Result<Node, CodeSimError> {
        match parse_strict(tokens) {
            Ok(tree) if !tree.children.is_empty() => Ok(tree),
            Ok(_) => Err(CodeSimError::ReferenceUnparsable(0)),
            Err(e) => Err(CodeSimError::ReferenceUnparsable(e.pos)),
        }
    }

    pub fn syntax_match(&self, candidate: &str, reference: &str) -> Result<f64, CodeSimError> {
        let r = self.reference_tree(&self.tokenize(reference))?;
        let c = parse_prefix(&self.tokenize(candidate));
        Ok(syntax::syntax_match(&c, &r).unwrap_or(0.0))
    }

    pub fn dataflow_match(&self, candidate: &str, reference: &str) -> Option<f64> {
        let r = parse_prefix(&self.tokenize(reference));
        let c = parse_prefix(&self.tokenize(candidate));
        dataflow::dataflow_match(&c, &r)
    }

    pub fn codebleu(&self, candidate: &str, reference: &str, weights: Weights) -> Result<SimilarityReport, CodeSimError> {
        weights.check()?;
        let ct = self.tokenize(candidate);
        let rt = self.tokenize(reference);
        let rtree = self.reference_tree(&rt)?;
        let ctree = parse_prefix(&ct);
        let ctexts: Vec<&str> = ct.iter().map(|t| t.text.as_str()).collect();
        let rtexts: Vec<&str> = rt.iter().map(|t| t.text.as_str()).collect();

        let b = bleu(&ctexts, &rtexts);
        let w = weighted_keyword_bleu(&ctexts, &rtexts, &self.keywords);
        let s = syntax::syntax_match(&ctree, &rtree).unwrap_or(0.0);
        let d = dataflow::dataflow_match(&ctree, &rtree);

        let Weights(alpha, beta, gamma, delta) = weights;
        let (sum, norm) = match d {
            Some(d) => (alpha * b + beta * w + gamma * s + delta * d, alpha + beta + gamma + delta),
            None => (alpha * b + beta * w + gamma * s, alpha + beta + gamma),
        };
        if norm <= 0.0 {
            // all remaining weight sat on the absent component
            return Err(CodeSimError::InvalidWeights);
        }
        Ok(SimilarityReport {
            bleu: b,
            keyword_bleu: w,
            syntax_match: s,
            dataflow_match: d,
            codebleu: (sum / norm).clamp(0.0, 1.0),
            weights,
        })
    }
}

/// One-off CodeBLEU with the built-in keyword list for `language`.
pub fn codebleu(candidate: &str, reference: &str, language: &str, weights: Weights) -> Result<SimilarityReport, CodeSimError> {
    CodeSim::for_language(language).codebleu(candidate, reference, weights)
}
