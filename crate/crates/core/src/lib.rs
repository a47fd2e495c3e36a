//! Evaluation harness for generating and ranking bug fixes from issue
//! descriptions.
//!
//! The pipeline runs in phases: prompts are built from a benchmark corpus
//! ([`corpus`], [`prompt`]), candidate patches are sampled from a
//! generation provider ([`sample`]), validated against the project's test
//! commands ([`patch`]), scored ([`metrics`], [`codesim`]) and finally ranked
//! by embedding similarity to the buggy input ([`rank`]). [`pipeline`] wires
//! the phases together behind the `nl2fix` command line.

pub mod cache;
pub mod codesim;
pub mod corpus;
pub mod metrics;
pub mod patch;
pub mod pipeline;
pub mod pool;
pub mod prompt;
pub mod provider;
pub mod rank;
pub mod sample;

pub use corpus::{BugRecord, Corpus, MethodSpan};
pub use metrics::{canonical_form, content_hash, pass_at_k};
pub use patch::{Status, ValidationOutcome};
pub use prompt::{PromptSpec, Strategy};
pub use rank::RankedSuggestions;
pub use sample::{CandidatePatch, GenParams, Mode};
