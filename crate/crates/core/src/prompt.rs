//! Prompt construction for the four prompting strategies, nearest-example
//! selection for one-shot prompts, and context-budget fitting.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{BugRecord, Corpus};

pub const ZERO_SHOT_TEMPLATE: &str = include_str!("../templates/zero_shot.txt");
pub const EXAMPLE_TEMPLATE: &str = include_str!("../templates/example.txt");
pub const REASONING_TEMPLATES: [&str; 3] = [
    include_str!("../templates/re1.txt"),
    include_str!("../templates/re2.txt"),
    include_str!("../templates/re3.txt"),
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("no other record is available as a one-shot example for {0}")]
    NoExampleAvailable(String),
    #[error("target code and instruction need {needed} tokens but only {limit} fit")]
    TargetTooLarge { needed: usize, limit: usize },
    #[error("reserve {reserve} must be smaller than the context budget {budget}")]
    InvalidBudget { budget: usize, reserve: usize },
    #[error("prompt for {0} would contain its own ground-truth fix")]
    LeaksGroundTruth(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    ZeroShot,
    TitleOnly,
    OneShot,
    #[serde(rename = "reasoning")]
    ReasoningExtraction,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::ZeroShot => "zero-shot",
            Strategy::TitleOnly => "title-only",
            Strategy::OneShot => "one-shot",
            Strategy::ReasoningExtraction => "reasoning",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero-shot" => Ok(Strategy::ZeroShot),
            "title-only" => Ok(Strategy::TitleOnly),
            "one-shot" => Ok(Strategy::OneShot),
            "reasoning" => Ok(Strategy::ReasoningExtraction),
            other => Err(format!(
                "unknown strategy {other:?} (expected zero-shot, title-only, one-shot or reasoning)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TurnRole {
    System,
    User,
    AssistantPlaceholder,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub role: TurnRole,
    pub text: String,
}

/// Issue and code of the bug being prompted for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetFields {
    pub title: String,
    pub description: String,
    pub buggy_function: String,
}

/// The solved bug shown to the model in one-shot prompts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleFields {
    pub bug_id: String,
    pub title: String,
    pub description: String,
    pub buggy_function: String,
    pub fixed_function: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub bug_id: String,
    pub strategy: Strategy,
    /// One user turn, or three staged user turns for reasoning extraction
    /// (localize, explain, fix).
    pub turns: Vec<Turn>,
    /// Method signature appended for completion-mode providers.
    pub completion_suffix: Option<String>,
    pub token_estimate: usize,
    pub target: TargetFields,
    pub example: Option<ExampleFields>,
}

impl PromptSpec {
    pub fn user_turns(&self) -> impl Iterator<Item = &Turn> {
        self.turns.iter().filter(|t| t.role == TurnRole::User)
    }

    fn assemble(
        bug_id: &str,
        strategy: Strategy,
        target: TargetFields,
        example: Option<ExampleFields>,
        completion_suffix: Option<String>,
    ) -> Self {
        let target_vars = [
            ("title", target.title.as_str()),
            ("description", target.description.as_str()),
            ("buggy_function", target.buggy_function.as_str()),
        ];
        let turns: Vec<Turn> = match strategy {
            Strategy::ReasoningExtraction => REASONING_TEMPLATES
                .iter()
                .map(|tpl| user(render(tpl, &target_vars)))
                .collect(),
            _ => {
                let mut text = String::new();
                if let Some(ex) = example.as_ref().filter(|ex| !example_is_blank(ex)) {
                    text.push_str("Example:\n");
                    text.push_str(&render(
                        EXAMPLE_TEMPLATE,
                        &[
                            ("title", ex.title.as_str()),
                            ("description", ex.description.as_str()),
                            ("buggy_function", ex.buggy_function.as_str()),
                            ("fixed_function", ex.fixed_function.as_str()),
                        ],
                    ));
                    text.push('\n');
                }
                text.push_str(&render(ZERO_SHOT_TEMPLATE, &target_vars));
                vec![user(text)]
            }
        };
        let mut spec = PromptSpec {
            bug_id: bug_id.to_string(),
            strategy,
            turns,
            completion_suffix,
            token_estimate: 0,
            target,
            example,
        };
        spec.token_estimate = spec.estimate();
        spec
    }

    fn estimate(&self) -> usize {
        self.turns.iter().map(|t| estimate_tokens(&t.text)).sum::<usize>()
            + self.completion_suffix.as_deref().map_or(0, estimate_tokens)
    }

    fn contains(&self, needle: &str) -> bool {
        self.turns.iter().any(|t| t.text.contains(needle))
            || self.completion_suffix.as_deref().is_some_and(|s| s.contains(needle))
    }
}

fn user(text: String) -> Turn {
    Turn {
        role: TurnRole::User,
        text,
    }
}

fn example_is_blank(ex: &ExampleFields) -> bool {
    [&ex.title, &ex.description, &ex.buggy_function, &ex.fixed_function]
        .iter()
        .all(|s| s.is_empty())
}

/// Renders a template whose sections are separated by blank lines. A
/// section referencing a placeholder with an empty value is omitted
/// entirely, so no empty headers appear.
fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut sections = Vec::new();
    for section in template.split("\n\n") {
        let mut out = String::new();
        let mut rest = section;
        let mut skip = false;
        while let Some(open) = rest.find('{') {
            let after = &rest[open + 1..];
            let hit = after.find('}').and_then(|close| {
                let name = &after[..close];
                vars.iter().find(|(k, _)| *k == name).map(|(_, v)| (close, *v))
            });
            match hit {
                Some((close, value)) => {
                    skip |= value.is_empty();
                    out.push_str(&rest[..open]);
                    out.push_str(value);
                    rest = &after[close + 1..];
                }
                None => {
                    out.push_str(&rest[..=open]);
                    rest = after;
                }
            }
        }
        out.push_str(rest);
        if !skip {
            sections.push(out);
        }
    }
    let mut rendered = sections.join("\n\n");
    if template.ends_with('\n') && !rendered.ends_with('\n') {
        rendered.push('\n');
    }
    rendered
}

/// Provider-independent token estimate: identifier/number runs and single
/// punctuation characters each count as one word; the word count is scaled
/// by 1.3 and rounded up.
pub fn estimate_tokens(text: &str) -> usize {
    let words = word_ends(text).len();
    (words * 13).div_ceil(10)
}

/// Byte offsets at which each counted word ends.
fn word_ends(text: &str) -> Vec<usize> {
    let mut ends = Vec::new();
    let mut in_word = false;
    for (i, c) in text.char_indices() {
        let wordy = c.is_alphanumeric() || c == '_';
        if in_word && !wordy {
            ends.push(i);
        }
        in_word = wordy;
        if !wordy && !c.is_whitespace() {
            ends.push(i + c.len_utf8());
        }
    }
    if in_word {
        ends.push(text.len());
    }
    ends
}

/// Character-level Levenshtein distance with unit costs.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Signature of a method: its text up to and including the opening brace.
pub fn method_signature(function: &str) -> Option<String> {
    let brace = function.find('{')?;
    let sig = function[..=brace].trim();
    (sig.len() > 1).then(|| sig.to_string())
}

fn target_fields(record: &BugRecord) -> TargetFields {
    TargetFields {
        title: record.issue_title.clone(),
        description: record.issue_description.clone(),
        buggy_function: record.buggy_function.clone(),
    }
}

fn guard(spec: PromptSpec, record: &BugRecord) -> Result<PromptSpec, PromptError> {
    if spec.contains(&record.fixed_function) {
        return Err(PromptError::LeaksGroundTruth(record.bug_id.clone()));
    }
    Ok(spec)
}

pub fn build_zero_shot(record: &BugRecord) -> Result<PromptSpec, PromptError> {
    let spec = PromptSpec::assemble(
        &record.bug_id,
        Strategy::ZeroShot,
        target_fields(record),
        None,
        method_signature(&record.buggy_function),
    );
    guard(spec, record)
}

/// Zero-shot prompt with the issue description removed.
pub fn build_title_only(record: &BugRecord) -> Result<PromptSpec, PromptError> {
    let mut target = target_fields(record);
    target.description.clear();
    let spec = PromptSpec::assemble(
        &record.bug_id,
        Strategy::TitleOnly,
        target,
        None,
        method_signature(&record.buggy_function),
    );
    guard(spec, record)
}

/// The record whose buggy function is closest by edit distance, excluding
/// the target itself; ties go to the smallest bug_id.
pub fn nearest_example<'a>(record: &BugRecord, corpus: &'a Corpus) -> Result<&'a BugRecord, PromptError> {
    corpus
        .records
        .iter()
        .filter(|e| e.bug_id != record.bug_id)
        .map(|e| (edit_distance(&e.buggy_function, &record.buggy_function), e))
        .min_by(|(da, a), (db, b)| da.cmp(db).then_with(|| a.bug_id.cmp(&b.bug_id)))
        .map(|(_, e)| e)
        .ok_or_else(|| PromptError::NoExampleAvailable(record.bug_id.clone()))
}

pub fn build_one_shot(record: &BugRecord, corpus: &Corpus) -> Result<PromptSpec, PromptError> {
    let ex = nearest_example(record, corpus)?;
    let example = ExampleFields {
        bug_id: ex.bug_id.clone(),
        title: ex.issue_title.clone(),
        description: ex.issue_description.clone(),
        buggy_function: ex.buggy_function.clone(),
        fixed_function: ex.fixed_function.clone(),
    };
    let spec = PromptSpec::assemble(
        &record.bug_id,
        Strategy::OneShot,
        target_fields(record),
        Some(example),
        method_signature(&record.buggy_function),
    );
    guard(spec, record)
}

/// Three staged user turns: localize the buggy lines, explain them, fix.
/// Provider replies are spliced in between the stages at sampling time.
pub fn build_reasoning_turns(record: &BugRecord) -> Result<PromptSpec, PromptError> {
    let spec = PromptSpec::assemble(
        &record.bug_id,
        Strategy::ReasoningExtraction,
        target_fields(record),
        None,
        method_signature(&record.buggy_function),
    );
    guard(spec, record)
}

pub fn build(strategy: Strategy, record: &BugRecord, corpus: &Corpus) -> Result<PromptSpec, PromptError> {
    match strategy {
        Strategy::ZeroShot => build_zero_shot(record),
        Strategy::TitleOnly => build_title_only(record),
        Strategy::OneShot => build_one_shot(record, corpus),
        Strategy::ReasoningExtraction => build_reasoning_turns(record),
    }
}

#[derive(Clone, Copy)]
enum Field {
    ExampleFixed,
    ExampleBuggy,
    ExampleDescription,
    ExampleTitle,
    TargetDescription,
}

const TRUNCATION_ORDER: [Field; 5] = [
    Field::ExampleFixed,
    Field::ExampleBuggy,
    Field::ExampleDescription,
    Field::ExampleTitle,
    Field::TargetDescription,
];

fn field_mut<'a>(target: &'a mut TargetFields, example: &'a mut Option<ExampleFields>, field: Field) -> Option<&'a mut String> {
    match field {
        Field::TargetDescription => Some(&mut target.description),
        Field::ExampleFixed => example.as_mut().map(|e| &mut e.fixed_function),
        Field::ExampleBuggy => example.as_mut().map(|e| &mut e.buggy_function),
        Field::ExampleDescription => example.as_mut().map(|e| &mut e.description),
        Field::ExampleTitle => example.as_mut().map(|e| &mut e.title),
    }
}

/// Shrinks a prompt until `token_estimate <= context_budget - reserve`.
///
/// Text is cut from the tail of, in order: the example fix, the example
/// buggy code, the example issue text, and the target issue description.
/// The target code, title and instruction are never touched.
pub fn fit_to_budget(prompt: &PromptSpec, context_budget: usize, reserve: usize) -> Result<PromptSpec, PromptError> {
    if reserve >= context_budget {
        return Err(PromptError::InvalidBudget {
            budget: context_budget,
            reserve,
        });
    }
    let limit = context_budget - reserve;
    if prompt.token_estimate <= limit {
        return Ok(prompt.clone());
    }
    let rebuild = |target: &TargetFields, example: &Option<ExampleFields>| {
        PromptSpec::assemble(
            &prompt.bug_id,
            prompt.strategy,
            target.clone(),
            example.clone(),
            prompt.completion_suffix.clone(),
        )
    };
    let mut target = prompt.target.clone();
    let mut example = prompt.example.clone();
    let mut current = prompt.clone();
    for field in TRUNCATION_ORDER {
        if current.token_estimate <= limit {
            break;
        }
        let Some(original) = field_mut(&mut target, &mut example, field).map(|s| s.clone()) else {
            continue;
        };
        let ends = word_ends(&original);
        let cut_at = |words: usize| if words == 0 { 0 } else { ends[words - 1] };
        // largest word prefix that fits; 0 when nothing does
        let (mut lo, mut hi) = (0usize, ends.len());
        while lo < hi {
            let mid = (lo + hi).div_ceil(2);
            *field_mut(&mut target, &mut example, field).unwrap() = original[..cut_at(mid)].to_string();
            if rebuild(&target, &example).token_estimate <= limit {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        *field_mut(&mut target, &mut example, field).unwrap() = original[..cut_at(lo)].trim_end().to_string();
        current = rebuild(&target, &example);
    }
    if current.token_estimate > limit {
        return Err(PromptError::TargetTooLarge {
            needed: current.token_estimate,
            limit,
        });
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::MethodSpan;

    fn record(id: &str, title: &str, desc: &str, buggy: &str, fixed: &str) -> BugRecord {
        BugRecord {
            bug_id: id.into(),
            project: "P".into(),
            issue_title: title.into(),
            issue_description: desc.into(),
            buggy_function: buggy.into(),
            fixed_function: fixed.into(),
            file_path: "A.java".into(),
            method_span: MethodSpan {
                start_line: 1,
                end_line: 1,
            },
            language: "java".into(),
            workspace_setup_cmd: "s".into(),
            compile_cmd: "c".into(),
            regression_cmd: "r".into(),
            trigger_cmd: "t".into(),
            stage_timeout_s: None,
        }
    }

    fn corpus(records: Vec<BugRecord>) -> Corpus {
        Corpus {
            records,
            source_path: "mem".into(),
        }
    }

    #[test]
    fn edit_distance_examples() {
        assert_eq!(edit_distance("abc", "abc"), 0);
        assert_eq!(edit_distance("abc", ""), 3);
        assert_eq!(edit_distance("", "abc"), 3);
        assert_eq!(edit_distance("kitten", "sitting"), 3);
        assert_eq!(edit_distance("héllo", "hello"), 1);
    }

    #[test]
    fn zero_shot_orders_fields() {
        let r = record("B", "T", "D", "C", "ZZ_FIX");
        let p = build_zero_shot(&r).unwrap();
        assert_eq!(p.turns.len(), 1);
        let text = &p.turns[0].text;
        let (t, d, c) = (text.find("T").unwrap(), text.find("D").unwrap(), text.find("C").unwrap());
        assert!(t < d && d < c);
        assert_eq!(
            text,
            "Issue Title: T\n\nIssue Description: D\n\nBuggy Function:\nC\n\nProvide a fixed version of this function that resolves the issue. Output only the complete fixed function.\n"
        );
    }

    #[test]
    fn empty_sections_are_omitted() {
        let r = record("B", "T", "", "int f(){}", "int f(){;}");
        let text = &build_zero_shot(&r).unwrap().turns[0].text;
        assert!(!text.contains("Issue Description"));
        assert!(text.starts_with("Issue Title: T\n\nBuggy Function:\n"));

        let r = record("B", "", "", "int f(){}", "int f(){;}");
        let text = &build_title_only(&r).unwrap().turns[0].text;
        assert!(text.starts_with("Buggy Function:\nint f(){}"));
        assert!(text.contains("Output only the complete fixed function."));
    }

    #[test]
    fn title_only_is_zero_shot_without_description() {
        let r = record("B", "T", "D", "int f(){}", "int f(){;}");
        let mut no_desc = r.clone();
        no_desc.issue_description.clear();
        assert_eq!(build_title_only(&r).unwrap().turns, build_zero_shot(&no_desc).unwrap().turns);
    }

    #[test]
    fn placeholders_in_values_are_not_expanded() {
        let r = record("B", "{description}", "D", "int f(){ return \"{title}\"; }", "int f(){ return 0; }");
        let text = &build_zero_shot(&r).unwrap().turns[0].text;
        assert!(text.starts_with("Issue Title: {description}\n"));
        assert!(text.contains("return \"{title}\";"));
    }

    #[test]
    fn one_shot_selects_nearest_with_tie_break() {
        let target = record("T", "t", "d", "abcdefghij", "int t(){return 9;}");
        let e1 = record("E1", "", "", "abcde", "f1");
        let e2 = record("E2", "", "", "abcdefgh", "f2");
        let c = corpus(vec![target.clone(), e1, e2]);
        let p = build_one_shot(&target, &c).unwrap();
        assert_eq!(p.example.as_ref().unwrap().bug_id, "E2");

        let b = record("B", "", "", "abcdefghiX", "fb");
        let a = record("A", "", "", "abcdefghiY", "fa");
        let c = corpus(vec![target.clone(), b, a]);
        assert_eq!(nearest_example(&target, &c).unwrap().bug_id, "A");
    }

    #[test]
    fn one_shot_never_selects_self() {
        let target = record("T", "t", "d", "same", "int t(){return 9;}");
        let twin = record("U", "t", "d", "same", "other fix");
        let c = corpus(vec![twin.clone(), target.clone()]);
        assert_eq!(nearest_example(&target, &c).unwrap().bug_id, "U");
        let alone = corpus(vec![target.clone()]);
        assert_eq!(
            build_one_shot(&target, &alone),
            Err(PromptError::NoExampleAvailable("T".into()))
        );
    }

    #[test]
    fn one_shot_layout() {
        let target = record("T", "tt", "td", "int f(){}", "int f(){;}");
        let ex = record("E", "et", "ed", "int g(){}", "int g(){;;}");
        let p = build_one_shot(&target, &corpus(vec![target.clone(), ex])).unwrap();
        let expected = format!(
            "Example:\nIssue Title: et\n\nIssue Description: ed\n\nBuggy Function:\nint g(){{}}\n\nFixed Function:\nint g(){{;;}}\n\n{}",
            build_zero_shot(&target).unwrap().turns[0].text
        );
        assert_eq!(p.turns[0].text, expected);
    }

    #[test]
    fn own_fix_is_guarded() {
        let r = record("B", "the fix is int f(){return 2;}", "", "int f(){return 1;}", "int f(){return 2;}");
        assert_eq!(build_zero_shot(&r), Err(PromptError::LeaksGroundTruth("B".into())));
    }

    #[test]
    fn reasoning_has_three_distinct_stages() {
        let r = record("B", "T", "D", "int f(){}", "int f(){;}");
        let p = build_reasoning_turns(&r).unwrap();
        let users: Vec<_> = p.user_turns().collect();
        assert_eq!(users.len(), 3);
        assert!(users[0].text.contains("int f(){}"));
        assert!(users[0].text.contains("Identify the buggy lines"));
        assert!(users[1].text.contains("buggy lines you identified"));
        assert!(users[2].text.contains("your explanation"));
        assert!(users[2].text.contains("Output only the complete fixed function"));
        assert_ne!(users[0].text, users[1].text);
        assert_ne!(users[1].text, users[2].text);
        assert_ne!(users[0].text, users[2].text);
    }

    #[test]
    fn token_estimate_rule() {
        assert_eq!(estimate_tokens(""), 0);
        // int, x, =, 1, ; -> 5 words -> ceil(6.5) = 7
        assert_eq!(estimate_tokens("int x = 1;"), 7);
        assert_eq!(estimate_tokens("abc_def"), 2);
    }

    #[test]
    fn signature_extraction() {
        assert_eq!(
            method_signature("public int f(int a) {\n return a;\n}").as_deref(),
            Some("public int f(int a) {")
        );
        assert_eq!(method_signature("return x;"), None);
    }

    #[test]
    fn fit_leaves_small_prompts_alone() {
        let r = record("B", "T", "D", "int f(){}", "int f(){;}");
        let p = build_zero_shot(&r).unwrap();
        assert_eq!(fit_to_budget(&p, 10_000, 750).unwrap(), p);
        assert!(matches!(fit_to_budget(&p, 750, 750), Err(PromptError::InvalidBudget { .. })));
    }

    #[test]
    fn fit_truncates_example_before_target() {
        let long = |w: &str, n: usize| vec![w; n].join(" ");
        let target = record("T", "title", "short description", "int f(){ return 1; }", "int f(){ return 2; }");
        let ex = record("E", "et", &long("ed", 200), &long("eb", 300), &long("ef", 300));
        let p = build_one_shot(&target, &corpus(vec![target.clone(), ex])).unwrap();
        let budget = p.token_estimate / 2 + 100;
        let fitted = fit_to_budget(&p, budget, 100).unwrap();
        assert!(fitted.token_estimate <= budget - 100);
        assert!(fitted.turns[0].text.contains("int f(){ return 1; }"));
        assert!(fitted.turns[0].text.contains("short description"));
        let ex = fitted.example.unwrap();
        assert!(ex.fixed_function.is_empty());
        assert!(!ex.buggy_function.is_empty());
    }

    #[test]
    fn fit_reports_oversized_target() {
        let big = vec!["x();"; 500].join("\n");
        let r = record("B", "T", "D", &format!("void f(){{\n{big}\n}}"), "void f(){}");
        let p = build_zero_shot(&r).unwrap();
        assert!(matches!(fit_to_budget(&p, 600, 100), Err(PromptError::TargetTooLarge { .. })));
    }
}
