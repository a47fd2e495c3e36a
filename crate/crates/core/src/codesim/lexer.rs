//! Lexer for C-family source text (Java by default).

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub const JAVA_KEYWORDS: &str = include_str!("../../assets/keywords/java.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Identifier,
    Keyword,
    /// `true`, `false`, `null`
    Literal,
    Number,
    Str,
    Char,
    Operator,
    Punct,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
}

/// Reserved words of a language, one per line in the asset file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordSet {
    words: BTreeSet<String>,
}

impl KeywordSet {
    pub fn parse(text: &str) -> Self {
        Self {
            words: text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect(),
        }
    }

    pub fn from_file(path: &Path) -> io::Result<Self> {
        Ok(Self::parse(&fs::read_to_string(path)?))
    }

    pub fn java() -> Self {
        Self::parse(JAVA_KEYWORDS)
    }

    /// Built-in list for a language tag. C-family languages without their
    /// own list fall back to Java's.
    pub fn for_language(language: &str) -> Self {
        match language {
            "java" => Self::java(),
            other => {
                log::debug!("no keyword list for {other:?}, using java");
                Self::java()
            }
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

// longest first for maximal munch
const OPERATORS: [&str; 46] = [
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", ">=",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "+", "-", "*", "/", "%", "=", "<",
    ">", "!", "~", "?", ":", "&", "|", "^", "@", ".", "(", ")", "{", "}",
];
const PUNCT: [&str; 6] = ["(", ")", "{", "}", "[", "]"];

fn is_punct(op: &str) -> bool {
    PUNCT.contains(&op) || op == ";" || op == "," || op == "."
}

/// Splits source into tokens. Whitespace and comments are dropped; bytes
/// that fit no token class become single-character `Unknown` tokens.
pub fn tokenize(source: &str, keywords: &KeywordSet) -> Vec<Token> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let push = |out: &mut Vec<Token>, kind, text: String| out.push(Token { kind, text });
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            i += 2;
            while i < chars.len() && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                i += 1;
            }
            i = (i + 2).min(chars.len());
            continue;
        }
        if c.is_alphabetic() || c == '_' || c == '$' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '$') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let kind = if matches!(word.as_str(), "true" | "false" | "null") {
                TokenKind::Literal
            } else if keywords.contains(&word) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            };
            push(&mut out, kind, word);
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            i = scan_number(&chars, i);
            push(&mut out, TokenKind::Number, chars[start..i].iter().collect());
            continue;
        }
        if c == '"' {
            let start = i;
            if chars[i..].starts_with(&['"', '"', '"']) {
                i += 3;
                while i < chars.len() && !chars[i..].starts_with(&['"', '"', '"']) {
                    i += if chars[i] == '\\' { 2 } else { 1 };
                }
                i = (i + 3).min(chars.len());
            } else {
                i = scan_quoted(&chars, i, '"');
            }
            push(&mut out, TokenKind::Str, chars[start..i].iter().collect());
            continue;
        }
        if c == '\'' {
            let start = i;
            i = scan_quoted(&chars, i, '\'');
            push(&mut out, TokenKind::Char, chars[start..i].iter().collect());
            continue;
        }
        if c == ';' || c == ',' || c == '[' || c == ']' {
            push(&mut out, TokenKind::Punct, c.to_string());
            i += 1;
            continue;
        }
        if let Some(op) = OPERATORS.iter().find(|op| {
            let n = op.chars().count();
            i + n <= chars.len() && chars[i..i + n].iter().copied().eq(op.chars())
        }) {
            let kind = if is_punct(op) {
                TokenKind::Punct
            } else {
                TokenKind::Operator
            };
            push(&mut out, kind, op.to_string());
            i += op.chars().count();
            continue;
        }
        push(&mut out, TokenKind::Unknown, c.to_string());
        i += 1;
    }
    out
}

fn scan_quoted(chars: &[char], start: usize, quote: char) -> usize {
    let mut i = start + 1;
    while i < chars.len() {
        match chars[i] {
            '\\' => i += 2,
            '\n' => return i,
            c if c == quote => return i + 1,
            _ => i += 1,
        }
    }
    chars.len()
}

fn scan_number(chars: &[char], start: usize) -> usize {
    let mut i = start;
    if chars[i] == '0' && matches!(chars.get(i + 1), Some('x' | 'X' | 'b' | 'B')) {
        i += 2;
        while i < chars.len() && (chars[i].is_ascii_hexdigit() || chars[i] == '_') {
            i += 1;
        }
    } else {
        while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '_') {
            i += 1;
        }
        if i < chars.len() && chars[i] == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
            i += 1;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '_') {
                i += 1;
            }
        } else if i < chars.len() && chars[i] == '.' {
            // `1.` and `2.f` are literals, `1.foo` is not
            let next = chars.get(i + 1).copied();
            let after = chars.get(i + 2).copied();
            let suffix = matches!(next, Some('f' | 'F' | 'd' | 'D' | 'e' | 'E'))
                && !after.is_some_and(|c| c.is_alphabetic() || c == '_');
            if suffix || !next.is_some_and(|c| c.is_alphabetic() || c == '_') {
                i += 1;
            }
        }
        if i < chars.len() && matches!(chars[i], 'e' | 'E') {
            let mut j = i + 1;
            if j < chars.len() && matches!(chars[j], '+' | '-') {
                j += 1;
            }
            if j < chars.len() && chars[j].is_ascii_digit() {
                i = j;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
        }
    }
    if i < chars.len() && matches!(chars[i], 'l' | 'L' | 'f' | 'F' | 'd' | 'D') {
        i += 1;
    }
    i
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(src: &str) -> Vec<String> {
        tokenize(src, &KeywordSet::java()).into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn examples() {
        assert_eq!(texts("int x=1;"), ["int", "x", "=", "1", ";"]);
        assert!(texts("").is_empty());
        assert_eq!(texts("x>=y"), ["x", ">=", "y"]);
        assert_eq!(texts("a>>>=b>>>c"), ["a", ">>>=", "b", ">>>", "c"]);
    }

    #[test]
    fn drops_comments_and_keeps_literals() {
        assert_eq!(
            texts("s = \"// no\"; // yes\n c = '\\''; /* gone */ d"),
            ["s", "=", "\"// no\"", ";", "c", "=", "'\\''", ";", "d"]
        );
    }

    #[test]
    fn numbers() {
        assert_eq!(texts("0x1F 1.5e-3 10L 2.f .5"), ["0x1F", "1.5e-3", "10L", "2.f", ".5"]);
    }

    #[test]
    fn kinds() {
        let toks = tokenize("return null; foo # x", &KeywordSet::java());
        let kinds: Vec<_> = toks.iter().map(|t| t.kind).collect();
        assert_eq!(
            kinds,
            [
                TokenKind::Keyword,
                TokenKind::Literal,
                TokenKind::Punct,
                TokenKind::Identifier,
                TokenKind::Unknown,
                TokenKind::Identifier
            ]
        );
    }

    #[test]
    fn shipped_keyword_list() {
        let kw = KeywordSet::java();
        assert_eq!(kw.len(), 50);
        assert!(kw.contains("synchronized") && !kw.contains("true"));
    }
}
