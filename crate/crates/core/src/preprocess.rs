//! Tokenization, normalization, stemming and filtering of post text.
//!
//! [`preprocess`] chains the four steps in that order. Every token is
//! normalized at construction, so a [`Token`] always satisfies its
//! invariants: word, hashtag and mention norms are lowercase and contain no
//! run of more than two identical letters.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;

use crate::corpus::RawPost;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Word,
    Hashtag,
    Mention,
    Url,
    HtmlTag,
    Emoticon,
    Number,
    Phone,
    Symbol,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub norm: String,
    pub kind: TokenKind,
    /// Surface was all upper case or contained an elongated letter run.
    pub emphasis: bool,
}

impl Token {
    /// Builds a normalized token from its surface form.
    ///
    /// Hashtags and mentions lose their `#`/`@` prefix in `norm`.
    pub fn new(surface: &str, kind: TokenKind) -> Self {
        let norm = match kind {
            TokenKind::Hashtag => surface.strip_prefix('#').unwrap_or(surface),
            TokenKind::Mention => surface.strip_prefix('@').unwrap_or(surface),
            _ => surface,
        };
        normalize(Token {
            surface: surface.to_string(),
            norm: norm.to_string(),
            kind,
            emphasis: false,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Document {
    pub post_id: String,
    pub tokens: Vec<Token>,
}

impl Document {
    pub fn norms(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.norm.as_str())
    }
}

/// Emoticons recognized by the tokenizer, longest first so that `:-)` wins
/// over `:-`.
pub const EMOTICONS: &[&str] = &[
    ">:(", ":-)", ":-(", ":-D", ":-P", ":'(", ";-)", ":-/", ":)", ":(", ":D", ":P", ":p", ";)",
    ":/", ":o", ":O", ":|", "=)", "=(", "<3", "^_^", "-_-",
];

static URL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(?:[hH][tT][tT][pP][sS]?://|www\.)\S+").unwrap());
static HTML_TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^</?[A-Za-z!][^<>]*>").unwrap());
static HASHTAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^#[\p{L}\p{M}\p{N}_]+").unwrap());
static MENTION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^@[\p{L}\p{M}\p{N}_]+").unwrap());
static PHONE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?:\+\d[\d-]{6,}\d|\(\d{3}\) ?\d{3}-\d{4}|\d{3}-\d{3}-\d{4}|\d{10,13})").unwrap());
static NUMBER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\d+(?:[.,]\d+)*").unwrap());
static WORD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[\p{Alphabetic}\p{M}]+(?:'[\p{Alphabetic}\p{M}]+)*").unwrap());

fn match_len(re: &Regex, rest: &str) -> Option<usize> {
    re.find(rest).map(|m| m.end())
}

fn next_is_digit(rest: &str, len: usize) -> bool {
    rest[len..].chars().next().is_some_and(|c| c.is_ascii_digit())
}

fn classify_at(rest: &str) -> (TokenKind, usize) {
    if let Some(n) = match_len(&URL, rest) {
        return (TokenKind::Url, n);
    }
    if let Some(n) = match_len(&HTML_TAG, rest) {
        return (TokenKind::HtmlTag, n);
    }
    if let Some(n) = match_len(&HASHTAG, rest) {
        return (TokenKind::Hashtag, n);
    }
    if let Some(n) = match_len(&MENTION, rest) {
        return (TokenKind::Mention, n);
    }
    if let Some(e) = EMOTICONS.iter().find(|e| rest.starts_with(**e)) {
        return (TokenKind::Emoticon, e.len());
    }
    if let Some(n) = match_len(&PHONE, rest).filter(|&n| !next_is_digit(rest, n)) {
        return (TokenKind::Phone, n);
    }
    if let Some(n) = match_len(&NUMBER, rest) {
        return (TokenKind::Number, n);
    }
    if let Some(n) = match_len(&WORD, rest) {
        return (TokenKind::Word, n);
    }
    let n = rest.chars().next().map_or(0, char::len_utf8);
    (TokenKind::Symbol, n)
}

/// Splits `text` into tokens. Total: every non-whitespace character ends up
/// in exactly one token, whatever the input.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut pos = 0;
    while pos < text.len() {
        let rest = &text[pos..];
        let c = rest.chars().next().expect("pos < len");
        if c.is_whitespace() {
            pos += c.len_utf8();
            continue;
        }
        let (kind, len) = classify_at(rest);
        tokens.push(Token::new(&rest[..len], kind));
        pos += len;
    }
    tokens
}

fn is_all_caps(s: &str) -> bool {
    let mut letters = 0;
    for c in s.chars().filter(|c| c.is_alphabetic()) {
        if !c.is_uppercase() {
            return false;
        }
        letters += 1;
    }
    letters >= 2
}

/// Collapses every run of three or more identical letters to two.
/// Returns the collapsed string and whether anything changed.
fn collapse_runs(s: &str) -> (String, bool) {
    let mut out = String::with_capacity(s.len());
    let mut changed = false;
    let mut prev: Option<char> = None;
    let mut run = 0;
    for c in s.chars() {
        if Some(c) == prev {
            run += 1;
        } else {
            prev = Some(c);
            run = 1;
        }
        if run > 2 && c.is_alphabetic() {
            changed = true;
        } else {
            out.push(c);
        }
    }
    (out, changed)
}

/// Lowercases word-like tokens and collapses elongations, flagging emphasis.
///
/// Idempotent: the flag is sticky and a normalized norm has nothing left to
/// collapse.
pub fn normalize(mut token: Token) -> Token {
    if !matches!(token.kind, TokenKind::Word | TokenKind::Hashtag | TokenKind::Mention) {
        return token;
    }
    let caps = is_all_caps(&token.norm);
    let (collapsed, elongated) = collapse_runs(&token.norm.to_lowercase());
    token.norm = collapsed;
    token.emphasis |= caps || elongated;
    token
}

/// Applies the first matching suffix rule once. `None` if no rule applies.
fn stem_once(w: &str) -> Option<String> {
    let len = w.chars().count();
    let cut = |n: usize| w[..w.len() - n].to_string();
    if w.ends_with("ies") {
        return Some(format!("{}y", cut(3)));
    }
    if w.ends_with("sses") {
        return Some(cut(2));
    }
    if w.ends_with("es") && len >= 5 {
        return Some(cut(2));
    }
    if w.ends_with('s') && !w.ends_with("ss") && !w.ends_with("us") && len >= 4 {
        return Some(cut(1));
    }
    if w.ends_with("ing") && len >= 6 {
        return Some(cut(3));
    }
    if w.ends_with("ed") && len >= 5 {
        return Some(cut(2));
    }
    None
}

/// Suffix stripper over an ordered rule table (first match wins):
///
/// | suffix | replacement | condition |
/// |--------|-------------|-----------|
/// | `ies`  | `y`         |           |
/// | `sses` | `ss`        |           |
/// | `es`   |             | stem ≥ 3 chars |
/// | `s`    |             | stem ≥ 3 chars, not `ss`/`us` |
/// | `ing`  |             | stem ≥ 3 chars |
/// | `ed`   |             | stem ≥ 3 chars |
///
/// The table is reapplied until no rule matches, so `stem` is idempotent
/// (`breeding` → `breed` → `bre`).
pub fn stem(word: &str) -> String {
    let mut cur = word.to_string();
    while let Some(next) = stem_once(&cur) {
        cur = next;
    }
    cur
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopList {
    words: HashSet<String>,
}

/// Small English stop list used when none is configured.
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "from", "has", "have", "he",
    "her", "his", "i", "in", "is", "it", "its", "me", "my", "of", "on", "or", "our", "rt", "she",
    "so", "that", "the", "their", "them", "they", "this", "to", "was", "we", "were", "will",
    "with", "you", "your",
];

impl StopList {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            words: words.into_iter().map(|w| w.as_ref().to_lowercase()).collect(),
        }
    }

    pub fn english() -> Self {
        Self::new(DEFAULT_STOPWORDS)
    }

    /// One word per line; blank lines and `#` comments are skipped.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        ))
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

/// Words appended after a matching source token during filtering, e.g.
/// `danger → dangerous`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExpansionMap {
    map: BTreeMap<String, Vec<String>>,
}

impl ExpansionMap {
    pub fn insert(&mut self, source: &str, addition: &str) {
        self.map
            .entry(source.to_lowercase())
            .or_default()
            .push(addition.to_string());
    }

    /// `source<TAB>addition` per line.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut out = Self::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (src, add) = line.split_once('\t').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: "expected source<TAB>addition".into(),
            })?;
            out.insert(src.trim(), add.trim());
        }
        Ok(out)
    }

    pub fn get(&self, source: &str) -> &[String] {
        self.map.get(source).map_or(&[], Vec::as_slice)
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

fn keep_kind(kind: TokenKind) -> bool {
    !matches!(
        kind,
        TokenKind::Url | TokenKind::HtmlTag | TokenKind::Phone | TokenKind::Symbol
    )
}

/// Drops stopwords and url/html/phone/symbol tokens.
pub fn filter(doc: Document, stops: &StopList) -> Document {
    filter_with(doc, stops, &ExpansionMap::default())
}

/// [`filter`], then inserts configured expansions right after their source.
pub fn filter_with(doc: Document, stops: &StopList, expansions: &ExpansionMap) -> Document {
    let mut tokens = Vec::with_capacity(doc.tokens.len());
    for tok in doc.tokens {
        if !keep_kind(tok.kind) || stops.contains(&tok.norm) {
            continue;
        }
        let adds = expansions.get(&tok.norm);
        tokens.push(tok);
        tokens.extend(adds.iter().map(|a| Token::new(a, TokenKind::Word)));
    }
    Document {
        post_id: doc.post_id,
        tokens,
    }
}

fn stem_token(mut tok: Token) -> Token {
    if tok.kind == TokenKind::Word {
        tok.norm = stem(&tok.norm);
    }
    tok
}

/// Configured preprocessing chain.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    pub stops: StopList,
    pub expansions: ExpansionMap,
}

impl Default for Preprocessor {
    /// English stop list, no expansions.
    fn default() -> Self {
        Self::new(StopList::english(), ExpansionMap::default())
    }
}

impl Preprocessor {
    pub fn new(stops: StopList, expansions: ExpansionMap) -> Self {
        Self { stops, expansions }
    }

    pub fn process_text(&self, post_id: &str, text: &str) -> Document {
        let tokens = tokenize(text)
            .into_iter()
            .map(normalize)
            .map(stem_token)
            .collect();
        filter_with(
            Document {
                post_id: post_id.to_string(),
                tokens,
            },
            &self.stops,
            &self.expansions,
        )
    }

    pub fn process(&self, post: &RawPost) -> Document {
        self.process_text(&post.id, &post.text)
    }

    pub fn process_all(&self, posts: &[RawPost]) -> Vec<Document> {
        use rayon::prelude::*;
        posts.par_iter().map(|p| self.process(p)).collect()
    }
}

/// Tokenize, normalize, stem, filter.
pub fn preprocess(post: &RawPost, stops: &StopList) -> Document {
    Preprocessor::new(stops.clone(), ExpansionMap::default()).process(post)
}
