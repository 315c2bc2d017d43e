//! Query processing: tokenization, stop-word removal and per-engine expansion.
//!
//! Domain-specific engines receive the filtered terms as-is. General-purpose
//! engines additionally get an ecosystem suffix (`"javascript package"` by
//! default) so that results from unrelated domains are pushed out.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Suffix appended to general-purpose engine queries.
pub const DEFAULT_SUFFIX: &str = "javascript package";

const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords.txt");

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("empty query after filtering")]
    Empty,
    #[error("cannot read stop-word file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Engine taxonomy. Determines whether the query is expanded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EngineKind {
    #[serde(rename = "domain-specific", alias = "ds")]
    DomainSpecific,
    #[serde(rename = "general-purpose", alias = "gp")]
    GeneralPurpose,
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EngineKind::DomainSpecific => f.write_str("domain-specific"),
            EngineKind::GeneralPurpose => f.write_str("general-purpose"),
        }
    }
}

impl FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ds" | "domain-specific" => Ok(EngineKind::DomainSpecific),
            "gp" | "general-purpose" => Ok(EngineKind::GeneralPurpose),
            other => Err(format!("unknown engine kind {other:?}")),
        }
    }
}

/// A set of lowercase stop-words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopWords(HashSet<String>);

impl StopWords {
    /// The bundled English list.
    pub fn english() -> Self {
        Self::parse(BUNDLED_STOPWORDS)
    }

    pub fn empty() -> Self {
        StopWords(HashSet::new())
    }

    /// Parses one word per line; `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(|line| line.split('#').next().unwrap_or("").trim())
            .filter(|w| !w.is_empty())
            .map(str::to_lowercase)
            .collect();
        StopWords(words)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, QueryError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| QueryError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for StopWords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        StopWords(iter.into_iter().map(|w| w.into().to_lowercase()).collect())
    }
}

/// Byte span of one token inside the original text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

/// Splits on whitespace and punctuation. A hyphen is kept when it sits between
/// two alphanumeric characters, so `bwip-js` stays a single token.
pub fn token_spans(text: &str) -> Vec<Span> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    for (i, &(offset, c)) in chars.iter().enumerate() {
        let is_word = c.is_alphanumeric()
            || (c == '-' && start.is_some() && chars.get(i + 1).is_some_and(|&(_, n)| n.is_alphanumeric()));
        match (is_word, start) {
            (true, None) => start = Some(offset),
            (false, Some(s)) => {
                spans.push(Span { start: s, end: offset });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push(Span {
            start: s,
            end: text.len(),
        });
    }
    spans
}

/// Lowercased tokens of `text`.
pub fn tokenize(text: &str) -> Vec<String> {
    token_spans(text)
        .into_iter()
        .map(|s| text[s.start..s.end].to_lowercase())
        .collect()
}

/// A processed developer query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub raw: String,
    pub kind: EngineKind,
    /// Non-stop-word tokens in their original order.
    pub terms: Vec<String>,
    /// What is sent to the engine.
    pub expanded: String,
}

impl Query {
    /// Terms joined by single spaces, without any suffix. Used as the replay key.
    pub fn key(&self) -> String {
        self.terms.join(" ")
    }
}

/// Stop-words plus expansion suffix, shared by every engine of a run.
#[derive(Debug, Clone)]
pub struct QueryOptions {
    pub stopwords: StopWords,
    pub suffix: String,
}

impl Default for QueryOptions {
    fn default() -> Self {
        QueryOptions {
            stopwords: StopWords::english(),
            suffix: DEFAULT_SUFFIX.to_string(),
        }
    }
}

impl QueryOptions {
    pub fn process(&self, raw: &str, kind: EngineKind) -> Result<Query, QueryError> {
        process_query_with_suffix(raw, &self.stopwords, kind, &self.suffix)
    }
}

/// Runs stop-word removal and expansion with the default suffix.
pub fn process_query(raw: &str, stopwords: &StopWords, kind: EngineKind) -> Result<Query, QueryError> {
    process_query_with_suffix(raw, stopwords, kind, DEFAULT_SUFFIX)
}

pub fn process_query_with_suffix(
    raw: &str,
    stopwords: &StopWords,
    kind: EngineKind,
    suffix: &str,
) -> Result<Query, QueryError> {
    let terms: Vec<String> = tokenize(raw).into_iter().filter(|t| !stopwords.contains(t)).collect();
    if terms.is_empty() {
        return Err(QueryError::Empty);
    }
    let mut expanded = terms.join(" ");
    let suffix = suffix.trim();
    if kind == EngineKind::GeneralPurpose && !suffix.is_empty() {
        expanded.push(' ');
        expanded.push_str(suffix);
    }
    Ok(Query {
        raw: raw.to_string(),
        kind,
        terms,
        expanded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn general_purpose_expansion() {
        let q = process_query(
            "extract barcode from image",
            &StopWords::english(),
            EngineKind::GeneralPurpose,
        )
        .unwrap();
        assert_eq!(q.terms, ["extract", "barcode", "image"]);
        assert_eq!(q.expanded, "extract barcode image javascript package");
        assert_eq!(q.key(), "extract barcode image");
    }

    #[test]
    fn domain_specific_is_not_expanded() {
        let q = process_query("scraper", &StopWords::english(), EngineKind::DomainSpecific).unwrap();
        assert_eq!(q.expanded, "scraper");
    }

    #[test]
    fn all_stopwords_is_an_error() {
        let err = process_query("the of from", &StopWords::english(), EngineKind::GeneralPurpose).unwrap_err();
        assert_eq!(err.to_string(), "empty query after filtering");
        assert!(process_query("   ", &StopWords::english(), EngineKind::DomainSpecific).is_err());
    }

    #[test]
    fn intra_word_hyphen_is_kept() {
        assert_eq!(
            tokenize("use bwip-js, or Bar-Code!"),
            ["use", "bwip-js", "or", "bar-code"]
        );
        assert_eq!(tokenize("-leading trailing- a--b"), ["leading", "trailing", "a", "b"]);
        assert_eq!(tokenize("chart.js"), ["chart", "js"]);
    }

    #[test]
    fn stopword_file_comments() {
        let sw = StopWords::parse("# header\nthe\n  Of  # inline\n\n");
        assert_eq!(sw.len(), 2);
        assert!(sw.contains("of"));
        assert!(StopWords::english().contains("from"));
    }

    #[test]
    fn custom_suffix() {
        let q = process_query_with_suffix(
            "parse toml",
            &StopWords::empty(),
            EngineKind::GeneralPurpose,
            "rust crate",
        )
        .unwrap();
        assert_eq!(q.expanded, "parse toml rust crate");
    }

    proptest! {
        #[test]
        fn terms_are_ordered_subsequence(words in proptest::collection::vec("[a-z]{1,6}", 1..12)) {
            let raw = words.join(" ");
            let sw = StopWords::english();
            let kept: Vec<String> = words.iter().filter(|w| !sw.contains(w)).cloned().collect();
            match process_query(&raw, &sw, EngineKind::DomainSpecific) {
                Ok(q) => {
                    prop_assert_eq!(&q.terms, &kept);
                    prop_assert!(q.terms.iter().all(|t| !sw.contains(t)));
                    prop_assert!(!q.expanded.contains(DEFAULT_SUFFIX));
                }
                Err(_) => prop_assert!(kept.is_empty()),
            }
            if let Ok(q) = process_query(&raw, &sw, EngineKind::GeneralPurpose) {
                prop_assert!(q.expanded.ends_with(DEFAULT_SUFFIX));
            }
        }
    }
}
