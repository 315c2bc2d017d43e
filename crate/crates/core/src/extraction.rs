//! Technology extraction from engine results.
//!
//! Domain-specific results map one-to-one onto registry technologies.
//! General-purpose results are scanned for technology names and addresses;
//! each technology enters the list at its first mention.

use std::cmp::Reverse;
use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engines::ResultDocument;
use crate::querypipe::{token_spans, EngineKind, Span};
use crate::registry::{normalize_url, Registry};

#[derive(Debug, Error)]
pub enum ListError {
    #[error("cannot read ranked list {path}: {message}")]
    Read { path: String, message: String },
    #[error("cannot write ranked list: {0}")]
    Write(#[source] std::io::Error),
    #[error("duplicate name {0:?} in ranked list")]
    Duplicate(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub name: String,
    pub score: f64,
}

/// An ordered list of technology names with per-item scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
    pub items: Vec<RankedItem>,
}

impl RankedList {
    pub fn new(source: &str) -> Self {
        RankedList {
            source: source.to_string(),
            query: None,
            items: Vec::new(),
        }
    }

    /// Builds a list with positional scores n − p + 1.
    pub fn from_names<S: AsRef<str>>(source: &str, names: &[S]) -> Self {
        let n = names.len();
        RankedList {
            source: source.to_string(),
            query: None,
            items: names
                .iter()
                .enumerate()
                .map(|(i, name)| RankedItem {
                    name: name.as_ref().to_string(),
                    score: (n - i) as f64,
                })
                .collect(),
        }
    }

    pub fn with_query(mut self, query: &str) -> Self {
        self.query = Some(query.to_string());
        self
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.items.iter().map(|i| i.name.as_str()).collect()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.items.iter().position(|i| i.name == name).map(|p| p + 1)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ListError> {
        let path = path.as_ref();
        let read_err = |message: String| ListError::Read {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| read_err(e.to_string()))?;
        let list: RankedList = serde_json::from_str(&text).map_err(|e| read_err(e.to_string()))?;
        let mut seen = HashSet::new();
        for item in &list.items {
            if !seen.insert(item.name.as_str()) {
                return Err(ListError::Duplicate(item.name.clone()));
            }
        }
        Ok(list)
    }

    pub fn write(&self, mut out: impl Write) -> Result<(), ListError> {
        let text = serde_json::to_string_pretty(self).expect("ranked lists serialize");
        writeln!(out, "{text}").map_err(ListError::Write)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ListError> {
        let file = std::fs::File::create(path).map_err(ListError::Write)?;
        self.write(std::io::BufWriter::new(file))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub list: RankedList,
    pub warnings: Vec<String>,
}

/// Maps one engine's documents to an ordered technology list.
pub fn extract_from_documents(
    registry: &Registry,
    docs: &[ResultDocument],
    kind: EngineKind,
    source: &str,
) -> Extraction {
    let mut docs: Vec<&ResultDocument> = docs.iter().collect();
    docs.sort_by_key(|d| d.position);
    let mut order: Vec<usize> = Vec::new();
    let mut seen = HashSet::new();
    let mut warnings = Vec::new();
    for doc in docs {
        match kind {
            EngineKind::DomainSpecific => match match_ds_document(registry, doc) {
                Some(idx) => {
                    if seen.insert(idx) {
                        order.push(idx);
                    }
                }
                None => warnings.push(format!(
                    "{source}: result {} ({}) matches no registry technology",
                    doc.position, doc.url
                )),
            },
            EngineKind::GeneralPurpose => {
                for text in [&doc.title, &doc.body] {
                    for idx in mentions(registry, text) {
                        if seen.insert(idx) {
                            order.push(idx);
                        }
                    }
                }
            }
        }
    }
    let names: Vec<&str> = order.iter().map(|&i| registry.record(i).name.as_str()).collect();
    Extraction {
        list: RankedList::from_names(source, &names),
        warnings,
    }
}

fn match_ds_document(registry: &Registry, doc: &ResultDocument) -> Option<usize> {
    let by_url = normalize_url(&doc.url)
        .ok()
        .and_then(|u| registry.lookup_url(&u).map(|r| (u, r)));
    if let Some((u, r)) = &by_url {
        if normalize_url(&r.repository_url).as_deref() == Ok(u.as_str()) {
            return index_of(registry, &r.name);
        }
    }
    let title = doc.title.trim();
    if !title.is_empty() {
        if let Ok(Some(r)) = registry.match_name(title) {
            return index_of(registry, &r.name);
        }
    }
    by_url.and_then(|(_, r)| index_of(registry, &r.name))
}

fn index_of(registry: &Registry, name: &str) -> Option<usize> {
    registry.index_of(name)
}

/// Record indexes mentioned in `text`, in order of first appearance.
///
/// Duplicates are possible; the caller keeps the first occurrence.
pub fn mentions(registry: &Registry, text: &str) -> Vec<usize> {
    // (offset, match length, record)
    let mut found: Vec<(usize, usize, usize)> = Vec::new();

    let url_chunks = url_chunks(text);
    for (offset, chunk) in &url_chunks {
        let Ok(norm) = normalize_url(chunk) else { continue };
        for (url, idx) in registry.url_entries() {
            if norm.contains(url) {
                found.push((*offset, url.len(), idx));
            }
        }
    }

    let in_url = |span: &Span| {
        url_chunks
            .iter()
            .any(|(o, c)| span.start >= *o && span.start < o + c.len())
    };
    let spans: Vec<Span> = token_spans(text).into_iter().filter(|s| !in_url(s)).collect();
    let tokens: Vec<String> = spans.iter().map(|s| text[s.start..s.end].to_lowercase()).collect();
    for (i, tok) in tokens.iter().enumerate() {
        for pattern in registry.name_patterns(tok) {
            let end = i + pattern.tokens.len();
            if end > tokens.len() || tokens[i..end] != pattern.tokens[..] {
                continue;
            }
            // Separators inside a multi-token name must match too.
            let slice = text[spans[i].start..spans[end - 1].end].to_lowercase();
            let name = &registry.record(pattern.record).name;
            if slice == name.trim_matches(|c: char| !c.is_alphanumeric()) {
                found.push((spans[i].start, slice.len(), pattern.record));
            }
        }
    }

    found.sort_by_key(|&(offset, len, idx)| (offset, Reverse(len), idx));
    found.into_iter().map(|(_, _, idx)| idx).collect()
}

/// Whitespace-separated chunks that look like URLs, with surrounding
/// punctuation trimmed. Offsets are byte positions in `text`.
fn url_chunks(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut offset = 0;
    for chunk in text.split_inclusive(char::is_whitespace) {
        let start = offset;
        offset += chunk.len();
        let lead = chunk.len() - chunk.trim_start_matches(['(', '<', '"', '\'', '[']).len();
        let trimmed = chunk
            .trim()
            .trim_start_matches(['(', '<', '"', '\'', '['])
            .trim_end_matches(['.', ',', ';', ':', '!', '?', ')', '>', '"', '\'', ']']);
        let lower = trimmed.to_ascii_lowercase();
        if lower.contains("://") || lower.starts_with("www.") {
            out.push((start + lead, trimmed));
        }
    }
    out
}
