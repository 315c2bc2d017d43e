//! The technology registry: records, exact-name and URL indexes, and the
//! token index used to find technology mentions in free text.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::querypipe::tokenize;

/// Names shorter than this are only matched through their URLs.
pub const MIN_TEXT_MATCH_LEN: usize = 3;

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("cannot read registry {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write registry: {0}")]
    Write(#[source] std::io::Error),
    #[error("empty match token")]
    EmptyToken,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UrlError {
    #[error("empty url")]
    Empty,
    #[error("unparsable url {0:?}")]
    Unparsable(String),
    #[error("url {0:?} has no host")]
    NoHost(String),
    #[error("url {0:?} is not absolute")]
    NotAbsolute(String),
}

/// Execution environment of a technology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub enum Context {
    #[serde(rename = "web")]
    Web,
    #[serde(rename = "node")]
    Node,
    #[default]
    #[serde(rename = "none")]
    NoContext,
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Context::Web => "web",
            Context::Node => "node",
            Context::NoContext => "none",
        })
    }
}

impl FromStr for Context {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "web" => Ok(Context::Web),
            "node" => Ok(Context::Node),
            "none" => Ok(Context::NoContext),
            other => Err(format!("unknown context {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechnologyRecord {
    pub name: String,
    pub repository_url: String,
    #[serde(default)]
    pub home_url: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub context: Context,
    #[serde(default)]
    pub features: BTreeMap<String, f64>,
}

impl TechnologyRecord {
    pub fn new(name: &str, repository_url: &str) -> Self {
        TechnologyRecord {
            name: name.to_string(),
            repository_url: repository_url.to_string(),
            home_url: String::new(),
            description: String::new(),
            context: Context::NoContext,
            features: BTreeMap::new(),
        }
    }

    pub fn with_home_url(mut self, url: &str) -> Self {
        self.home_url = url.to_string();
        self
    }

    pub fn with_context(mut self, context: Context) -> Self {
        self.context = context;
        self
    }

    pub fn with_feature(mut self, name: &str, value: f64) -> Self {
        self.features.insert(name.to_string(), value);
        self
    }

    fn validate(&mut self) -> Result<(), String> {
        self.name = canonical_name(&self.name);
        if self.name.is_empty() {
            return Err("empty name".into());
        }
        let repo = url::Url::parse(self.repository_url.trim())
            .map_err(|e| format!("repository_url {:?}: {e}", self.repository_url))?;
        if repo.host_str().is_none() {
            return Err(format!("repository_url {:?} has no host", self.repository_url));
        }
        if !self.home_url.trim().is_empty() {
            normalize_url(&self.home_url).map_err(|e| format!("home_url: {e}"))?;
        }
        if let Some((k, v)) = self.features.iter().find(|(_, v)| !v.is_finite()) {
            return Err(format!("feature {k:?} is not finite ({v})"));
        }
        Ok(())
    }
}

/// Case-folded, trimmed registry key.
pub fn canonical_name(name: &str) -> String {
    name.trim().to_lowercase()
}

/// Lowercases, strips scheme, fragment and trailing slashes.
///
/// Input without a scheme is read as an `http` URL, which makes the
/// function idempotent on its own output.
pub fn normalize_url(raw: &str) -> Result<String, UrlError> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(UrlError::Empty);
    }
    let parsed = if trimmed.contains("://") {
        url::Url::parse(trimmed)
    } else {
        url::Url::parse(&format!("http://{trimmed}"))
    }
    .map_err(|_| UrlError::Unparsable(raw.to_string()))?;
    let host = parsed.host_str().ok_or_else(|| UrlError::NoHost(raw.to_string()))?;
    if host.is_empty() {
        return Err(UrlError::NoHost(raw.to_string()));
    }
    let mut out = host.to_string();
    if let Some(port) = parsed.port() {
        out.push(':');
        out.push_str(&port.to_string());
    }
    out.push_str(parsed.path().trim_end_matches('/'));
    if let Some(q) = parsed.query() {
        out.push('?');
        out.push_str(q);
    }
    Ok(out.to_lowercase())
}

/// A lowercase multi-token technology name, used for text matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamePattern {
    pub record: usize,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skipped {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub skipped: Vec<Skipped>,
    pub warnings: Vec<String>,
}

/// Immutable collection of technologies with lookup indexes.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    records: Vec<TechnologyRecord>,
    name_index: HashMap<String, usize>,
    url_index: HashMap<String, usize>,
    token_index: HashMap<String, Vec<NamePattern>>,
}

impl PartialEq for Registry {
    fn eq(&self, other: &Self) -> bool {
        self.records == other.records
    }
}

impl Registry {
    /// Builds a registry, rejecting invalid records and later duplicates.
    pub fn from_records(records: impl IntoIterator<Item = TechnologyRecord>) -> (Registry, IngestReport) {
        let mut builder = Builder::default();
        for (i, record) in records.into_iter().enumerate() {
            builder.push(i + 1, record);
        }
        builder.finish()
    }

    /// Reads a line-delimited JSON registry file.
    pub fn ingest(path: impl AsRef<Path>) -> Result<(Registry, IngestReport), RegistryError> {
        let path = path.as_ref();
        let io_err = |source| RegistryError::Io {
            path: path.display().to_string(),
            source,
        };
        let file = std::fs::File::open(path).map_err(io_err)?;
        let mut builder = Builder::default();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io_err)?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<TechnologyRecord>(&line) {
                Ok(record) => builder.push(i + 1, record),
                Err(e) => builder.report.skipped.push(Skipped {
                    line: i + 1,
                    reason: format!("malformed record: {e}"),
                }),
            }
        }
        Ok(builder.finish())
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> Result<(), RegistryError> {
        for record in &self.records {
            let line = serde_json::to_string(record).expect("records serialize");
            writeln!(out, "{line}").map_err(RegistryError::Write)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[TechnologyRecord] {
        &self.records
    }

    pub fn get(&self, name: &str) -> Option<&TechnologyRecord> {
        self.name_index.get(&canonical_name(name)).map(|&i| &self.records[i])
    }

    /// Exact lookup on the case-folded token. No fuzzy matching.
    pub fn match_name(&self, token: &str) -> Result<Option<&TechnologyRecord>, RegistryError> {
        if token.trim().is_empty() {
            return Err(RegistryError::EmptyToken);
        }
        Ok(self.get(token))
    }

    /// Lookup by an already normalized URL.
    pub fn lookup_url(&self, normalized: &str) -> Option<&TechnologyRecord> {
        self.url_index.get(normalized).map(|&i| &self.records[i])
    }

    /// Normalized URL → record index, for substring scans.
    pub fn url_entries(&self) -> impl Iterator<Item = (&str, usize)> {
        self.url_index.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// Patterns whose first token equals `token`.
    pub fn name_patterns(&self, token: &str) -> &[NamePattern] {
        self.token_index.get(token).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.name_index.get(&canonical_name(name)).copied()
    }

    pub fn record(&self, index: usize) -> &TechnologyRecord {
        &self.records[index]
    }

    /// Sorted union of all feature names.
    pub fn feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.records.iter().flat_map(|r| r.features.keys().cloned()).collect();
        names.sort();
        names.dedup();
        names
    }
}

#[derive(Default)]
struct Builder {
    registry: Registry,
    report: IngestReport,
}

impl Builder {
    fn push(&mut self, line: usize, mut record: TechnologyRecord) {
        if let Err(reason) = record.validate() {
            self.report.skipped.push(Skipped { line, reason });
            return;
        }
        let reg = &mut self.registry;
        if reg.name_index.contains_key(&record.name) {
            self.report
                .warnings
                .push(format!("line {line}: duplicate name {:?} ignored", record.name));
            return;
        }
        let idx = reg.records.len();
        reg.name_index.insert(record.name.clone(), idx);
        for url in [&record.repository_url, &record.home_url] {
            if url.trim().is_empty() {
                continue;
            }
            let Ok(norm) = normalize_url(url) else { continue };
            if let Some(&owner) = reg.url_index.get(&norm) {
                if owner != idx {
                    self.report.warnings.push(format!(
                        "line {line}: url {norm:?} already indexed for {:?}",
                        reg.records[owner].name
                    ));
                }
                continue;
            }
            reg.url_index.insert(norm, idx);
        }
        if record.name.chars().count() >= MIN_TEXT_MATCH_LEN {
            let tokens = tokenize(&record.name);
            if let Some(first) = tokens.first() {
                reg.token_index
                    .entry(first.clone())
                    .or_default()
                    .push(NamePattern { record: idx, tokens });
            }
        }
        reg.records.push(record);
    }

    fn finish(self) -> (Registry, IngestReport) {
        (self.registry, self.report)
    }
}
