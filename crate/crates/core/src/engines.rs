//! Search-engine adapters.
//!
//! Every adapter implements [`SearchEngine`]. [`ReplayEngine`] serves recorded
//! results from fixture files and is what the tests and the shipped data use.
//! [`HttpEngine`] hits a live endpoint described by a [`LiveEngineConfig`].

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::querypipe::{EngineKind, Query, QueryError, QueryOptions};

/// Default cap on the number of documents taken from one engine.
pub const DEFAULT_MAX_RESULTS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("engine {engine}: {message}")]
pub struct EngineError {
    pub engine: String,
    pub message: String,
}

impl EngineError {
    pub fn new(engine: &str, message: impl Into<String>) -> Self {
        EngineError {
            engine: engine.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("no engines configured")]
    NoEngines,
    #[error("duplicate engine id {0:?}")]
    DuplicateEngine(String),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("no results from any engine")]
    NoResults { failures: BTreeMap<String, EngineError> },
    #[error("cannot load {path}: {message}")]
    Load { path: String, message: String },
}

/// A document as returned by an adapter, before positions are assigned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub url: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub position: usize,
    pub url: String,
    pub title: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineDescriptor {
    pub id: String,
    pub kind: EngineKind,
    pub max_results: usize,
}

impl EngineDescriptor {
    pub fn new(id: &str, kind: EngineKind) -> Self {
        EngineDescriptor {
            id: id.to_string(),
            kind,
            max_results: DEFAULT_MAX_RESULTS,
        }
    }
}

pub trait SearchEngine: Send + Sync {
    fn descriptor(&self) -> &EngineDescriptor;

    /// Documents in engine order. May return more than `max_results`.
    fn fetch(&self, query: &Query) -> Result<Vec<RawDocument>, EngineError>;
}

/// Runs one engine and enforces the position and truncation contract.
pub fn search(engine: &dyn SearchEngine, query: &Query) -> Result<Vec<ResultDocument>, EngineError> {
    let desc = engine.descriptor();
    let docs = engine.fetch(query)?;
    Ok(docs
        .into_iter()
        .take(desc.max_results.max(1))
        .enumerate()
        .map(|(i, d)| ResultDocument {
            position: i + 1,
            url: d.url,
            title: d.title,
            body: d.body,
        })
        .collect())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchOutcome {
    pub results: BTreeMap<String, Vec<ResultDocument>>,
    pub failures: BTreeMap<String, EngineError>,
    /// The query form each engine received, keyed by engine id.
    pub queries: BTreeMap<String, Query>,
}

type EngineResult = Result<Vec<ResultDocument>, EngineError>;

/// Fans the raw query out to every engine on up to `jobs` worker threads.
///
/// The outcome does not depend on completion order or on `jobs`.
pub fn search_all(
    engines: &[Arc<dyn SearchEngine>],
    raw_query: &str,
    options: &QueryOptions,
    jobs: usize,
) -> Result<SearchOutcome, SearchError> {
    if engines.is_empty() {
        return Err(SearchError::NoEngines);
    }
    let mut seen = std::collections::BTreeSet::new();
    for e in engines {
        if !seen.insert(e.descriptor().id.clone()) {
            return Err(SearchError::DuplicateEngine(e.descriptor().id.clone()));
        }
    }
    let queries: Vec<Query> = engines
        .iter()
        .map(|e| options.process(raw_query, e.descriptor().kind))
        .collect::<Result<_, _>>()?;

    let slots: Mutex<Vec<Option<EngineResult>>> = Mutex::new(vec![None; engines.len()]);
    let next = AtomicUsize::new(0);
    let workers = jobs.clamp(1, engines.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= engines.len() {
                    break;
                }
                let result = search(engines[i].as_ref(), &queries[i]);
                slots.lock().expect("no worker panicked")[i] = Some(result);
            });
        }
    });

    let mut outcome = SearchOutcome::default();
    let slots = slots.into_inner().expect("no worker panicked");
    for ((engine, query), slot) in engines.iter().zip(queries).zip(slots) {
        let id = engine.descriptor().id.clone();
        match slot.expect("every engine was dispatched") {
            Ok(docs) => {
                outcome.results.insert(id.clone(), docs);
            }
            Err(e) => {
                outcome.failures.insert(id.clone(), e);
            }
        }
        outcome.queries.insert(id, query);
    }
    if outcome.results.is_empty() {
        return Err(SearchError::NoResults {
            failures: outcome.failures,
        });
    }
    Ok(outcome)
}

/// One recorded engine: `<fixtures>/<engine id>.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureFile {
    pub engine: String,
    pub kind: EngineKind,
    #[serde(default = "default_max_results")]
    pub max_results: usize,
    /// Query key (filtered terms joined by spaces) → documents in engine order.
    pub results: BTreeMap<String, Vec<RawDocument>>,
}

fn default_max_results() -> usize {
    DEFAULT_MAX_RESULTS
}

/// Serves fixture results keyed by [`Query::key`].
#[derive(Debug, Clone)]
pub struct ReplayEngine {
    descriptor: EngineDescriptor,
    results: BTreeMap<String, Vec<RawDocument>>,
}

impl ReplayEngine {
    pub fn new(descriptor: EngineDescriptor, results: BTreeMap<String, Vec<RawDocument>>) -> Self {
        ReplayEngine { descriptor, results }
    }

    pub fn from_fixture(fixture: FixtureFile) -> Self {
        let descriptor = EngineDescriptor {
            id: fixture.engine,
            kind: fixture.kind,
            max_results: fixture.max_results.max(1),
        };
        ReplayEngine::new(descriptor, fixture.results)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SearchError> {
        let path = path.as_ref();
        let load_err = |message: String| SearchError::Load {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| load_err(e.to_string()))?;
        let fixture: FixtureFile = serde_json::from_str(&text).map_err(|e| load_err(e.to_string()))?;
        Ok(Self::from_fixture(fixture))
    }

    /// Loads `<dir>/<id>.json` for every requested id.
    pub fn load_dir(dir: impl AsRef<Path>, ids: &[String]) -> Result<Vec<Self>, SearchError> {
        ids.iter()
            .map(|id| {
                let engine = Self::load(dir.as_ref().join(format!("{id}.json")))?;
                if engine.descriptor.id != *id {
                    return Err(SearchError::Load {
                        path: dir.as_ref().join(format!("{id}.json")).display().to_string(),
                        message: format!("fixture declares engine {:?}", engine.descriptor.id),
                    });
                }
                Ok(engine)
            })
            .collect()
    }

    pub fn set_max_results(&mut self, max_results: usize) {
        self.descriptor.max_results = max_results.max(1);
    }
}

impl SearchEngine for ReplayEngine {
    fn descriptor(&self) -> &EngineDescriptor {
        &self.descriptor
    }

    fn fetch(&self, query: &Query) -> Result<Vec<RawDocument>, EngineError> {
        let key = query.key();
        self.results
            .get(&key)
            .cloned()
            .ok_or_else(|| EngineError::new(&self.descriptor.id, format!("no fixture for query {key:?}")))
    }
}

/// Live adapter configuration, one entry per engine.
///
/// `endpoint` is a URL template: `{query}` is replaced by the URL-encoded
/// query, `{key}` by the credential read from `credential_env`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiveEngineConfig {
    pub id: String,
    pub kind: EngineKind,
    pub endpoint: String,
    #[serde(default)]
    pub credential_env: Option<String>,
    /// Header that carries the credential, if it is not part of the URL.
    #[serde(default)]
    pub credential_header: Option<String>,
    #[serde(default = "default_max_results")]
    pub max_results: usize,
    /// Minimum spacing between two requests to this engine.
    #[serde(default)]
    pub min_interval_ms: u64,
    /// JSON pointer to the result array in the response.
    #[serde(default = "default_results_pointer")]
    pub results_pointer: String,
    #[serde(default = "default_url_field")]
    pub url_field: String,
    #[serde(default = "default_title_field")]
    pub title_field: String,
    #[serde(default = "default_body_field")]
    pub body_field: String,
}

fn default_results_pointer() -> String {
    "/results".into()
}
fn default_url_field() -> String {
    "url".into()
}
fn default_title_field() -> String {
    "title".into()
}
fn default_body_field() -> String {
    "body".into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiveConfigFile {
    pub engines: Vec<LiveEngineConfig>,
}

impl LiveConfigFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SearchError> {
        let path = path.as_ref();
        let load_err = |message: String| SearchError::Load {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| load_err(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| load_err(e.to_string()))
    }
}

/// Blocking HTTP GET used by [`HttpEngine`].
pub trait Transport: Send + Sync {
    fn get(&self, url: &str, headers: &[(String, String)]) -> Result<String, String>;
}

pub struct HttpEngine<T: Transport> {
    descriptor: EngineDescriptor,
    config: LiveEngineConfig,
    credential: Option<String>,
    transport: T,
    last_request: Mutex<Option<Instant>>,
}

impl<T: Transport> HttpEngine<T> {
    /// Reads the credential from the environment now, so a missing key fails early.
    pub fn new(config: LiveEngineConfig, transport: T) -> Result<Self, EngineError> {
        let credential = match &config.credential_env {
            Some(var) => Some(
                std::env::var(var)
                    .map_err(|_| EngineError::new(&config.id, format!("credential variable {var} is not set")))?,
            ),
            None => None,
        };
        let descriptor = EngineDescriptor {
            id: config.id.clone(),
            kind: config.kind,
            max_results: config.max_results.max(1),
        };
        Ok(HttpEngine {
            descriptor,
            config,
            credential,
            transport,
            last_request: Mutex::new(None),
        })
    }

    pub fn request_url(&self, query: &Query) -> String {
        let encoded: String = url::form_urlencoded::byte_serialize(query.expanded.as_bytes()).collect();
        let mut u = self.config.endpoint.replace("{query}", &encoded);
        if let Some(key) = &self.credential {
            u = u.replace("{key}", key);
        }
        u
    }

    fn throttle(&self) {
        let min = Duration::from_millis(self.config.min_interval_ms);
        let mut last = self.last_request.lock().expect("throttle lock");
        if let Some(prev) = *last {
            let elapsed = prev.elapsed();
            if elapsed < min {
                std::thread::sleep(min - elapsed);
            }
        }
        *last = Some(Instant::now());
    }

    fn parse_response(&self, body: &str) -> Result<Vec<RawDocument>, EngineError> {
        let err = |m: String| EngineError::new(&self.config.id, m);
        let value: serde_json::Value = serde_json::from_str(body).map_err(|e| err(format!("bad response: {e}")))?;
        let items = value
            .pointer(&self.config.results_pointer)
            .and_then(|v| v.as_array())
            .ok_or_else(|| err(format!("no array at {}", self.config.results_pointer)))?;
        let field = |item: &serde_json::Value, name: &str| {
            item.get(name).and_then(|v| v.as_str()).unwrap_or_default().to_string()
        };
        Ok(items
            .iter()
            .map(|item| RawDocument {
                url: field(item, &self.config.url_field),
                title: field(item, &self.config.title_field),
                body: field(item, &self.config.body_field),
            })
            .filter(|d| !d.url.is_empty())
            .collect())
    }
}

impl<T: Transport> SearchEngine for HttpEngine<T> {
    fn descriptor(&self) -> &EngineDescriptor {
        &self.descriptor
    }

    fn fetch(&self, query: &Query) -> Result<Vec<RawDocument>, EngineError> {
        self.throttle();
        let mut headers = Vec::new();
        if let (Some(h), Some(k)) = (&self.config.credential_header, &self.credential) {
            headers.push((h.clone(), k.clone()));
        }
        let body = self
            .transport
            .get(&self.request_url(query), &headers)
            .map_err(|m| EngineError::new(&self.config.id, m))?;
        self.parse_response(&body)
    }
}

#[cfg(feature = "live")]
pub use live::UreqTransport;

#[cfg(feature = "live")]
mod live {
    use super::Transport;

    #[derive(Debug, Default, Clone)]
    pub struct UreqTransport;

    impl Transport for UreqTransport {
        fn get(&self, url: &str, headers: &[(String, String)]) -> Result<String, String> {
            let mut req = ureq::get(url);
            for (k, v) in headers {
                req = req.header(k.as_str(), v.as_str());
            }
            let mut resp = req.call().map_err(|e| e.to_string())?;
            resp.body_mut().read_to_string().map_err(|e| e.to_string())
        }
    }
}
