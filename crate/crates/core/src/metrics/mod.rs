//! Evaluation metrics, the signed-rank test and tabular reports.

mod ir;
mod report;
mod stats;

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

pub use ir::{
    average_precision, average_precision_at_k, cross_query_normalize, dcg, hits_at_k, ideal_dcg, mean,
    mean_average_precision, mid_ranks, mrr, ndcg, ndcg_set, pearson, precision_at_k, recall_at_k, reciprocal_rank,
    spearman, srcc, Normalization,
};
pub use report::{
    compare_reports, comparison_tsv, evaluate_ranking, evaluate_retrieval, Comparison, RankingCase, Report, ReportRow,
    MEAN_ROW, RANKING_COLUMNS, RETRIEVAL_COLUMNS,
};
pub use stats::{wilcoxon_exact, wilcoxon_normal, wilcoxon_signed_rank, PMethod, Wilcoxon, EXACT_MAX_N};

use crate::querypipe::tokenize;
use crate::registry::canonical_name;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("k must be at least 1")]
    BadK,
    #[error("undefined recall")]
    UndefinedRecall,
    #[error("no relevant items")]
    NoRelevant,
    #[error("undefined correlation")]
    UndefinedCorrelation,
    #[error("rankings are not permutations of the same items")]
    NotAPermutation,
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no informative pairs")]
    NoInformativePairs,
    #[error("non-finite value")]
    NonFinite,
    #[error("no values to average")]
    Empty,
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error("{0}")]
    Report(String),
}

/// Normalized form used to match queries across files.
pub fn query_key(query: &str) -> String {
    tokenize(query).join(" ")
}

/// Binary relevance judgments per query.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Judgments {
    /// key → (query as first written, name → relevant)
    queries: BTreeMap<String, (String, BTreeMap<String, bool>)>,
}

#[derive(Deserialize)]
struct JudgmentLine {
    query: String,
    name: String,
    relevant: Flag,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Flag {
    Bool(bool),
    Int(u8),
}

impl Judgments {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a judgment; a later judgment of the same pair replaces it.
    pub fn insert(&mut self, query: &str, name: &str, relevant: bool) {
        self.queries
            .entry(query_key(query))
            .or_insert_with(|| (query.trim().to_string(), BTreeMap::new()))
            .1
            .insert(canonical_name(name), relevant);
    }

    /// Reads line-delimited `{query, name, relevant: 0 | 1}`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, MetricError> {
        let path = path.as_ref();
        let read_err = |message: String| MetricError::Read {
            path: path.display().to_string(),
            message,
        };
        let file = std::fs::File::open(path).map_err(|e| read_err(e.to_string()))?;
        let mut out = Judgments::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| read_err(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let j: JudgmentLine = serde_json::from_str(&line).map_err(|e| read_err(format!("line {}: {e}", i + 1)))?;
            let relevant = match j.relevant {
                Flag::Bool(b) => b,
                Flag::Int(0) => false,
                Flag::Int(1) => true,
                Flag::Int(v) => return Err(read_err(format!("line {}: relevance must be 0 or 1, got {v}", i + 1))),
            };
            out.insert(&j.query, &j.name, relevant);
        }
        Ok(out)
    }

    /// Query keys in sorted order.
    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.queries.keys().map(String::as_str)
    }

    /// The query text as first written in the judgments.
    pub fn display_query(&self, key: &str) -> Option<&str> {
        self.queries.get(key).map(|(q, _)| q.as_str())
    }

    pub fn is_relevant(&self, query: &str, name: &str) -> bool {
        self.queries
            .get(&query_key(query))
            .and_then(|(_, m)| m.get(&canonical_name(name)))
            .copied()
            .unwrap_or(false)
    }

    pub fn total_relevant(&self, query: &str) -> usize {
        self.queries
            .get(&query_key(query))
            .map_or(0, |(_, m)| m.values().filter(|&&r| r).count())
    }

    /// Relevance flags of `names` in order; unjudged names are irrelevant.
    pub fn flags<S: AsRef<str>>(&self, query: &str, names: &[S]) -> Vec<bool> {
        names.iter().map(|n| self.is_relevant(query, n.as_ref())).collect()
    }
}
