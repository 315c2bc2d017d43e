//! Pairwise learning to rank.
//!
//! Regression trees are boosted on pair instances with squared loss, so the
//! model output for `concat(a, b)` estimates the probability that `a` should
//! rank above `b`. Candidates are then ordered by a round-robin tournament.

mod model;
mod rank;
mod tree;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::DatasetError;
use crate::registry::{Context, TechnologyRecord};

pub use model::{
    train, train_instances, train_with_history, Hyperparams, RankingModel, MAX_DEPTH_LIMIT, MODEL_VERSION,
};
pub use rank::{rank_candidates, RANKED_SOURCE};
pub use tree::{fit_tree, Node, RegressionTree, TreeParams};

#[derive(Debug, Error)]
pub enum LtrError {
    #[error("empty input")]
    EmptyInput,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite input value")]
    NonFinite,
    #[error("degenerate training set: all labels are {0}")]
    DegenerateTrainingSet(u8),
    #[error("invalid hyperparameter: {0}")]
    Hyperparams(String),
    #[error("no candidates for scenario {0}")]
    NoCandidates(Scenario),
    #[error("candidate {0:?} is listed twice")]
    DuplicateCandidate(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("cannot read model {path}: {message}")]
    Read { path: String, message: String },
    #[error("cannot write model: {0}")]
    Write(String),
    #[error("unsupported model version {0}")]
    Version(u32),
}

/// Which application contexts a developer accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    #[default]
    All,
    Web,
    Node,
    OnlyWeb,
    OnlyNode,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::All,
        Scenario::Web,
        Scenario::Node,
        Scenario::OnlyWeb,
        Scenario::OnlyNode,
    ];

    pub fn allows(self, context: Context) -> bool {
        match self {
            Scenario::All => true,
            Scenario::Web => matches!(context, Context::Web | Context::NoContext),
            Scenario::Node => matches!(context, Context::Node | Context::NoContext),
            Scenario::OnlyWeb => context == Context::Web,
            Scenario::OnlyNode => context == Context::Node,
        }
    }

    pub fn allowed(self) -> BTreeSet<Context> {
        [Context::Web, Context::Node, Context::NoContext]
            .into_iter()
            .filter(|&c| self.allows(c))
            .collect()
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::All => "all",
            Scenario::Web => "web",
            Scenario::Node => "node",
            Scenario::OnlyWeb => "onlyweb",
            Scenario::OnlyNode => "onlynode",
        })
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown scenario {s:?} (expected all, web, node, onlyweb or onlynode)"))
    }
}

/// Keeps the candidates whose context the scenario allows, in input order.
pub fn filter_by_context(candidates: &[TechnologyRecord], scenario: Scenario) -> Vec<&TechnologyRecord> {
    candidates.iter().filter(|c| scenario.allows(c.context)).collect()
}
