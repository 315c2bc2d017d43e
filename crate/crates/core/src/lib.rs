//! Retrieval and ranking of software technologies.
//!
//! A natural-language query is sent to several search engines, technology
//! names are extracted from each result list and the lists are fused with
//! Borda counting. Candidates are then ordered by a pairwise gradient-boosted
//! model trained on how often real projects select each technology.

pub mod aggregation;
pub mod cli;
pub mod dataset;
pub mod engines;
pub mod extraction;
pub mod ltr;
pub mod metrics;
pub mod popularity;
pub mod querypipe;
pub mod registry;
