//! Turning pairwise preferences into a total order.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::{filter_by_context, LtrError, RankingModel, Scenario};
use crate::dataset::{feature_vector, scale_features};
use crate::extraction::{RankedItem, RankedList};
use crate::registry::TechnologyRecord;

pub const RANKED_SOURCE: &str = "ranked";

/// Ranks candidates by Copeland wins over every ordered pair.
///
/// Candidates outside the scenario are dropped and the rest are scaled as one
/// group. Ties break by the sum of `predict_pair(c, ·)`, then by position in
/// `retrieval_order`, then by name; the input order of `candidates` never
/// matters.
pub fn rank_candidates(
    model: &RankingModel,
    candidates: &[TechnologyRecord],
    scenario: Scenario,
    retrieval_order: &[String],
    jobs: usize,
) -> Result<RankedList, LtrError> {
    let kept = filter_by_context(candidates, scenario);
    if kept.is_empty() {
        return Err(LtrError::NoCandidates(scenario));
    }
    let mut seen = BTreeSet::new();
    for c in &kept {
        if !seen.insert(c.name.as_str()) {
            return Err(LtrError::DuplicateCandidate(c.name.clone()));
        }
    }
    let raw: Vec<Vec<f64>> = kept.iter().map(|c| feature_vector(c, &model.feature_names).0).collect();
    let scaled = scale_features(&raw, model.scaling)?;
    let prefs = preference_matrix(model, &scaled, jobs)?;
    let names: Vec<&str> = kept.iter().map(|c| c.name.as_str()).collect();
    Ok(copeland(&names, &prefs, retrieval_order))
}

/// `m[i][j] = predict_pair(i, j)`; the diagonal is unused.
fn preference_matrix(model: &RankingModel, scaled: &[Vec<f64>], jobs: usize) -> Result<Vec<Vec<f64>>, LtrError> {
    let n = scaled.len();
    let rows: Mutex<BTreeMap<usize, Result<Vec<f64>, LtrError>>> = Mutex::new(BTreeMap::new());
    let next = AtomicUsize::new(0);
    let row_of = |i: usize| -> Result<Vec<f64>, LtrError> {
        (0..n)
            .map(|j| {
                if i == j {
                    Ok(0.0)
                } else {
                    model.predict_pair(&scaled[i], &scaled[j])
                }
            })
            .collect()
    };
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, n) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let row = row_of(i);
                rows.lock().unwrap_or_else(|e| e.into_inner()).insert(i, row);
            });
        }
    });
    rows.into_inner()
        .unwrap_or_else(|e| e.into_inner())
        .into_values()
        .collect()
}

/// Orders `names` given the preference matrix, independent of input order.
pub(crate) fn copeland(names: &[&str], prefs: &[Vec<f64>], retrieval_order: &[String]) -> RankedList {
    let n = names.len();
    let position: BTreeMap<&str, usize> = retrieval_order
        .iter()
        .enumerate()
        .rev()
        .map(|(i, name)| (name.as_str(), i))
        .collect();
    let mut rows: Vec<(usize, f64, usize)> = (0..n)
        .map(|i| {
            let wins = (0..n).filter(|&j| j != i && prefs[i][j] > prefs[j][i]).count();
            // Summed in name order so the tie-break value is input-order free.
            let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            others.sort_by_key(|&j| names[j]);
            let total: f64 = others.iter().map(|&j| prefs[i][j]).sum();
            (wins, total, i)
        })
        .collect();
    rows.sort_by(|a, b| {
        b.0.cmp(&a.0)
            .then_with(|| b.1.total_cmp(&a.1))
            .then_with(|| {
                let pa = position.get(names[a.2]).copied().unwrap_or(usize::MAX);
                let pb = position.get(names[b.2]).copied().unwrap_or(usize::MAX);
                pa.cmp(&pb)
            })
            .then_with(|| names[a.2].cmp(names[b.2]))
    });
    let mut list = RankedList::new(RANKED_SOURCE);
    list.items = rows
        .into_iter()
        .map(|(wins, _, i)| RankedItem {
            name: names[i].to_string(),
            score: wins as f64,
        })
        .collect();
    list
}
