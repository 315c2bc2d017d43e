//! Ranking metrics over binary relevance.
//!
//! A ranking is given as its relevance flags in rank order; `total_relevant`
//! is the number of relevant items known for the query, retrieved or not.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use super::MetricError;

fn check_k(k: usize) -> Result<(), MetricError> {
    if k == 0 {
        Err(MetricError::BadK)
    } else {
        Ok(())
    }
}

fn discount(position: usize) -> f64 {
    ((position + 1) as f64).log2()
}

/// Relevant items among the first `k`.
pub fn hits_at_k(rels: &[bool], k: usize) -> Result<usize, MetricError> {
    check_k(k)?;
    Ok(rels.iter().take(k).filter(|&&r| r).count())
}

/// `hits@k / k`; a ranking shorter than `k` counts its gaps as misses.
pub fn precision_at_k(rels: &[bool], k: usize) -> Result<f64, MetricError> {
    Ok(hits_at_k(rels, k)? as f64 / k as f64)
}

pub fn recall_at_k(rels: &[bool], total_relevant: usize, k: usize) -> Result<f64, MetricError> {
    check_k(k)?;
    if total_relevant == 0 {
        return Err(MetricError::UndefinedRecall);
    }
    Ok(hits_at_k(rels, k)? as f64 / total_relevant as f64)
}

/// Sum of `P@p` over relevant positions `p`, divided by `total_relevant`.
pub fn average_precision(rels: &[bool], total_relevant: usize) -> Result<f64, MetricError> {
    if total_relevant == 0 {
        return Err(MetricError::NoRelevant);
    }
    Ok(precision_sum(rels) / total_relevant as f64)
}

/// Average precision of the top `k`, normalized by the best attainable
/// value `min(k, total_relevant)` so a perfect top-k scores 1.
pub fn average_precision_at_k(rels: &[bool], total_relevant: usize, k: usize) -> Result<f64, MetricError> {
    check_k(k)?;
    if total_relevant == 0 {
        return Err(MetricError::NoRelevant);
    }
    let top = &rels[..rels.len().min(k)];
    Ok(precision_sum(top) / k.min(total_relevant) as f64)
}

fn precision_sum(rels: &[bool]) -> f64 {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, &r) in rels.iter().enumerate() {
        if r {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum
}

/// Arithmetic mean; an empty slice is an error.
pub fn mean(values: &[f64]) -> Result<f64, MetricError> {
    if values.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

pub fn mean_average_precision(aps: &[f64]) -> Result<f64, MetricError> {
    mean(aps)
}

/// `Σ_{i ≤ depth} rel_i / log2(i + 1)`.
pub fn dcg(rels: &[bool], depth: usize) -> Result<f64, MetricError> {
    check_k(depth)?;
    Ok(rels
        .iter()
        .take(depth)
        .enumerate()
        .filter(|(_, &r)| r)
        .map(|(i, _)| 1.0 / discount(i + 1))
        .sum())
}

/// DCG of a ranking that puts every relevant item first.
pub fn ideal_dcg(total_relevant: usize, depth: usize) -> Result<f64, MetricError> {
    check_k(depth)?;
    Ok((1..=total_relevant.min(depth)).map(|p| 1.0 / discount(p)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Divide by the ideal DCG of the same query.
    #[default]
    PerQueryIdeal,
    /// Divide by the largest DCG over the evaluated query set.
    CrossQueryMax,
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::PerQueryIdeal => "ideal",
            Normalization::CrossQueryMax => "cross-query-max",
        })
    }
}

impl FromStr for Normalization {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ideal" | "per-query-ideal" => Ok(Normalization::PerQueryIdeal),
            "cross-query-max" | "max" => Ok(Normalization::CrossQueryMax),
            other => Err(format!(
                "unknown nDCG normalization {other:?} (expected ideal or cross-query-max)"
            )),
        }
    }
}

/// nDCG against the query's own ideal ranking; 0 when nothing is relevant.
pub fn ndcg(rels: &[bool], total_relevant: usize, depth: usize) -> Result<f64, MetricError> {
    let ideal = ideal_dcg(total_relevant, depth)?;
    if ideal == 0.0 {
        return Ok(0.0);
    }
    Ok(dcg(rels, depth)? / ideal)
}

/// nDCG for a set of queries under either normalization.
///
/// `queries` holds `(rels, total_relevant)` per query.
pub fn ndcg_set(
    queries: &[(Vec<bool>, usize)],
    depth: usize,
    normalization: Normalization,
) -> Result<Vec<f64>, MetricError> {
    match normalization {
        Normalization::PerQueryIdeal => queries.iter().map(|(r, t)| ndcg(r, *t, depth)).collect(),
        Normalization::CrossQueryMax => {
            let dcgs = queries
                .iter()
                .map(|(r, _)| dcg(r, depth))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(cross_query_normalize(&dcgs))
        }
    }
}

/// Divides every DCG by the largest one; all zeros stay zero.
pub fn cross_query_normalize(dcgs: &[f64]) -> Vec<f64> {
    let max = dcgs.iter().copied().fold(0.0, f64::max);
    dcgs.iter().map(|&d| if max > 0.0 { d / max } else { 0.0 }).collect()
}

/// `1 / position` of the first relevant item, 0 when none is ranked.
pub fn reciprocal_rank(rels: &[bool]) -> f64 {
    rels.iter().position(|&r| r).map_or(0.0, |i| 1.0 / (i + 1) as f64)
}

/// Mean reciprocal rank over queries.
pub fn mrr<R: AsRef<[bool]>>(queries: &[R]) -> Result<f64, MetricError> {
    let rrs: Vec<f64> = queries.iter().map(|r| reciprocal_rank(r.as_ref())).collect();
    mean(&rrs)
}

/// 1-based mid-ranks; tied values share the mean of the ranks they span.
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    if x.len() != y.len() {
        return Err(MetricError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(MetricError::UndefinedCorrelation);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricError::UndefinedCorrelation);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman's rho of two paired samples: Pearson over mid-ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    pearson(&mid_ranks(x), &mid_ranks(y))
}

/// Spearman's rho between two orderings of the same items.
///
/// Positions of a permutation never tie, so `1 − 6Σd²/(n(n²−1))` is exact.
pub fn srcc<T: Eq + Hash>(a: &[T], b: &[T]) -> Result<f64, MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch(a.len(), b.len()));
    }
    let pos_b: HashMap<&T, usize> = b.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let distinct_a: HashSet<&T> = a.iter().collect();
    if pos_b.len() != b.len() || distinct_a.len() != a.len() {
        return Err(MetricError::NotAPermutation);
    }
    let n = a.len();
    if n < 2 {
        return Err(MetricError::UndefinedCorrelation);
    }
    let mut d2 = 0usize;
    for (i, item) in a.iter().enumerate() {
        let j = *pos_b.get(item).ok_or(MetricError::NotAPermutation)?;
        d2 += i.abs_diff(j).pow(2);
    }
    Ok(1.0 - 6.0 * d2 as f64 / (n * (n * n - 1)) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    const T: bool = true;
    const F: bool = false;

    fn close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn hits() {
        assert_eq!(hits_at_k(&[T, F, T], 3).unwrap(), 2);
        assert_eq!(hits_at_k(&[T, F, T], 1).unwrap(), 1);
        assert_eq!(hits_at_k(&[], 5).unwrap(), 0);
        assert!(matches!(hits_at_k(&[T], 0), Err(MetricError::BadK)));
    }

    #[test]
    fn precision_and_recall() {
        close(precision_at_k(&[T, F, T, F], 4).unwrap(), 0.5);
        close(recall_at_k(&[T, F, T, F], 2, 4).unwrap(), 1.0);
        close(precision_at_k(&[T, T, T], 3).unwrap(), 1.0);
        close(precision_at_k(&[F, F, F], 3).unwrap(), 0.0);
        close(precision_at_k(&[T], 5).unwrap(), 0.2);
        let err = recall_at_k(&[T], 0, 1).unwrap_err();
        assert_eq!(err.to_string(), "undefined recall");
    }

    #[test]
    fn average_precision_examples() {
        close(average_precision(&[T, F, T], 2).unwrap(), (1.0 + 2.0 / 3.0) / 2.0);
        close(average_precision(&[T, T, T, F], 3).unwrap(), 1.0);
        close(mean_average_precision(&[1.0, 0.5]).unwrap(), 0.75);
        assert!(average_precision(&[F], 0).is_err());
        // Relevant item not retrieved lowers AP.
        close(average_precision(&[T], 2).unwrap(), 0.5);
        close(
            average_precision_at_k(&[T, F, T, T], 10, 3).unwrap(),
            (1.0 + 2.0 / 3.0) / 3.0,
        );
        close(average_precision_at_k(&[T, T], 2, 5).unwrap(), 1.0);
    }

    #[test]
    fn dcg_examples() {
        close(dcg(&[T, F, T], 3).unwrap(), 1.5);
        close(ndcg(&[T, T, F], 2, 3).unwrap(), 1.0);
        close(ndcg(&[F, F], 0, 2).unwrap(), 0.0);
        assert_eq!(cross_query_normalize(&[2.0, 1.0]), [1.0, 0.5]);
        assert_eq!(cross_query_normalize(&[0.0, 0.0]), [0.0, 0.0]);
        let set = ndcg_set(&[(vec![T], 1), (vec![F, T], 1)], 2, Normalization::CrossQueryMax).unwrap();
        close(set[0], 1.0);
        close(set[1], 1.0 / 3f64.log2());
    }

    #[test]
    fn mrr_examples() {
        close(reciprocal_rank(&[F, T]), 0.5);
        close(mrr(&[vec![T], vec![T, F]]).unwrap(), 1.0);
        close(mrr(&[vec![T], vec![F, F, F, T]]).unwrap(), 0.625);
        close(reciprocal_rank(&[F, F]), 0.0);
    }

    #[test]
    fn srcc_examples() {
        close(srcc(&[1, 2, 3, 4], &[1, 2, 3, 4]).unwrap(), 1.0);
        close(srcc(&[1, 2, 3, 4], &[4, 3, 2, 1]).unwrap(), -1.0);
        close(srcc(&[1, 2, 3, 4], &[1, 3, 2, 4]).unwrap(), 0.8);
        assert_eq!(srcc(&[1], &[1]).unwrap_err().to_string(), "undefined correlation");
        assert!(srcc(&[1, 2], &[1, 3]).is_err());
        assert!(srcc(&[1, 1], &[1, 1]).is_err());
    }

    #[test]
    fn mid_ranks_share_ties() {
        assert_eq!(mid_ranks(&[10.0, 20.0, 10.0, 5.0]), [2.5, 4.0, 2.5, 1.0]);
        close(
            spearman(&[1.0, 2.0, 3.0], &[1.0, 1.0, 2.0]).unwrap(),
            0.8660254037844387,
        );
    }
}
