//! Wilcoxon signed-rank test for paired samples.

use std::fmt;

use statrs::distribution::{ContinuousCDF, Normal};

use super::ir::mid_ranks;
use super::MetricError;

/// Largest sample size for which the p-value is computed exactly.
pub const EXACT_MAX_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PMethod {
    Exact,
    Normal,
}

impl fmt::Display for PMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PMethod::Exact => "exact",
            PMethod::Normal => "normal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wilcoxon {
    /// `min(W+, W−)`.
    pub statistic: f64,
    pub p_value: f64,
    /// Pairs left after dropping zero differences.
    pub n: usize,
    pub method: PMethod,
}

/// Signed ranks of the non-zero differences `a − b`.
fn signed_ranks(a: &[f64], b: &[f64]) -> Result<(Vec<f64>, Vec<bool>), MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch(a.len(), b.len()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    if diffs.is_empty() {
        return Err(MetricError::NoInformativePairs);
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    Ok((mid_ranks(&abs), diffs.iter().map(|&d| d > 0.0).collect()))
}

fn statistic(ranks: &[f64], positive: &[bool]) -> f64 {
    let w_plus: f64 = ranks.iter().zip(positive).filter(|(_, &p)| p).map(|(r, _)| r).sum();
    let total: f64 = ranks.iter().sum();
    w_plus.min(total - w_plus)
}

/// Two-sided test, exact up to [`EXACT_MAX_N`] pairs and normal beyond.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<Wilcoxon, MetricError> {
    let (ranks, _) = signed_ranks(a, b)?;
    if ranks.len() <= EXACT_MAX_N {
        wilcoxon_exact(a, b)
    } else {
        wilcoxon_normal(a, b)
    }
}

/// Exact null distribution of `W+` over all `2^n` sign assignments.
///
/// Mid-ranks are multiples of 1/2, so doubled ranks are integers and the
/// distribution is a subset-sum count.
pub fn wilcoxon_exact(a: &[f64], b: &[f64]) -> Result<Wilcoxon, MetricError> {
    let (ranks, positive) = signed_ranks(a, b)?;
    let n = ranks.len();
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] > 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let w = statistic(&ranks, &positive);
    let w2 = (w * 2.0).round() as usize;
    let below: f64 = counts[..=w2].iter().sum();
    let p = (2.0 * below / 2f64.powi(n as i32)).min(1.0);
    Ok(Wilcoxon {
        statistic: w,
        p_value: p,
        n,
        method: PMethod::Exact,
    })
}

/// Normal approximation with continuity and tie corrections.
pub fn wilcoxon_normal(a: &[f64], b: &[f64]) -> Result<Wilcoxon, MetricError> {
    let (ranks, positive) = signed_ranks(a, b)?;
    let n = ranks.len() as f64;
    let w = statistic(&ranks, &positive);
    let mean = n * (n + 1.0) / 4.0;
    let mut sorted = ranks.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    for group in sorted.chunk_by(|x, y| x == y) {
        let t = group.len() as f64;
        tie_term += t * t * t - t;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
        let normal = Normal::standard();
        (2.0 * (1.0 - normal.cdf(z))).min(1.0)
    };
    Ok(Wilcoxon {
        statistic: w,
        p_value: p,
        n: ranks.len(),
        method: PMethod::Normal,
    })
}
