//! CART regression trees fitted by exhaustive SSE-minimizing splits.

use serde::{Deserialize, Serialize};

use super::LtrError;

/// Dense row-major matrix with per-column sample orderings.
#[derive(Debug, Clone)]
pub struct Presorted {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    /// `order[j]` lists row indexes sorted by column `j`, ties by row index.
    order: Vec<Vec<u32>>,
}

impl Presorted {
    pub fn new(x: &[Vec<f64>]) -> Result<Self, LtrError> {
        let rows = x.len();
        if rows == 0 {
            return Err(LtrError::EmptyInput);
        }
        let cols = x[0].len();
        let mut data = Vec::with_capacity(rows * cols);
        for row in x {
            if row.len() != cols {
                return Err(LtrError::DimensionMismatch {
                    expected: cols,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(LtrError::NonFinite);
            }
            data.extend_from_slice(row);
        }
        let order = (0..cols)
            .map(|j| {
                let mut idx: Vec<u32> = (0..rows as u32).collect();
                idx.sort_by(|&a, &b| {
                    data[a as usize * cols + j]
                        .total_cmp(&data[b as usize * cols + j])
                        .then(a.cmp(&b))
                });
                idx
            })
            .collect();
        Ok(Presorted {
            rows,
            cols,
            data,
            order,
        })
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn value(&self, row: u32, col: usize) -> f64 {
        self.data[row as usize * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Binary regression tree stored as an arena; the root is node 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn leaf(value: f64) -> Self {
        RegressionTree {
            nodes: vec![Node::Leaf { value }],
        }
    }

    /// Builds a tree from nodes; the caller guarantees child indexes are valid.
    pub fn from_nodes(nodes: Vec<Node>) -> Self {
        RegressionTree { nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    /// Edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

/// Fits a tree to `residuals` over the rows of `x`.
pub fn fit_tree(x: &[Vec<f64>], residuals: &[f64], params: TreeParams) -> Result<RegressionTree, LtrError> {
    let data = Presorted::new(x)?;
    fit_presorted(&data, residuals, params)
}

pub(crate) fn fit_presorted(
    data: &Presorted,
    residuals: &[f64],
    params: TreeParams,
) -> Result<RegressionTree, LtrError> {
    if residuals.is_empty() {
        return Err(LtrError::EmptyInput);
    }
    if residuals.len() != data.rows {
        return Err(LtrError::DimensionMismatch {
            expected: data.rows,
            got: residuals.len(),
        });
    }
    let mut builder = TreeBuilder {
        data,
        residuals,
        params,
        nodes: Vec::new(),
        goes_left: vec![false; data.rows],
    };
    builder.grow(data.order.clone(), 0);
    Ok(RegressionTree { nodes: builder.nodes })
}

struct TreeBuilder<'a> {
    data: &'a Presorted,
    residuals: &'a [f64],
    params: TreeParams,
    nodes: Vec<Node>,
    goes_left: Vec<bool>,
}

struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

impl TreeBuilder<'_> {
    /// `order[j]` holds this node's samples sorted by feature `j`.
    fn grow(&mut self, order: Vec<Vec<u32>>, depth: usize) -> usize {
        let samples = order.first().map(Vec::as_slice).unwrap_or(&[]);
        let n = samples.len();
        let sum: f64 = samples.iter().map(|&i| self.residuals[i as usize]).sum();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: sum / n as f64 });

        let p = self.params;
        if depth >= p.max_depth || n < p.min_samples_split || n < 2 * p.min_samples_leaf.max(1) {
            return id;
        }
        let Some(best) = self.best_split(&order, sum) else {
            return id;
        };

        for &i in &order[best.feature] {
            self.goes_left[i as usize] = self.data.value(i, best.feature) <= best.threshold;
        }
        let (left, right): (Vec<Vec<u32>>, Vec<Vec<u32>>) = order
            .into_iter()
            .map(|col| col.into_iter().partition(|&i| self.goes_left[i as usize]))
            .unzip();
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: l,
            right: r,
        };
        id
    }

    fn best_split(&self, order: &[Vec<u32>], sum: f64) -> Option<Best> {
        let n = order[0].len();
        let min_leaf = self.params.min_samples_leaf.max(1);
        let sum_sq: f64 = order[0].iter().map(|&i| self.residuals[i as usize].powi(2)).sum();
        let parent = sum * sum / n as f64;
        let mut best: Option<Best> = None;
        for (feature, col) in order.iter().enumerate() {
            let mut left_sum = 0.0;
            for k in 1..n {
                left_sum += self.residuals[col[k - 1] as usize];
                if k < min_leaf || n - k < min_leaf {
                    continue;
                }
                let lo = self.data.value(col[k - 1], feature);
                let hi = self.data.value(col[k], feature);
                if lo == hi {
                    continue;
                }
                let right_sum = sum - left_sum;
                let gain = left_sum * left_sum / k as f64 + right_sum * right_sum / (n - k) as f64 - parent;
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(Best {
                        gain,
                        feature,
                        threshold,
                    });
                }
            }
        }
        best.filter(|b| b.gain > 1e-12 * (1.0 + sum_sq))
    }
}
