//! Boosted ensembles and their on-disk format.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tree::{fit_presorted, Node, Presorted, RegressionTree, TreeParams};
use super::LtrError;
use crate::dataset::{Dataset, PairInstance, Scaling};

pub const MODEL_VERSION: u32 = 1;

/// Deepest tree the model file can nest before JSON readers hit their
/// recursion limits.
pub const MAX_DEPTH_LIMIT: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            n_trees: 500,
            learning_rate: 0.004,
            max_depth: 50,
            min_samples_split: 50,
            min_samples_leaf: 10,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), LtrError> {
        let bad = |m: String| Err(LtrError::Hyperparams(m));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if self.max_depth > MAX_DEPTH_LIMIT {
            return bad(format!(
                "max depth must be at most {MAX_DEPTH_LIMIT}, got {}",
                self.max_depth
            ));
        }
        if self.min_samples_split < 2 {
            return bad(format!(
                "min samples split must be at least 2, got {}",
                self.min_samples_split
            ));
        }
        if self.min_samples_leaf < 1 {
            return bad("min samples leaf must be at least 1".to_string());
        }
        Ok(())
    }

    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            min_samples_leaf: self.min_samples_leaf,
        }
    }
}

/// `F(x) = initial_prediction + learning_rate · Σ tree(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingModel {
    pub hyperparams: Hyperparams,
    pub feature_names: Vec<String>,
    pub scaling: Scaling,
    pub seed: u64,
    pub initial_prediction: f64,
    pub trees: Vec<RegressionTree>,
}

/// Trains on a dataset, copying its feature header and scaling.
pub fn train(dataset: &Dataset, hp: &Hyperparams, seed: u64) -> Result<RankingModel, LtrError> {
    let mut model = train_instances(&dataset.instances, hp, seed)?;
    let dim = dataset.feature_names.len() * 2;
    if let Some(first) = dataset.instances.first() {
        if first.x.len() != dim {
            return Err(LtrError::DimensionMismatch {
                expected: dim,
                got: first.x.len(),
            });
        }
    }
    model.feature_names = dataset.feature_names.clone();
    model.scaling = dataset.scaling;
    Ok(model)
}

/// Trains on raw instances. Feature names are left as `f0, f1, ...`.
pub fn train_instances(instances: &[PairInstance], hp: &Hyperparams, seed: u64) -> Result<RankingModel, LtrError> {
    train_with_history(instances, hp, seed).map(|(m, _)| m)
}

/// Also returns the training mean squared error after each stage, starting
/// with `F_0`.
pub fn train_with_history(
    instances: &[PairInstance],
    hp: &Hyperparams,
    seed: u64,
) -> Result<(RankingModel, Vec<f64>), LtrError> {
    hp.validate()?;
    if instances.len() < 2 {
        return Err(LtrError::EmptyInput);
    }
    let labels: Vec<f64> = instances.iter().map(|i| f64::from(i.label)).collect();
    if let Some(&only) = instances.first().map(|i| &i.label) {
        if instances.iter().all(|i| i.label == only) {
            return Err(LtrError::DegenerateTrainingSet(only));
        }
    }
    let x: Vec<Vec<f64>> = instances.iter().map(|i| i.x.clone()).collect();
    let data = Presorted::new(&x)?;
    if data.cols() % 2 != 0 {
        return Err(LtrError::DimensionMismatch {
            expected: data.cols() + 1,
            got: data.cols(),
        });
    }

    let n = labels.len() as f64;
    let initial = labels.iter().sum::<f64>() / n;
    let mut f = vec![initial; labels.len()];
    let mse = |f: &[f64]| f.iter().zip(&labels).map(|(p, y)| (y - p).powi(2)).sum::<f64>() / n;
    let mut history = vec![mse(&f)];
    let mut trees = Vec::with_capacity(hp.n_trees);
    let params = hp.tree_params();
    for _ in 0..hp.n_trees {
        let residuals: Vec<f64> = labels.iter().zip(&f).map(|(y, p)| y - p).collect();
        let tree = fit_presorted(&data, &residuals, params)?;
        for (i, fi) in f.iter_mut().enumerate() {
            *fi += hp.learning_rate * tree.predict(data.row(i));
        }
        history.push(mse(&f));
        trees.push(tree);
    }
    let half = data.cols() / 2;
    Ok((
        RankingModel {
            hyperparams: *hp,
            feature_names: (0..half).map(|i| format!("f{i}")).collect(),
            scaling: Scaling::default(),
            seed,
            initial_prediction: initial,
            trees,
        },
        history,
    ))
}

impl RankingModel {
    /// Width of one side of a pair vector.
    pub fn side_dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn learning_rate(&self) -> f64 {
        self.hyperparams.learning_rate
    }

    /// Output for a full pair vector.
    pub fn predict(&self, x: &[f64]) -> Result<f64, LtrError> {
        let dim = 2 * self.side_dim();
        if x.len() != dim {
            return Err(LtrError::DimensionMismatch {
                expected: dim,
                got: x.len(),
            });
        }
        Ok(self.predict_unchecked(x))
    }

    fn predict_unchecked(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        self.initial_prediction + self.hyperparams.learning_rate * sum
    }

    /// `F(concat(a, b))`; above 0.5 means `a` is preferred.
    pub fn predict_pair(&self, a: &[f64], b: &[f64]) -> Result<f64, LtrError> {
        let d = self.side_dim();
        for side in [a, b] {
            if side.len() != d {
                return Err(LtrError::DimensionMismatch {
                    expected: d,
                    got: side.len(),
                });
            }
        }
        let mut x = Vec::with_capacity(2 * d);
        x.extend_from_slice(a);
        x.extend_from_slice(b);
        Ok(self.predict_unchecked(&x))
    }

    pub fn to_json(&self) -> Result<String, LtrError> {
        let file = ModelFile {
            version: MODEL_VERSION,
            hyperparams: HyperparamsFile::from(&self.hyperparams)?,
            feature_names: self.feature_names.clone(),
            scaling: self.scaling,
            seed: self.seed,
            initial_prediction: precise(self.initial_prediction)?,
            trees: self.trees.iter().map(tree_repr).collect::<Result<_, _>>()?,
        };
        serde_json::to_string(&file).map_err(|e| LtrError::Write(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, LtrError> {
        let read_err = |message: String| LtrError::Read {
            path: "<string>".to_string(),
            message,
        };
        let file: ModelFileIn = serde_json::from_str(text).map_err(|e| read_err(e.to_string()))?;
        if file.version != MODEL_VERSION {
            return Err(LtrError::Version(file.version));
        }
        let hyperparams = file.hyperparams.into_hyperparams()?;
        let dim = file.feature_names.len() * 2;
        let mut trees = Vec::with_capacity(file.trees.len());
        for t in &file.trees {
            let mut nodes = Vec::new();
            flatten(t, dim, &mut nodes).map_err(read_err)?;
            trees.push(RegressionTree::from_nodes(nodes));
        }
        if !file.initial_prediction.is_finite() {
            return Err(read_err("initial prediction is not finite".to_string()));
        }
        Ok(RankingModel {
            hyperparams,
            feature_names: file.feature_names,
            scaling: file.scaling,
            seed: file.seed,
            initial_prediction: file.initial_prediction,
            trees,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LtrError> {
        let text = self.to_json()?;
        let mut f = std::fs::File::create(path.as_ref()).map_err(|e| LtrError::Write(e.to_string()))?;
        writeln!(f, "{text}").map_err(|e| LtrError::Write(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LtrError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| LtrError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text).map_err(|e| match e {
            LtrError::Read { message, .. } => LtrError::Read {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })
    }
}

type Raw = Box<serde_json::value::RawValue>;

/// 17 significant digits, enough to reproduce every f64 exactly.
fn precise(v: f64) -> Result<Raw, LtrError> {
    if !v.is_finite() {
        return Err(LtrError::NonFinite);
    }
    serde_json::value::RawValue::from_string(format!("{v:.16e}")).map_err(|e| LtrError::Write(e.to_string()))
}

#[derive(Serialize)]
struct ModelFile {
    version: u32,
    hyperparams: HyperparamsFile<Raw>,
    feature_names: Vec<String>,
    scaling: Scaling,
    seed: u64,
    initial_prediction: Raw,
    trees: Vec<TreeRepr<Raw>>,
}

#[derive(Deserialize)]
struct ModelFileIn {
    version: u32,
    hyperparams: HyperparamsFile<f64>,
    feature_names: Vec<String>,
    #[serde(default)]
    scaling: Scaling,
    #[serde(default)]
    seed: u64,
    initial_prediction: f64,
    trees: Vec<TreeRepr<f64>>,
}

#[derive(Serialize, Deserialize)]
struct HyperparamsFile<F> {
    n_trees: usize,
    learning_rate: F,
    max_depth: usize,
    min_samples_split: usize,
    min_samples_leaf: usize,
}

impl HyperparamsFile<Raw> {
    fn from(hp: &Hyperparams) -> Result<Self, LtrError> {
        Ok(HyperparamsFile {
            n_trees: hp.n_trees,
            learning_rate: precise(hp.learning_rate)?,
            max_depth: hp.max_depth,
            min_samples_split: hp.min_samples_split,
            min_samples_leaf: hp.min_samples_leaf,
        })
    }
}

impl HyperparamsFile<f64> {
    fn into_hyperparams(self) -> Result<Hyperparams, LtrError> {
        let hp = Hyperparams {
            n_trees: self.n_trees,
            learning_rate: self.learning_rate,
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            min_samples_leaf: self.min_samples_leaf,
        };
        hp.validate()?;
        Ok(hp)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TreeRepr<F> {
    Split {
        feature: usize,
        threshold: F,
        left: Box<TreeRepr<F>>,
        right: Box<TreeRepr<F>>,
    },
    Leaf {
        leaf: F,
    },
}

fn tree_repr(tree: &RegressionTree) -> Result<TreeRepr<Raw>, LtrError> {
    fn go(nodes: &[Node], i: usize) -> Result<TreeRepr<Raw>, LtrError> {
        Ok(match nodes[i] {
            Node::Leaf { value } => TreeRepr::Leaf { leaf: precise(value)? },
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => TreeRepr::Split {
                feature,
                threshold: precise(threshold)?,
                left: Box::new(go(nodes, left)?),
                right: Box::new(go(nodes, right)?),
            },
        })
    }
    go(tree.nodes(), 0)
}

/// Rebuilds the arena in preorder, checking feature indexes and finiteness.
fn flatten(repr: &TreeRepr<f64>, dim: usize, nodes: &mut Vec<Node>) -> Result<usize, String> {
    let id = nodes.len();
    match repr {
        TreeRepr::Leaf { leaf } => {
            if !leaf.is_finite() {
                return Err("leaf value is not finite".to_string());
            }
            nodes.push(Node::Leaf { value: *leaf });
        }
        TreeRepr::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            if *feature >= dim {
                return Err(format!("split feature {feature} out of range for width {dim}"));
            }
            if !threshold.is_finite() {
                return Err("split threshold is not finite".to_string());
            }
            nodes.push(Node::Leaf { value: 0.0 });
            let l = flatten(left, dim, nodes)?;
            let r = flatten(right, dim, nodes)?;
            nodes[id] = Node::Split {
                feature: *feature,
                threshold: *threshold,
                left: l,
                right: r,
            };
        }
    }
    Ok(id)
}
