//! Python bindings for the retrieval, popularity, ranking and metric APIs.

use std::fmt::Display;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use techrank_core::aggregation;
use techrank_core::dataset::{self, PairInstance, Scaling};
use techrank_core::extraction::RankedList;
use techrank_core::ltr::{self, Hyperparams, Scenario};
use techrank_core::metrics;
use techrank_core::popularity::{self, ProjectRanking, ProjectRecord};
use techrank_core::querypipe::{process_query_with_suffix, EngineKind, StopWords, DEFAULT_SUFFIX};
use techrank_core::registry;

fn value_err(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

type Scored = Vec<(String, f64)>;

fn scored(list: &RankedList) -> Scored {
    list.items.iter().map(|i| (i.name.clone(), i.score)).collect()
}

/// Technology registry loaded from line-delimited JSON.
#[pyclass(module = "techrank", frozen)]
struct Registry {
    inner: registry::Registry,
}

#[pymethods]
impl Registry {
    /// Loads a registry file; invalid lines are skipped.
    #[new]
    fn new(path: &str) -> PyResult<Self> {
        let (inner, _) = registry::Registry::ingest(path).map_err(value_err)?;
        Ok(Registry { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __contains__(&self, name: &str) -> bool {
        self.inner.get(name).is_some()
    }

    fn names(&self) -> Vec<String> {
        self.inner.records().iter().map(|r| r.name.clone()).collect()
    }

    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names()
    }

    /// Execution context of a technology: `web`, `node` or `none`.
    fn context(&self, name: &str) -> Option<String> {
        self.inner.get(name).map(|r| r.context.to_string())
    }

    /// Raw feature values in `feature_names()` order; missing features are 0.
    fn features(&self, name: &str) -> Option<Vec<f64>> {
        let names = self.inner.feature_names();
        self.inner.get(name).map(|r| dataset::feature_vector(r, &names).0)
    }
}

/// A trained pairwise ranking model.
#[pyclass(module = "techrank", frozen)]
struct RankingModel {
    inner: ltr::RankingModel,
}

#[pymethods]
impl RankingModel {
    /// Trains on pair vectors `x` (left features then right features) and
    /// 0/1 labels.
    #[staticmethod]
    #[pyo3(signature = (x, labels, n_trees=500, learning_rate=0.004, max_depth=50, min_samples_split=50, min_samples_leaf=10, seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        x: Vec<Vec<f64>>,
        labels: Vec<u8>,
        n_trees: usize,
        learning_rate: f64,
        max_depth: usize,
        min_samples_split: usize,
        min_samples_leaf: usize,
        seed: u64,
    ) -> PyResult<Self> {
        if x.len() != labels.len() {
            return Err(PyValueError::new_err(format!(
                "{} rows but {} labels",
                x.len(),
                labels.len()
            )));
        }
        let instances: Vec<PairInstance> = x
            .into_iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (x, label))| PairInstance {
                group_id: String::new(),
                left: format!("l{i}"),
                right: format!("r{i}"),
                x,
                label,
            })
            .collect();
        let hp = Hyperparams {
            n_trees,
            learning_rate,
            max_depth,
            min_samples_split,
            min_samples_leaf,
        };
        let inner = ltr::train_instances(&instances, &hp, seed).map_err(value_err)?;
        Ok(RankingModel { inner })
    }

    /// Trains on a pair-instance CSV written by `techrank dataset build`.
    #[staticmethod]
    #[pyo3(signature = (path, n_trees=500, seed=0))]
    fn train_csv(path: &str, n_trees: usize, seed: u64) -> PyResult<Self> {
        let data = dataset::Dataset::load(path).map_err(value_err)?;
        let hp = Hyperparams {
            n_trees,
            ..Hyperparams::default()
        };
        let inner = ltr::train(&data, &hp, seed).map_err(value_err)?;
        Ok(RankingModel { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let inner = ltr::RankingModel::load(path).map_err(value_err)?;
        Ok(RankingModel { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = ltr::RankingModel::from_json(text).map_err(value_err)?;
        Ok(RankingModel { inner })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(value_err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(value_err)
    }

    #[getter]
    fn n_trees(&self) -> usize {
        self.inner.trees.len()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names.clone()
    }

    fn predict(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.predict(&x).map_err(value_err)
    }

    /// Estimated probability that `a` should rank above `b`.
    fn predict_pair(&self, a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
        self.inner.predict_pair(&a, &b).map_err(value_err)
    }

    /// Ranks registry technologies by pairwise wins.
    #[pyo3(signature = (registry, candidates, scenario="all", jobs=1))]
    fn rank(&self, registry: &Registry, candidates: Vec<String>, scenario: &str, jobs: usize) -> PyResult<Scored> {
        let scenario: Scenario = scenario.parse().map_err(value_err)?;
        let records = candidates
            .iter()
            .map(|n| {
                registry
                    .inner
                    .get(n)
                    .cloned()
                    .ok_or_else(|| PyValueError::new_err(format!("{n:?} is not in the registry")))
            })
            .collect::<PyResult<Vec<_>>>()?;
        let ranked = ltr::rank_candidates(&self.inner, &records, scenario, &candidates, jobs).map_err(value_err)?;
        Ok(scored(&ranked))
    }
}

#[pyfunction]
fn normalize_url(url: &str) -> PyResult<String> {
    registry::normalize_url(url).map_err(value_err)
}

/// Returns `(terms, expanded)` for a raw query.
#[pyfunction]
#[pyo3(signature = (raw, kind="general-purpose", suffix=None, stopwords=None))]
fn process_query(
    raw: &str,
    kind: &str,
    suffix: Option<&str>,
    stopwords: Option<Vec<String>>,
) -> PyResult<(Vec<String>, String)> {
    let kind: EngineKind = kind.parse().map_err(value_err)?;
    let stopwords = match stopwords {
        Some(words) => words.into_iter().collect(),
        None => StopWords::english(),
    };
    let q = process_query_with_suffix(raw, &stopwords, kind, suffix.unwrap_or(DEFAULT_SUFFIX)).map_err(value_err)?;
    Ok((q.terms, q.expanded))
}

/// Fuses ranked name lists into `(name, points)` pairs.
#[pyfunction]
fn borda_fuse(lists: Vec<Vec<String>>) -> Scored {
    let lists: Vec<RankedList> = lists
        .iter()
        .enumerate()
        .map(|(i, names)| RankedList::from_names(&format!("list{i}"), names))
        .collect();
    scored(&aggregation::borda_fuse(&lists))
}

fn project_ranking(projects: Vec<(String, Vec<String>)>) -> PyResult<ProjectRanking> {
    let records = projects
        .into_iter()
        .enumerate()
        .map(|(i, (name, deps))| ProjectRecord::new(&name, i + 1, deps))
        .collect();
    ProjectRanking::new(records).map_err(value_err)
}

/// CDSel of `tech` over `(project, dependencies)` pairs listed best first.
#[pyfunction]
fn cdsel(projects: Vec<(String, Vec<String>)>, tech: &str) -> PyResult<f64> {
    Ok(popularity::cdsel(&project_ranking(projects)?, tech))
}

#[pyfunction]
fn cdsel_all(projects: Vec<(String, Vec<String>)>) -> PyResult<Vec<(String, f64)>> {
    Ok(popularity::cdsel_all(&project_ranking(projects)?).into_iter().collect())
}

/// Scales each column of a comparison group (`max` or `minmax`).
#[pyfunction]
#[pyo3(signature = (group, scaling="max"))]
fn scale_features(group: Vec<Vec<f64>>, scaling: &str) -> PyResult<Vec<Vec<f64>>> {
    let scaling: Scaling = scaling.parse().map_err(value_err)?;
    dataset::scale_features(&group, scaling).map_err(value_err)
}

#[pyfunction]
fn precision_at_k(rels: Vec<bool>, k: usize) -> PyResult<f64> {
    metrics::precision_at_k(&rels, k).map_err(value_err)
}

#[pyfunction]
fn recall_at_k(rels: Vec<bool>, total_relevant: usize, k: usize) -> PyResult<f64> {
    metrics::recall_at_k(&rels, total_relevant, k).map_err(value_err)
}

#[pyfunction]
fn average_precision(rels: Vec<bool>, total_relevant: usize) -> PyResult<f64> {
    metrics::average_precision(&rels, total_relevant).map_err(value_err)
}

#[pyfunction]
fn ndcg(rels: Vec<bool>, total_relevant: usize, depth: usize) -> PyResult<f64> {
    metrics::ndcg(&rels, total_relevant, depth).map_err(value_err)
}

#[pyfunction]
fn mrr(queries: Vec<Vec<bool>>) -> PyResult<f64> {
    metrics::mrr(&queries).map_err(value_err)
}

/// Spearman correlation of two rankings of the same items.
#[pyfunction]
fn srcc(a: Vec<String>, b: Vec<String>) -> PyResult<f64> {
    metrics::srcc(&a, &b).map_err(value_err)
}

/// Two-sided signed-rank test: `(statistic, p_value, n, method)`.
#[pyfunction]
fn wilcoxon(a: Vec<f64>, b: Vec<f64>) -> PyResult<(f64, f64, usize, String)> {
    let w = metrics::wilcoxon_signed_rank(&a, &b).map_err(value_err)?;
    Ok((w.statistic, w.p_value, w.n, w.method.to_string()))
}

#[pymodule(name = "techrank")]
fn techrank_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Registry>()?;
    m.add_class::<RankingModel>()?;
    m.add_function(wrap_pyfunction!(normalize_url, m)?)?;
    m.add_function(wrap_pyfunction!(process_query, m)?)?;
    m.add_function(wrap_pyfunction!(borda_fuse, m)?)?;
    m.add_function(wrap_pyfunction!(cdsel, m)?)?;
    m.add_function(wrap_pyfunction!(cdsel_all, m)?)?;
    m.add_function(wrap_pyfunction!(scale_features, m)?)?;
    m.add_function(wrap_pyfunction!(precision_at_k, m)?)?;
    m.add_function(wrap_pyfunction!(recall_at_k, m)?)?;
    m.add_function(wrap_pyfunction!(average_precision, m)?)?;
    m.add_function(wrap_pyfunction!(ndcg, m)?)?;
    m.add_function(wrap_pyfunction!(mrr, m)?)?;
    m.add_function(wrap_pyfunction!(srcc, m)?)?;
    m.add_function(wrap_pyfunction!(wilcoxon, m)?)?;
    Ok(())
}
