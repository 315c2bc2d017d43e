//! Project relevance and the community degree of selection (CDSel).
//!
//! Reference projects are ranked by stars. A project at 1-based position `r`
//! of a ranking of length `z` has relevance `z − r`. CDSel of a technology
//! sums `rel(P_i) / log2(i + 1)` over the projects `P_i` that depend on it.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::registry::canonical_name;

#[derive(Debug, Error)]
pub enum PopularityError {
    #[error("cannot read projects {path}: {message}")]
    Read { path: String, message: String },
    #[error("project {0:?} is not in the ranking")]
    UnknownProject(String),
    #[error("rank positions must be 1..{z} without gaps or duplicates (found {found})")]
    BadPositions { z: usize, found: usize },
    #[error("duplicate project {0:?}")]
    DuplicateProject(String),
    #[error("line {0}: a project needs either stars or rank_position, consistently across the file")]
    MixedRanking(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectRecord {
    pub name: String,
    /// 1 = most starred.
    pub rank_position: usize,
    pub dependencies: BTreeSet<String>,
}

impl ProjectRecord {
    pub fn new<I, S>(name: &str, rank_position: usize, dependencies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        ProjectRecord {
            name: name.to_string(),
            rank_position,
            dependencies: dependencies.into_iter().map(|d| canonical_name(d.as_ref())).collect(),
        }
    }
}

/// Projects ordered by rank position; `projects[i].rank_position == i + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectRanking {
    projects: Vec<ProjectRecord>,
}

#[derive(Debug, Deserialize)]
struct ProjectLine {
    name: String,
    #[serde(default)]
    stars: Option<f64>,
    #[serde(default)]
    rank_position: Option<usize>,
    #[serde(default)]
    dependencies: Vec<String>,
}

impl ProjectRanking {
    pub fn new(mut projects: Vec<ProjectRecord>) -> Result<Self, PopularityError> {
        projects.sort_by_key(|p| p.rank_position);
        let z = projects.len();
        for (i, p) in projects.iter().enumerate() {
            if p.rank_position != i + 1 {
                return Err(PopularityError::BadPositions {
                    z,
                    found: p.rank_position,
                });
            }
        }
        let mut names = BTreeSet::new();
        for p in &projects {
            if !names.insert(p.name.as_str()) {
                return Err(PopularityError::DuplicateProject(p.name.clone()));
            }
        }
        Ok(ProjectRanking { projects })
    }

    /// Ranks `(name, stars, dependencies)` by stars descending, ties by name.
    pub fn from_stars(items: Vec<(String, f64, Vec<String>)>) -> Result<Self, PopularityError> {
        let mut items = items;
        items.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self::new(
            items
                .into_iter()
                .enumerate()
                .map(|(i, (name, _, deps))| ProjectRecord::new(&name, i + 1, deps))
                .collect(),
        )
    }

    /// Reads line-delimited `{name, stars | rank_position, dependencies}`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PopularityError> {
        let path = path.as_ref();
        let read_err = |message: String| PopularityError::Read {
            path: path.display().to_string(),
            message,
        };
        let file = std::fs::File::open(path).map_err(|e| read_err(e.to_string()))?;
        let mut lines = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| read_err(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: ProjectLine =
                serde_json::from_str(&line).map_err(|e| read_err(format!("line {}: {e}", i + 1)))?;
            lines.push((i + 1, parsed));
        }
        // The first line decides whether the file carries positions or stars.
        let by_position = lines.first().is_some_and(|(_, l)| l.rank_position.is_some());
        if by_position {
            let mut records = Vec::with_capacity(lines.len());
            for (line_no, l) in lines {
                let Some(position) = l.rank_position else {
                    return Err(PopularityError::MixedRanking(line_no));
                };
                records.push(ProjectRecord::new(&l.name, position, l.dependencies));
            }
            return Self::new(records);
        }
        let mut starred = Vec::with_capacity(lines.len());
        for (line_no, l) in lines {
            match l.stars {
                Some(s) if s.is_finite() && l.rank_position.is_none() => starred.push((l.name, s, l.dependencies)),
                _ => return Err(PopularityError::MixedRanking(line_no)),
            }
        }
        Self::from_stars(starred)
    }

    pub fn projects(&self) -> &[ProjectRecord] {
        &self.projects
    }

    /// Ranking length `z`.
    pub fn len(&self) -> usize {
        self.projects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projects.is_empty()
    }

    pub fn project(&self, name: &str) -> Option<&ProjectRecord> {
        self.projects.iter().find(|p| p.name == name)
    }
}

/// `z − rank_position(p)`.
pub fn project_relevance(ranking: &ProjectRanking, project: &str) -> Result<f64, PopularityError> {
    let p = ranking
        .project(project)
        .ok_or_else(|| PopularityError::UnknownProject(project.to_string()))?;
    Ok(relevance_at(ranking.len(), p.rank_position))
}

fn relevance_at(z: usize, rank_position: usize) -> f64 {
    (z - rank_position) as f64
}

fn attenuation(i: usize) -> f64 {
    ((i + 1) as f64).log2()
}

/// CDSel of one technology. Zero when no project depends on it.
pub fn cdsel(ranking: &ProjectRanking, tech: &str) -> f64 {
    let tech = canonical_name(tech);
    let z = ranking.len();
    ranking
        .projects
        .iter()
        .filter(|p| p.dependencies.contains(&tech))
        .map(|p| relevance_at(z, p.rank_position) / attenuation(p.rank_position))
        .sum()
}

/// CDSel for every technology that appears as a dependency.
pub fn cdsel_all(ranking: &ProjectRanking) -> BTreeMap<String, f64> {
    let z = ranking.len();
    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    for p in &ranking.projects {
        let term = relevance_at(z, p.rank_position) / attenuation(p.rank_position);
        for dep in &p.dependencies {
            *out.entry(dep.clone()).or_insert(0.0) += term;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// z = 11, so rel(P1) = 10 and rel(P3) = 8.
    fn ranking(selected_by: &[usize]) -> ProjectRanking {
        ProjectRanking::new(
            (1..=11)
                .map(|i| {
                    let deps: Vec<&str> = if selected_by.contains(&i) {
                        vec!["moment"]
                    } else {
                        vec![]
                    };
                    ProjectRecord::new(&format!("p{i}"), i, deps)
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn relevance_examples() {
        let r = ProjectRanking::new(
            (1..=1000)
                .map(|i| ProjectRecord::new(&format!("p{i}"), i, Vec::<&str>::new()))
                .collect(),
        )
        .unwrap();
        assert_eq!(project_relevance(&r, "p1").unwrap(), 999.0);
        assert_eq!(project_relevance(&r, "p1000").unwrap(), 0.0);
        let r3 = ProjectRanking::new(
            (1..=3)
                .map(|i| ProjectRecord::new(&format!("p{i}"), i, Vec::<&str>::new()))
                .collect(),
        )
        .unwrap();
        assert_eq!(project_relevance(&r3, "p2").unwrap(), 1.0);
        assert!(matches!(
            project_relevance(&r3, "nope"),
            Err(PopularityError::UnknownProject(_))
        ));
    }

    #[test]
    fn cdsel_examples() {
        assert_eq!(cdsel(&ranking(&[1]), "moment"), 10.0);
        assert_eq!(cdsel(&ranking(&[1, 3]), "moment"), 14.0);
        assert_eq!(cdsel(&ranking(&[]), "moment"), 0.0);
        assert_eq!(cdsel(&ranking(&[1, 3]), "Moment"), 14.0);
        assert_eq!(cdsel_all(&ranking(&[1, 3]))["moment"], 14.0);
    }

    #[test]
    fn positions_must_be_contiguous() {
        let bad = ProjectRanking::new(vec![
            ProjectRecord::new("a", 1, ["x"]),
            ProjectRecord::new("b", 3, ["x"]),
        ]);
        assert!(matches!(bad, Err(PopularityError::BadPositions { .. })));
        let dup = ProjectRanking::new(vec![
            ProjectRecord::new("a", 1, ["x"]),
            ProjectRecord::new("a", 2, ["x"]),
        ]);
        assert!(matches!(dup, Err(PopularityError::DuplicateProject(_))));
    }

    #[test]
    fn stars_ordering_ties_by_name() {
        let r = ProjectRanking::from_stars(vec![
            ("b".into(), 10.0, vec![]),
            ("a".into(), 10.0, vec![]),
            ("c".into(), 99.0, vec![]),
        ])
        .unwrap();
        let names: Vec<&str> = r.projects().iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["c", "a", "b"]);
    }

    #[test]
    fn load_file_with_stars_and_positions() {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"name":"chart.js","stars":50,"dependencies":["moment"]}}"#).unwrap();
        writeln!(
            f,
            r#"{{"name":"vue","stars":100,"dependencies":["Moment","date-fns","moment"]}}"#
        )
        .unwrap();
        let r = ProjectRanking::load(f.path()).unwrap();
        assert_eq!(r.projects()[0].name, "vue");
        assert_eq!(r.projects()[0].dependencies.len(), 2);
        assert_eq!(cdsel(&r, "moment"), 1.0);

        let mut g = tempfile::NamedTempFile::new().unwrap();
        writeln!(g, r#"{{"name":"a","rank_position":2}}"#).unwrap();
        writeln!(g, r#"{{"name":"b","rank_position":1}}"#).unwrap();
        assert_eq!(ProjectRanking::load(g.path()).unwrap().projects()[0].name, "b");

        let mut h = tempfile::NamedTempFile::new().unwrap();
        writeln!(h, r#"{{"name":"a","rank_position":1}}"#).unwrap();
        writeln!(h, r#"{{"name":"b"}}"#).unwrap();
        assert!(matches!(
            ProjectRanking::load(h.path()),
            Err(PopularityError::MixedRanking(2))
        ));
    }

    proptest! {
        #[test]
        fn monotone_and_bounded(z in 1usize..60, mask in any::<u64>(), extra in 0usize..60) {
            let selected: Vec<usize> = (1..=z).filter(|i| mask >> (i % 64) & 1 == 1).collect();
            let base = cdsel(&ranking_of(z, &selected), "t");
            prop_assert!(base >= 0.0);
            let upper: f64 = (1..=z).map(|i| (z - i) as f64 / ((i + 1) as f64).log2()).sum();
            prop_assert!(base <= upper + 1e-9);
            let add = extra % z + 1;
            let mut more = selected.clone();
            if !more.contains(&add) { more.push(add); }
            prop_assert!(cdsel(&ranking_of(z, &more), "t") >= base);
        }
    }

    fn ranking_of(z: usize, selected: &[usize]) -> ProjectRanking {
        ProjectRanking::new(
            (1..=z)
                .map(|i| {
                    let deps: Vec<&str> = if selected.contains(&i) { vec!["t"] } else { vec![] };
                    ProjectRecord::new(&format!("p{i}"), i, deps)
                })
                .collect(),
        )
        .unwrap()
    }
}
