//! Training data for the pairwise ranker.
//!
//! Alternative technologies form groups. Each group is ordered by CDSel into a
//! training ranking, its feature vectors are scaled within the group, and every
//! ordered pair of members becomes one labeled instance whose input is the
//! concatenation of the two scaled vectors.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ltr::Scenario;
use crate::popularity::{cdsel_all, ProjectRanking};
use crate::registry::{canonical_name, Context, Registry, TechnologyRecord};

pub const MIN_GROUP: usize = 2;
pub const MAX_GROUP: usize = 6;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("negative feature value {value} in column {column}")]
    NegativeFeature { column: usize, value: f64 },
    #[error("non-finite feature value in column {0}")]
    NonFinite(usize),
    #[error("feature vectors differ in length ({0} vs {1})")]
    Ragged(usize, usize),
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error("cannot write dataset: {0}")]
    Write(String),
    #[error("k must be between 2 and the number of groups ({groups}), got {k}")]
    BadK { k: usize, groups: usize },
}

/// How feature columns are brought into [0, 1] within a group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Scaling {
    /// Divide by the column maximum.
    #[default]
    #[serde(rename = "max")]
    MaxDivision,
    /// `(x − min) / (max − min)`.
    #[serde(rename = "minmax")]
    MinMax,
}

impl fmt::Display for Scaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scaling::MaxDivision => "max",
            Scaling::MinMax => "minmax",
        })
    }
}

impl FromStr for Scaling {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max" => Ok(Scaling::MaxDivision),
            "minmax" => Ok(Scaling::MinMax),
            other => Err(format!("unknown scaling {other:?} (expected max or minmax)")),
        }
    }
}

/// Scales each column of a comparison group.
///
/// A column whose maximum is zero (or, for min-max, whose range is zero)
/// scales to zeros.
pub fn scale_features(group: &[Vec<f64>], scaling: Scaling) -> Result<Vec<Vec<f64>>, DatasetError> {
    let Some(first) = group.first() else {
        return Ok(Vec::new());
    };
    let width = first.len();
    for row in group {
        if row.len() != width {
            return Err(DatasetError::Ragged(width, row.len()));
        }
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(DatasetError::NonFinite(j));
            }
            if v < 0.0 {
                return Err(DatasetError::NegativeFeature { column: j, value: v });
            }
        }
    }
    let mut out = vec![vec![0.0; width]; group.len()];
    for j in 0..width {
        let max = group.iter().map(|r| r[j]).fold(0.0, f64::max);
        let min = group.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min);
        for (i, row) in group.iter().enumerate() {
            out[i][j] = match scaling {
                Scaling::MaxDivision if max > 0.0 => row[j] / max,
                Scaling::MinMax if max > min => (row[j] - min) / (max - min),
                _ => 0.0,
            };
        }
    }
    Ok(out)
}

/// Raw features of a record in `feature_names` order; missing features are 0.
pub fn feature_vector(record: &TechnologyRecord, feature_names: &[String]) -> (Vec<f64>, Vec<String>) {
    let mut missing = Vec::new();
    let v = feature_names
        .iter()
        .map(|f| match record.features.get(f) {
            Some(&v) => v,
            None => {
                missing.push(f.clone());
                0.0
            }
        })
        .collect();
    (v, missing)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub name: String,
    pub cdsel: f64,
    pub context: Context,
    pub features: Vec<f64>,
}

/// A group of alternatives ordered by CDSel, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRanking {
    pub group_id: String,
    pub members: Vec<Member>,
    pub contexts: BTreeSet<Context>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairInstance {
    pub group_id: String,
    pub left: String,
    pub right: String,
    pub x: Vec<f64>,
    pub label: u8,
}

/// Alternative sets, symmetric after [`Alternatives::new`] or loading.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Alternatives {
    neighbours: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Debug, Deserialize)]
struct AlternativesLine {
    name: String,
    #[serde(default)]
    alternatives: Vec<String>,
}

impl Alternatives {
    pub fn new<I, S, J>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, J)>,
        S: AsRef<str>,
        J: IntoIterator<Item = S>,
    {
        let mut neighbours: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (name, alts) in entries {
            let name = canonical_name(name.as_ref());
            neighbours.entry(name.clone()).or_default();
            for alt in alts {
                let alt = canonical_name(alt.as_ref());
                if alt == name || alt.is_empty() {
                    continue;
                }
                neighbours.entry(name.clone()).or_default().insert(alt.clone());
                neighbours.entry(alt).or_default().insert(name.clone());
            }
        }
        Alternatives { neighbours }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let path = path.as_ref();
        let read_err = |message: String| DatasetError::Read {
            path: path.display().to_string(),
            message,
        };
        let file = std::fs::File::open(path).map_err(|e| read_err(e.to_string()))?;
        let mut entries = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| read_err(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let l: AlternativesLine =
                serde_json::from_str(&line).map_err(|e| read_err(format!("line {}: {e}", i + 1)))?;
            entries.push((l.name, l.alternatives));
        }
        Ok(Self::new(entries))
    }

    /// Connected components of the alternative relation, each sorted by name.
    pub fn groups(&self) -> Vec<Vec<String>> {
        let mut seen = BTreeSet::new();
        let mut groups = Vec::new();
        for start in self.neighbours.keys() {
            if seen.contains(start) {
                continue;
            }
            let mut component = BTreeSet::new();
            let mut stack = vec![start.clone()];
            while let Some(n) = stack.pop() {
                if !component.insert(n.clone()) {
                    continue;
                }
                if let Some(ns) = self.neighbours.get(&n) {
                    stack.extend(ns.iter().filter(|m| !component.contains(*m)).cloned());
                }
            }
            seen.extend(component.iter().cloned());
            groups.push(component.into_iter().collect());
        }
        groups
    }
}

#[derive(Debug, Clone, Default)]
pub struct BuildOutput {
    pub rankings: Vec<TrainingRanking>,
    pub feature_names: Vec<String>,
    pub warnings: Vec<String>,
}

/// Computes CDSel from the project ranking, then builds training rankings.
pub fn build_training_rankings(
    ranking: &ProjectRanking,
    alternatives: &Alternatives,
    registry: &Registry,
    scenario: Scenario,
) -> BuildOutput {
    build_training_rankings_from_scores(&cdsel_all(ranking), alternatives, registry, scenario)
}

/// Builds training rankings from precomputed CDSel values (absent → 0).
pub fn build_training_rankings_from_scores(
    scores: &BTreeMap<String, f64>,
    alternatives: &Alternatives,
    registry: &Registry,
    scenario: Scenario,
) -> BuildOutput {
    let feature_names = registry.feature_names();
    let mut out = BuildOutput {
        feature_names: feature_names.clone(),
        ..Default::default()
    };
    for group in alternatives.groups() {
        let mut members = Vec::new();
        for name in &group {
            let Some(record) = registry.get(name) else {
                out.warnings.push(format!("{name:?} is not in the registry; dropped"));
                continue;
            };
            if !scenario.allows(record.context) {
                continue;
            }
            let (features, missing) = feature_vector(record, &feature_names);
            if !missing.is_empty() {
                out.warnings
                    .push(format!("{name:?} lacks features {}; using 0", missing.join(", ")));
            }
            members.push(Member {
                name: record.name.clone(),
                cdsel: scores.get(&record.name).copied().unwrap_or(0.0),
                context: record.context,
                features,
            });
        }
        if members.len() < MIN_GROUP {
            continue;
        }
        members.sort_by(|a, b| b.cdsel.total_cmp(&a.cdsel).then_with(|| a.name.cmp(&b.name)));
        members.truncate(MAX_GROUP);
        out.rankings.push(TrainingRanking {
            group_id: members[0].name.clone(),
            contexts: members.iter().map(|m| m.context).collect(),
            members,
        });
    }
    out
}

/// Instances for every ordered pair of distinct members.
///
/// The label is 1 when the left member precedes the right one. Equal CDSel
/// values keep list order and produce a warning.
pub fn make_pair_instances(
    ranking: &TrainingRanking,
    scaling: Scaling,
) -> Result<(Vec<PairInstance>, Vec<String>), DatasetError> {
    let raw: Vec<Vec<f64>> = ranking.members.iter().map(|m| m.features.clone()).collect();
    let scaled = scale_features(&raw, scaling)?;
    let mut warnings = Vec::new();
    let mut instances = Vec::new();
    let members = &ranking.members;
    for (i, a) in members.iter().enumerate() {
        for (j, b) in members.iter().enumerate() {
            if i == j {
                continue;
            }
            if i < j && a.cdsel == b.cdsel {
                warnings.push(format!(
                    "group {}: {} and {} tie on CDSel; labeled by list order",
                    ranking.group_id, a.name, b.name
                ));
            }
            let mut x = scaled[i].clone();
            x.extend_from_slice(&scaled[j]);
            instances.push(PairInstance {
                group_id: ranking.group_id.clone(),
                left: a.name.clone(),
                right: b.name.clone(),
                x,
                label: u8::from(i < j),
            });
        }
    }
    Ok((instances, warnings))
}

/// Pair instances plus the feature header they were built with.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub scaling: Scaling,
    pub instances: Vec<PairInstance>,
}

impl Dataset {
    pub fn from_rankings(
        rankings: &[TrainingRanking],
        feature_names: Vec<String>,
        scaling: Scaling,
    ) -> Result<(Dataset, Vec<String>), DatasetError> {
        let mut instances = Vec::new();
        let mut warnings = Vec::new();
        for r in rankings {
            let (inst, w) = make_pair_instances(r, scaling)?;
            instances.extend(inst);
            warnings.extend(w);
        }
        Ok((
            Dataset {
                feature_names,
                scaling,
                instances,
            },
            warnings,
        ))
    }

    /// Group ids in order of first appearance.
    pub fn group_ids(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        self.instances
            .iter()
            .filter(|i| seen.insert(i.group_id.as_str()))
            .map(|i| i.group_id.clone())
            .collect()
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["group_id", "left", "right", "label"].map(String::from).into();
        h.extend(self.feature_names.iter().map(|f| format!("left_{f}")));
        h.extend(self.feature_names.iter().map(|f| format!("right_{f}")));
        h
    }

    /// CSV with a leading `# scaling=<method>` comment line.
    pub fn write_csv(&self, mut out: impl Write) -> Result<(), DatasetError> {
        let werr = |e: &dyn fmt::Display| DatasetError::Write(e.to_string());
        writeln!(out, "# scaling={}", self.scaling).map_err(|e| werr(&e))?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header()).map_err(|e| werr(&e))?;
        for inst in &self.instances {
            let mut row = vec![
                inst.group_id.clone(),
                inst.left.clone(),
                inst.right.clone(),
                inst.label.to_string(),
            ];
            row.extend(inst.x.iter().map(|v| v.to_string()));
            w.write_record(&row).map_err(|e| werr(&e))?;
        }
        w.flush().map_err(|e| werr(&e))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DatasetError> {
        let file = std::fs::File::create(path).map_err(|e| DatasetError::Write(e.to_string()))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let path = path.as_ref();
        let read_err = |message: String| DatasetError::Read {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| read_err(e.to_string()))?;
        let scaling = text
            .lines()
            .next()
            .and_then(|l| l.strip_prefix("# scaling="))
            .map(|s| s.trim().parse::<Scaling>())
            .transpose()
            .map_err(read_err)?
            .unwrap_or_default();
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| read_err(e.to_string()))?
            .iter()
            .map(String::from)
            .collect();
        if header.len() < 4
            || header[..4] != ["group_id", "left", "right", "label"]
            || !(header.len() - 4).is_multiple_of(2)
        {
            return Err(read_err("unexpected header".into()));
        }
        let n = (header.len() - 4) / 2;
        let feature_names: Vec<String> = header[4..4 + n]
            .iter()
            .map(|h| h.strip_prefix("left_").unwrap_or(h).to_string())
            .collect();
        let mut instances = Vec::new();
        for (row_no, record) in reader.records().enumerate() {
            let record = record.map_err(|e| read_err(e.to_string()))?;
            let bad = |what: &str| read_err(format!("row {}: bad {what}", row_no + 1));
            let label: u8 = record[3].parse().map_err(|_| bad("label"))?;
            if label > 1 {
                return Err(bad("label"));
            }
            let x = record
                .iter()
                .skip(4)
                .map(|v| v.parse::<f64>().ok().filter(|v| v.is_finite()))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| bad("feature value"))?;
            instances.push(PairInstance {
                group_id: record[0].to_string(),
                left: record[1].to_string(),
                right: record[2].to_string(),
                x,
                label,
            });
        }
        Ok(Dataset {
            feature_names,
            scaling,
            instances,
        })
    }
}

/// Assigns groups to `k` folds after a seeded shuffle.
pub fn kfold(group_ids: &[String], k: usize, seed: u64) -> Result<Vec<Vec<String>>, DatasetError> {
    if k < 2 || k > group_ids.len() {
        return Err(DatasetError::BadK {
            k,
            groups: group_ids.len(),
        });
    }
    let mut ids = group_ids.to_vec();
    ids.sort();
    ids.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let mut folds = vec![Vec::new(); k];
    for (i, id) in ids.into_iter().enumerate() {
        folds[i % k].push(id);
    }
    for f in &mut folds {
        f.sort();
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;

    macro_rules! assert_close {
        ($a:expr, $b:expr, $tol:expr) => {{
            let (a, b): (f64, f64) = ($a, $b);
            assert!((a - b).abs() <= $tol, "{a} vs {b}");
        }};
    }

    fn registry() -> Registry {
        let rec = |n: &str, f: [f64; 3], c: Context| {
            TechnologyRecord::new(n, &format!("https://www.npmjs.com/package/{n}"))
                .with_context(c)
                .with_feature("a", f[0])
                .with_feature("b", f[1])
                .with_feature("c", f[2])
        };
        Registry::from_records([
            rec("moment", [1.0, 10.0, 5.0], Context::NoContext),
            rec("date-fns", [1.0, 13.0, 5.0], Context::NoContext),
            rec("momentjs", [0.0, 2.0, 1.0], Context::Node),
        ])
        .0
    }

    fn paper_scores() -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("moment".to_string(), 396.192),
            ("date-fns".to_string(), 15.646),
            ("momentjs".to_string(), 1.791),
        ])
    }

    fn date_group() -> Alternatives {
        Alternatives::new([("moment", vec!["date-fns", "momentjs"])])
    }

    #[test]
    fn max_division_scaling() {
        let s = scale_features(&[vec![1.0, 10.0, 5.0], vec![1.0, 13.0, 5.0]], Scaling::MaxDivision).unwrap();
        assert_close!(s[0][0], 1.0, 1e-12);
        assert_close!(s[0][1], 10.0 / 13.0, 1e-12);
        assert_close!(s[0][1], 0.769, 0.0005);
        assert_close!(s[0][2], 1.0, 1e-12);
        assert_eq!(
            scale_features(&[vec![4.0, 2.0]], Scaling::MaxDivision).unwrap(),
            [[1.0, 1.0]]
        );
        assert_eq!(
            scale_features(&[vec![0.0], vec![0.0]], Scaling::MaxDivision).unwrap(),
            [[0.0], [0.0]]
        );
    }

    #[test]
    fn min_max_scaling() {
        let s = scale_features(&[vec![2.0, 3.0], vec![4.0, 3.0], vec![3.0, 3.0]], Scaling::MinMax).unwrap();
        assert_eq!(s, [[0.0, 0.0], [1.0, 0.0], [0.5, 0.0]]);
    }

    #[test]
    fn scaling_rejects_bad_input() {
        assert!(matches!(
            scale_features(&[vec![1.0], vec![-1.0]], Scaling::MaxDivision),
            Err(DatasetError::NegativeFeature { .. })
        ));
        assert!(matches!(
            scale_features(&[vec![1.0], vec![1.0, 2.0]], Scaling::MaxDivision),
            Err(DatasetError::Ragged(..))
        ));
    }

    #[test]
    fn paper_group_orders_by_cdsel() {
        let out = build_training_rankings_from_scores(&paper_scores(), &date_group(), &registry(), Scenario::All);
        assert_eq!(out.rankings.len(), 1);
        let names: Vec<&str> = out.rankings[0].members.iter().map(|m| m.name.as_str()).collect();
        assert_eq!(names, ["moment", "date-fns", "momentjs"]);
        assert_eq!(out.feature_names, ["a", "b", "c"]);

        let (pairs, warnings) = make_pair_instances(&out.rankings[0], Scaling::MaxDivision).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(pairs.len(), 6);
        assert_eq!(pairs.iter().map(|p| p.label as usize).sum::<usize>(), 3);
        let md = pairs
            .iter()
            .find(|p| p.left == "moment" && p.right == "date-fns")
            .unwrap();
        assert_eq!(md.label, 1);
        assert_eq!(
            pairs
                .iter()
                .find(|p| p.left == "date-fns" && p.right == "moment")
                .unwrap()
                .label,
            0
        );
        assert_eq!(md.x.len(), 6);
        assert_close!(md.x[1], 10.0 / 13.0, 1e-12);
    }

    #[test]
    fn scenario_filters_members() {
        let out = build_training_rankings_from_scores(&paper_scores(), &date_group(), &registry(), Scenario::OnlyNode);
        assert!(out.rankings.is_empty());
        let out = build_training_rankings_from_scores(&paper_scores(), &date_group(), &registry(), Scenario::Web);
        assert_eq!(out.rankings[0].members.len(), 2);
    }

    #[test]
    fn singletons_dropped_and_unknown_warned() {
        let alts = Alternatives::new([("moment", vec!["not-registered"])]);
        let out = build_training_rankings_from_scores(&paper_scores(), &alts, &registry(), Scenario::All);
        assert!(out.rankings.is_empty());
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn large_groups_truncated_to_top_six() {
        let names: Vec<String> = (0..8).map(|i| format!("t{i}")).collect();
        let records = names
            .iter()
            .map(|n| TechnologyRecord::new(n, &format!("https://www.npmjs.com/package/{n}")).with_feature("f", 1.0));
        let (reg, _) = Registry::from_records(records);
        // Scores are deliberately not monotone in the name.
        let values = [3.0, 8.0, 1.0, 7.0, 6.0, 2.0, 5.0, 4.0];
        let scores: BTreeMap<String, f64> = names.iter().cloned().zip(values).collect();
        let alts = Alternatives::new([(names[0].clone(), names[1..].to_vec())]);
        let out = build_training_rankings_from_scores(&scores, &alts, &reg, Scenario::All);
        let kept: Vec<&str> = out.rankings[0].members.iter().map(|m| m.name.as_str()).collect();
        let mut expected: Vec<(f64, &str)> = values.iter().copied().zip(names.iter().map(String::as_str)).collect();
        expected.sort_by(|a, b| b.0.total_cmp(&a.0));
        let expected: Vec<&str> = expected.iter().take(6).map(|e| e.1).collect();
        assert_eq!(kept, expected);
        assert_eq!(out.rankings[0].group_id, "t1");
    }

    #[test]
    fn tied_cdsel_warns() {
        let scores = BTreeMap::from([("moment".to_string(), 5.0), ("date-fns".to_string(), 5.0)]);
        let alts = Alternatives::new([("moment", vec!["date-fns"])]);
        let out = build_training_rankings_from_scores(&scores, &alts, &registry(), Scenario::All);
        let (pairs, warnings) = make_pair_instances(&out.rankings[0], Scaling::MaxDivision).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn alternatives_closure_and_components() {
        let alts = Alternatives::new([("a", vec!["b"]), ("c", vec!["b"]), ("x", vec!["y"]), ("z", vec![])]);
        assert_eq!(
            alts.groups(),
            vec![vec!["a", "b", "c"], vec!["x", "y"], vec!["z"]]
                .into_iter()
                .map(|g| g.into_iter().map(String::from).collect::<Vec<_>>())
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn dataset_csv_round_trip() {
        let out = build_training_rankings_from_scores(&paper_scores(), &date_group(), &registry(), Scenario::All);
        let (ds, _) = Dataset::from_rankings(&out.rankings, out.feature_names, Scaling::MaxDivision).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(
            text.starts_with("# scaling=max\ngroup_id,left,right,label,left_a,left_b,left_c,right_a,right_b,right_c\n")
        );
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), &text).unwrap();
        assert_eq!(Dataset::load(f.path()).unwrap(), ds);
    }

    #[test]
    fn kfold_partitions_groups() {
        let ids: Vec<String> = (0..11).map(|i| format!("g{i}")).collect();
        let folds = kfold(&ids, 5, 7).unwrap();
        assert_eq!(folds.len(), 5);
        let mut all: Vec<String> = folds.concat();
        all.sort();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(all, sorted);
        assert!(folds.iter().all(|f| f.len() == 2 || f.len() == 3));
        assert_eq!(folds, kfold(&ids, 5, 7).unwrap());
        assert!(kfold(&ids, 1, 0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn scaled_in_unit_interval_and_scale_invariant(
                rows in proptest::collection::vec(proptest::collection::vec(0.0f64..1e6, 4), 1..7),
                c in 0.001f64..1000.0,
            ) {
                let s = scale_features(&rows, Scaling::MaxDivision).unwrap();
                for j in 0..4 {
                    let col: Vec<f64> = s.iter().map(|r| r[j]).collect();
                    prop_assert!(col.iter().all(|v| (0.0..=1.0).contains(v)));
                    if rows.iter().any(|r| r[j] > 0.0) {
                        prop_assert!(col.contains(&1.0));
                    }
                }
                let scaled_rows: Vec<Vec<f64>> = rows.iter().map(|r| { let mut r = r.clone(); r[0] *= c; r }).collect();
                let s2 = scale_features(&scaled_rows, Scaling::MaxDivision).unwrap();
                for (a, b) in s.iter().zip(&s2) {
                    prop_assert!((a[0] - b[0]).abs() < 1e-12);
                }
            }

            #[test]
            fn labels_are_antisymmetric(k in 2usize..7, seed in any::<u64>()) {
                let members: Vec<Member> = (0..k)
                    .map(|i| Member {
                        name: format!("m{i}"),
                        cdsel: (k - i) as f64 + (seed % 7) as f64,
                        context: Context::NoContext,
                        features: vec![(i as f64 * 3.7 + seed as f64 % 5.0).abs(), 1.0],
                    })
                    .collect();
                let r = TrainingRanking { group_id: "g".into(), contexts: BTreeSet::new(), members };
                let (pairs, _) = make_pair_instances(&r, Scaling::MaxDivision).unwrap();
                prop_assert_eq!(pairs.len(), k * (k - 1));
                prop_assert_eq!(pairs.iter().map(|p| p.label as usize).sum::<usize>(), k * (k - 1) / 2);
                for p in &pairs {
                    let rev = pairs.iter().find(|q| q.left == p.right && q.right == p.left).unwrap();
                    prop_assert_eq!(p.label, 1 - rev.label);
                    prop_assert!(p.x.iter().all(|v| (0.0..=1.0).contains(v)));
                }
            }
        }
    }
}
