//! Per-query evaluation reports as tab-separated text.
//!
//! A report starts with `# key=value` comment lines, then a header
//! `method  query  <metric>...`, then one row per (method, query) and a
//! closing [`MEAN_ROW`] per method. Values have three decimals; `NA` marks
//! an undefined value.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use super::ir::{average_precision_at_k, dcg, hits_at_k, ndcg, precision_at_k, reciprocal_rank, srcc};
use super::stats::{wilcoxon_signed_rank, Wilcoxon};
use super::{query_key, Judgments, MetricError, Normalization};
use crate::extraction::RankedList;

pub const MEAN_ROW: &str = "MEAN";

pub const RETRIEVAL_COLUMNS: [&str; 13] = [
    "H@1", "H@5", "H@10", "H@20", "P@5", "P@10", "P@20", "nD@5", "nD@10", "nD@20", "M@5", "M@10", "M@20",
];

pub const RANKING_COLUMNS: [&str; 4] = ["M@3", "M@5", "SRCC", "MRR"];

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub method: String,
    pub query: String,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub meta: BTreeMap<String, String>,
    pub columns: Vec<String>,
    /// Per-query rows followed by each method's mean row.
    pub rows: Vec<ReportRow>,
    pub warnings: Vec<String>,
}

impl Report {
    fn new(columns: &[&str]) -> Self {
        Report {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Default::default()
        }
    }

    /// Appends per-query rows of one method plus their mean row.
    fn push_method(&mut self, method: &str, rows: Vec<(String, Vec<Option<f64>>)>) {
        let width = self.columns.len();
        let mut means = Vec::with_capacity(width);
        for c in 0..width {
            let defined: Vec<f64> = rows.iter().filter_map(|(_, v)| v[c]).collect();
            means.push((!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64));
        }
        for (query, values) in rows {
            self.rows.push(ReportRow {
                method: method.to_string(),
                query,
                values,
            });
        }
        self.rows.push(ReportRow {
            method: method.to_string(),
            query: MEAN_ROW.to_string(),
            values: means,
        });
    }

    pub fn methods(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.rows
            .iter()
            .map(|r| r.method.as_str())
            .filter(|m| seen.insert(*m))
            .collect()
    }

    pub fn mean_row(&self, method: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.method == method && r.query == MEAN_ROW)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}={v}");
        }
        let _ = writeln!(out, "method\tquery\t{}", self.columns.join("\t"));
        for row in &self.rows {
            let _ = write!(out, "{}\t{}", row.method, row.query);
            for v in &row.values {
                match v {
                    Some(x) => {
                        let _ = write!(out, "\t{x:.3}");
                    }
                    None => out.push_str("\tNA"),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, MetricError> {
        let bad = |m: String| MetricError::Report(m);
        let mut report = Report::default();
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let header = loop {
            let Some((_, line)) = lines.next() else {
                return Err(bad("report has no header".to_string()));
            };
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((k, v)) = meta.trim().split_once('=') {
                    report.meta.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            break line;
        };
        let cols: Vec<&str> = header.split('\t').collect();
        if cols.len() < 3 || cols[0] != "method" || cols[1] != "query" {
            return Err(bad(format!("unexpected report header {header:?}")));
        }
        report.columns = cols[2..].iter().map(|c| c.to_string()).collect();
        for (i, line) in lines {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != cols.len() {
                return Err(bad(format!(
                    "line {}: expected {} fields, got {}",
                    i + 1,
                    cols.len(),
                    fields.len()
                )));
            }
            let values = fields[2..]
                .iter()
                .map(|f| match *f {
                    "NA" => Ok(None),
                    v => v
                        .parse::<f64>()
                        .map(Some)
                        .map_err(|_| bad(format!("line {}: bad value {v:?}", i + 1))),
                })
                .collect::<Result<_, _>>()?;
            report.rows.push(ReportRow {
                method: fields[0].to_string(),
                query: fields[1].to_string(),
                values,
            });
        }
        Ok(report)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MetricError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_tsv())
            .map_err(|e| MetricError::Report(format!("cannot write {}: {e}", path.display())))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MetricError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| MetricError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }
}

/// Scores every method's runs against the judgments.
///
/// A run's method is its `source` and its query is its `query` field. Only
/// judged queries with at least one relevant item are evaluated; a method
/// without a run for such a query is scored on an empty ranking.
pub fn evaluate_retrieval(
    runs: &[RankedList],
    judgments: &Judgments,
    normalization: Normalization,
) -> Result<Report, MetricError> {
    let mut report = Report::new(&RETRIEVAL_COLUMNS);
    report.meta.insert("ndcg".to_string(), normalization.to_string());

    let evaluated: Vec<&str> = judgments.keys().filter(|k| judgments.total_relevant(k) > 0).collect();
    for key in judgments.keys().filter(|k| judgments.total_relevant(k) == 0) {
        report
            .warnings
            .push(format!("query {key:?} has no relevant judgments; not evaluated"));
    }

    let mut by_method: BTreeMap<&str, BTreeMap<String, &RankedList>> = BTreeMap::new();
    for run in runs {
        let Some(query) = &run.query else {
            report
                .warnings
                .push(format!("a {} run has no query; skipped", run.source));
            continue;
        };
        let key = query_key(query);
        if !evaluated.contains(&key.as_str()) {
            report
                .warnings
                .push(format!("{} run for unjudged query {query:?}; skipped", run.source));
            continue;
        }
        if by_method
            .entry(run.source.as_str())
            .or_default()
            .insert(key, run)
            .is_some()
        {
            return Err(MetricError::Report(format!(
                "two {} runs for query {query:?}",
                run.source
            )));
        }
    }

    let empty = RankedList::new("");
    for (method, lists) in &by_method {
        let mut per_query: Vec<(String, Vec<bool>, usize)> = Vec::new();
        for &key in &evaluated {
            let list = lists.get(key).copied().unwrap_or_else(|| {
                report
                    .warnings
                    .push(format!("{method} has no run for {key:?}; scored as empty"));
                &empty
            });
            let rels = judgments.flags(key, &list.names());
            per_query.push((key.to_string(), rels, judgments.total_relevant(key)));
        }
        let mut ndcgs: Vec<[f64; 3]> = Vec::with_capacity(per_query.len());
        for (_, rels, total) in &per_query {
            let mut v = [0.0; 3];
            for (slot, depth) in v.iter_mut().zip([5, 10, 20]) {
                *slot = match normalization {
                    Normalization::PerQueryIdeal => ndcg(rels, *total, depth)?,
                    Normalization::CrossQueryMax => dcg(rels, depth)?,
                };
            }
            ndcgs.push(v);
        }
        if normalization == Normalization::CrossQueryMax {
            for d in 0..3 {
                let max = ndcgs.iter().map(|v| v[d]).fold(0.0, f64::max);
                for v in &mut ndcgs {
                    v[d] = if max > 0.0 { v[d] / max } else { 0.0 };
                }
            }
        }
        let mut rows = Vec::with_capacity(per_query.len());
        for ((key, rels, total), nd) in per_query.iter().zip(&ndcgs) {
            let mut values = Vec::with_capacity(RETRIEVAL_COLUMNS.len());
            for k in [1, 5, 10, 20] {
                values.push(Some(hits_at_k(rels, k)? as f64));
            }
            for k in [5, 10, 20] {
                values.push(Some(precision_at_k(rels, k)?));
            }
            values.extend(nd.iter().map(|&x| Some(x)));
            for k in [5, 10, 20] {
                values.push(Some(average_precision_at_k(rels, *total, k)?));
            }
            let shown = judgments.display_query(key).unwrap_or(key).to_string();
            rows.push((shown, values));
        }
        report.push_method(method, rows);
    }
    Ok(report)
}

/// A predicted ordering and the reference ordering of one group.
#[derive(Debug, Clone)]
pub struct RankingCase {
    pub id: String,
    pub predicted: RankedList,
    pub reference: RankedList,
}

/// Scores predicted rankings against reference rankings.
///
/// M@k treats the reference's top `k` as relevant, MRR its top item, and
/// SRCC compares the orders of the items both lists contain.
pub fn evaluate_ranking(method: &str, cases: &[RankingCase]) -> Result<Report, MetricError> {
    let mut report = Report::new(&RANKING_COLUMNS);
    let mut rows = Vec::with_capacity(cases.len());
    for case in cases {
        let predicted = case.predicted.names();
        let reference = case.reference.names();
        if reference.is_empty() {
            report
                .warnings
                .push(format!("{}: empty reference ranking; skipped", case.id));
            continue;
        }
        let mut values = Vec::with_capacity(4);
        for k in [3, 5] {
            let top: BTreeSet<&str> = reference.iter().take(k).copied().collect();
            let rels: Vec<bool> = predicted.iter().map(|n| top.contains(n)).collect();
            values.push(Some(average_precision_at_k(&rels, top.len(), k)?));
        }
        let ref_set: BTreeSet<&str> = reference.iter().copied().collect();
        let pred_set: BTreeSet<&str> = predicted.iter().copied().collect();
        if ref_set != pred_set {
            report.warnings.push(format!(
                "{}: predicted and reference items differ; SRCC uses the common items",
                case.id
            ));
        }
        let common_pred: Vec<&str> = predicted.iter().copied().filter(|n| ref_set.contains(n)).collect();
        let common_ref: Vec<&str> = reference.iter().copied().filter(|n| pred_set.contains(n)).collect();
        values.push(match srcc(&common_pred, &common_ref) {
            Ok(rho) => Some(rho),
            Err(MetricError::UndefinedCorrelation) => {
                report.warnings.push(format!(
                    "{}: SRCC undefined with {} common items",
                    case.id,
                    common_pred.len()
                ));
                None
            }
            Err(e) => return Err(e),
        });
        let rels: Vec<bool> = predicted.iter().map(|n| *n == reference[0]).collect();
        values.push(Some(reciprocal_rank(&rels)));
        rows.push((case.id.clone(), values));
    }
    report.push_method(method, rows);
    Ok(report)
}

/// Signed-rank comparison of one metric between two methods.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub metric: String,
    pub mean_a: Option<f64>,
    pub mean_b: Option<f64>,
    /// `None` when every paired difference is zero or no pairs exist.
    pub test: Option<Wilcoxon>,
    pub pairs: usize,
}

/// Pairs the per-query rows of `method_a` in `a` with those of `method_b`
/// in `b` by query and tests every shared column.
pub fn compare_reports(a: &Report, method_a: &str, b: &Report, method_b: &str) -> Result<Vec<Comparison>, MetricError> {
    let rows = |r: &'_ Report, m: &str| -> BTreeMap<String, Vec<Option<f64>>> {
        r.rows
            .iter()
            .filter(|row| row.method == m && row.query != MEAN_ROW)
            .map(|row| (row.query.clone(), row.values.clone()))
            .collect()
    };
    let ra = rows(a, method_a);
    let rb = rows(b, method_b);
    if ra.is_empty() {
        return Err(MetricError::Report(format!("no rows for method {method_a:?}")));
    }
    if rb.is_empty() {
        return Err(MetricError::Report(format!("no rows for method {method_b:?}")));
    }
    let mut out = Vec::new();
    for (ca, col) in a.columns.iter().enumerate() {
        let Some(cb) = b.columns.iter().position(|c| c == col) else {
            continue;
        };
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (query, va) in &ra {
            if let (Some(Some(x)), Some(Some(y))) = (va.get(ca), rb.get(query).and_then(|v| v.get(cb))) {
                xs.push(*x);
                ys.push(*y);
            }
        }
        let avg = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
        let test = match wilcoxon_signed_rank(&xs, &ys) {
            Ok(w) => Some(w),
            Err(MetricError::NoInformativePairs) => None,
            Err(e) => return Err(e),
        };
        out.push(Comparison {
            metric: col.clone(),
            mean_a: avg(&xs),
            mean_b: avg(&ys),
            test,
            pairs: xs.len(),
        });
    }
    if out.is_empty() {
        return Err(MetricError::Report("the reports share no metric columns".to_string()));
    }
    Ok(out)
}

/// Tab-separated comparison table.
pub fn comparison_tsv(method_a: &str, method_b: &str, rows: &[Comparison]) -> String {
    let fmt = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{x:.3}"));
    let mut out = format!("# a={method_a}\n# b={method_b}\nmetric\tpairs\tn\tmean_a\tmean_b\tW\tp\tp_method\n");
    for r in rows {
        let (n, w, p, m) = match &r.test {
            Some(t) => (
                t.n.to_string(),
                format!("{:.1}", t.statistic),
                format!("{:.4}", t.p_value),
                t.method.to_string(),
            ),
            None => ("0".to_string(), "NA".to_string(), "NA".to_string(), "NA".to_string()),
        };
        let _ = writeln!(
            out,
            "{}\t{}\t{n}\t{}\t{}\t{w}\t{p}\t{m}",
            r.metric,
            r.pairs,
            fmt(r.mean_a),
            fmt(r.mean_b)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn judgments() -> Judgments {
        let mut j = Judgments::new();
        for (name, rel) in [
            ("quagga", true),
            ("bytescout", true),
            ("jaguar", false),
            ("bc-js", true),
        ] {
            j.insert("extract barcode from image", name, rel);
        }
        j.insert("format dates", "moment", true);
        j.insert("nothing relevant", "x", false);
        j
    }

    fn run(source: &str, query: &str, names: &[&str]) -> RankedList {
        RankedList::from_names(source, names).with_query(query)
    }

    #[test]
    fn retrieval_report_layout() {
        let runs = [
            run(
                "fused",
                "Extract barcode from image",
                &["quagga", "jaguar", "bytescout"],
            ),
            run("fused", "format dates", &["moment"]),
            run("npm", "extract barcode from image", &["jaguar"]),
        ];
        let report = evaluate_retrieval(&runs, &judgments(), Normalization::PerQueryIdeal).unwrap();
        assert_eq!(report.methods(), ["fused", "npm"]);
        let tsv = report.to_tsv();
        let mut lines = tsv.lines();
        assert_eq!(lines.next(), Some("# ndcg=ideal"));
        assert_eq!(
            lines.next(),
            Some("method\tquery\tH@1\tH@5\tH@10\tH@20\tP@5\tP@10\tP@20\tnD@5\tnD@10\tnD@20\tM@5\tM@10\tM@20")
        );
        let fused = &report.rows[0];
        assert_eq!(fused.query, "extract barcode from image");
        assert_eq!(fused.values[0], Some(1.0));
        assert_eq!(fused.values[1], Some(2.0));
        assert_eq!(fused.values[4], Some(0.4));
        // npm lacks a run for "format dates", which is scored as empty.
        let npm_mean = report.mean_row("npm").unwrap();
        assert_eq!(npm_mean.values[0], Some(0.0));
        assert!(report.warnings.iter().any(|w| w.contains("nothing relevant")));
        assert_eq!(Report::parse(&tsv).unwrap().rows.len(), report.rows.len());
    }

    #[test]
    fn cross_query_normalization_uses_the_best_query() {
        let runs = [
            run("fused", "extract barcode from image", &["jaguar", "quagga"]),
            run("fused", "format dates", &["moment"]),
        ];
        let report = evaluate_retrieval(&runs, &judgments(), Normalization::CrossQueryMax).unwrap();
        assert_eq!(report.meta["ndcg"], "cross-query-max");
        let nd5 = |i: usize| report.rows[i].values[7].unwrap();
        assert_eq!(nd5(1), 1.0);
        assert!((nd5(0) - 1.0 / 3f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn duplicate_runs_are_rejected() {
        let runs = [run("npm", "format dates", &["moment"]), run("npm", "Format dates", &[])];
        assert!(evaluate_retrieval(&runs, &judgments(), Normalization::PerQueryIdeal).is_err());
    }

    #[test]
    fn ranking_report() {
        let cases = [
            RankingCase {
                id: "dates".into(),
                predicted: RankedList::from_names("ranked", &["moment", "date-fns", "momentjs"]),
                reference: RankedList::from_names("reference", &["moment", "date-fns", "momentjs"]),
            },
            RankingCase {
                id: "barcodes".into(),
                predicted: RankedList::from_names("ranked", &["b", "a", "c", "d"]),
                reference: RankedList::from_names("reference", &["a", "b", "c", "d"]),
            },
        ];
        let report = evaluate_ranking("gbrank", &cases).unwrap();
        assert_eq!(report.rows[0].values, [Some(1.0), Some(1.0), Some(1.0), Some(1.0)]);
        let row = &report.rows[1].values;
        assert_eq!(row[0], Some(1.0));
        assert!((row[2].unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(row[3], Some(0.5));
        assert_eq!(report.rows[2].query, MEAN_ROW);
        assert_eq!(report.rows[2].values[3], Some(0.75));
    }

    #[test]
    fn comparison_pairs_by_query() {
        let mut a = Report::new(&["X"]);
        let mut b = Report::new(&["X"]);
        a.push_method("m", (1..=5).map(|i| (format!("q{i}"), vec![Some(i as f64)])).collect());
        b.push_method("n", (1..=5).map(|i| (format!("q{i}"), vec![Some(0.0)])).collect());
        let cmp = compare_reports(&a, "m", &b, "n").unwrap();
        assert_eq!(cmp[0].pairs, 5);
        assert_eq!(cmp[0].test.unwrap().p_value, 0.0625);
        let same = compare_reports(&a, "m", &a, "m").unwrap();
        assert!(same[0].test.is_none());
        assert!(compare_reports(&a, "zzz", &b, "n").is_err());
        assert!(comparison_tsv("m", "n", &cmp).contains("X\t5\t5\t3.000\t0.000\t0.0\t0.0625\texact"));
    }
}
