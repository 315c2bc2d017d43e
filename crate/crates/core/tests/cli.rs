//! Command-line behavior: exit codes, messages and file outputs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use techrank::extraction::RankedList;
use techrank::metrics::{Report, RANKING_COLUMNS};

fn data(file: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(file)
        .to_str()
        .unwrap()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_techrank"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", stderr(&out));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn barcode_search(dir: &Path, engines: &str) -> (Output, PathBuf) {
    let out_path = dir.join("fused.json");
    let out = run(&[
        "search",
        "--registry",
        &data("registry.jsonl"),
        "--query",
        "extract barcode from image",
        "--engines",
        engines,
        "--fixtures",
        &data("fixtures"),
        "--out",
        p(&out_path),
    ]);
    (out, out_path)
}

fn trained_model(dir: &Path) -> PathBuf {
    let dataset = dir.join("pairs.csv");
    let model = dir.join("model.json");
    ok(&[
        "dataset",
        "build",
        "--registry",
        &data("registry.jsonl"),
        "--projects",
        &data("projects.jsonl"),
        "--alternatives",
        &data("alternatives.jsonl"),
        "--out",
        p(&dataset),
    ]);
    ok(&["train", "--dataset", p(&dataset), "--out", p(&model), "--trees", "50"]);
    model
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["search"]).status.code(), Some(1));
    let missing = run(&[
        "registry",
        "ingest",
        "--in",
        "/nonexistent/registry.jsonl",
        "--out",
        "/tmp/x.jsonl",
    ]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn search_tolerates_a_failing_engine() {
    let tmp = tempfile::tempdir().unwrap();
    let (out, path) = barcode_search(tmp.path(), "npm,npmsearch,google,bing");
    assert!(out.status.success());
    assert!(stderr(&out).contains("engine npmsearch failed"));
    let fused = RankedList::load(&path).unwrap();
    assert_eq!(fused.names()[..2], ["quagga", "bytescout"]);
    assert_eq!(fused.query.as_deref(), Some("extract barcode from image"));
}

#[test]
fn search_fails_when_every_engine_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let (out, _) = barcode_search(tmp.path(), "npmsearch");
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no results from any engine"));
}

#[test]
fn rank_reports_empty_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let model = trained_model(tmp.path());
    let candidates = tmp.path().join("dates.json");
    RankedList::from_names("fused", &["moment", "date-fns", "dayjs"])
        .save(&candidates)
        .unwrap();
    let args = |scenario: &'static str, out: &Path| -> Vec<String> {
        [
            "rank",
            "--model",
            p(&model),
            "--registry",
            &data("registry.jsonl"),
            "--candidates",
            p(&candidates),
            "--scenario",
            scenario,
            "--out",
            p(out),
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    };
    let ranked = tmp.path().join("ranked.json");
    let a = args("all", &ranked);
    ok(&a.iter().map(String::as_str).collect::<Vec<_>>());
    let mut names = RankedList::load(&ranked)
        .unwrap()
        .names()
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>();
    names.sort();
    assert_eq!(names, ["date-fns", "dayjs", "moment"]);

    let b = args("onlyweb", &tmp.path().join("none.json"));
    let out = run(&b.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no candidates for scenario onlyweb"));
}

#[test]
fn ranking_evaluation_and_comparison() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs = ["model", "fused", "reference"].map(|d| {
        let path = tmp.path().join(d);
        std::fs::create_dir(&path).unwrap();
        path
    });
    let cases = [
        (["a", "b", "c", "d"], ["b", "a", "c", "d"], ["a", "b", "c", "d"]),
        (["x", "y", "z", "w"], ["z", "y", "x", "w"], ["x", "z", "y", "w"]),
        (["m", "n", "o", "q"], ["q", "o", "n", "m"], ["m", "n", "q", "o"]),
    ];
    for (i, (model, fused, reference)) in cases.iter().enumerate() {
        for (dir, names) in dirs.iter().zip([model, fused, reference]) {
            RankedList::from_names("x", names)
                .save(dir.join(format!("case{i}.json")))
                .unwrap();
        }
    }
    let reports: Vec<PathBuf> = dirs[..2]
        .iter()
        .map(|dir| {
            let out = tmp
                .path()
                .join(format!("{}.tsv", dir.file_name().unwrap().to_str().unwrap()));
            ok(&[
                "eval",
                "ranking",
                "--predicted",
                p(dir),
                "--reference",
                p(&dirs[2]),
                "--out",
                p(&out),
            ]);
            out
        })
        .collect();
    let model_report = Report::load(&reports[0]).unwrap();
    assert_eq!(model_report.columns, RANKING_COLUMNS);
    let mean = model_report.mean_row("model").unwrap();
    let mrr = mean.values[RANKING_COLUMNS.iter().position(|c| *c == "MRR").unwrap()].unwrap();
    assert_eq!(mrr, 1.0);

    let out = ok(&["eval", "compare", "--a", p(&reports[0]), "--b", p(&reports[1])]);
    let table = String::from_utf8(out.stdout).unwrap();
    let header = table.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "metric\tpairs\tn\tmean_a\tmean_b\tW\tp\tp_method");
    assert!(table.lines().any(|l| l.starts_with("MRR\t3\t")), "{table}");
}

#[test]
fn kfold_partitions_groups() {
    let tmp = tempfile::tempdir().unwrap();
    let dataset = tmp.path().join("pairs.csv");
    ok(&[
        "dataset",
        "build",
        "--registry",
        &data("registry.jsonl"),
        "--projects",
        &data("projects.jsonl"),
        "--alternatives",
        &data("alternatives.jsonl"),
        "--out",
        p(&dataset),
    ]);
    let folds_path = tmp.path().join("folds.json");
    ok(&[
        "kfold",
        "--dataset",
        p(&dataset),
        "--k",
        "3",
        "--seed",
        "4",
        "--out",
        p(&folds_path),
    ]);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&folds_path).unwrap()).unwrap();
    assert_eq!(v["k"], 3);
    let mut all: Vec<String> = v["folds"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|f| f.as_array().unwrap().iter().map(|g| g.as_str().unwrap().to_string()))
        .collect();
    all.sort();
    assert_eq!(all.len(), 6);
    all.dedup();
    assert_eq!(all.len(), 6);
}

#[test]
fn ingest_skips_invalid_records() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in.jsonl");
    std::fs::write(
        &input,
        concat!(
            r#"{"name":"quagga","repository_url":"https://www.npmjs.com/package/quagga"}"#,
            "\n",
            r#"{"name":"","repository_url":"https://example.org/x"}"#,
            "\n",
        ),
    )
    .unwrap();
    let output = tmp.path().join("out.jsonl");
    let out = ok(&["registry", "ingest", "--in", p(&input), "--out", p(&output)]);
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
    assert_eq!(std::fs::read_to_string(&output).unwrap().lines().count(), 1);
}
