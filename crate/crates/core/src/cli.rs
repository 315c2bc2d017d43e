//! Command-line entry point. Every stage reads and writes files.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::aggregation::borda_fuse;
use crate::dataset::{build_training_rankings, kfold, Alternatives, Dataset, DatasetError, Scaling};
use crate::engines::{LiveConfigFile, ReplayEngine, SearchEngine, SearchError, DEFAULT_MAX_RESULTS};
use crate::extraction::{extract_from_documents, ListError, RankedList};
use crate::ltr::{rank_candidates, train, Hyperparams, LtrError, RankingModel, Scenario};
use crate::metrics::{
    compare_reports, comparison_tsv, evaluate_ranking, evaluate_retrieval, Judgments, MetricError, Normalization,
    RankingCase, Report,
};
use crate::popularity::{PopularityError, ProjectRanking};
use crate::querypipe::{QueryError, QueryOptions, StopWords, DEFAULT_SUFFIX};
use crate::registry::{Registry, RegistryError};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    List(#[from] ListError),
    #[error(transparent)]
    Popularity(#[from] PopularityError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Ltr(#[from] LtrError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("{0}")]
    Io(String),
}

#[derive(Parser)]
#[command(
    name = "techrank",
    version,
    about = "Find and rank software technologies for a task description"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Technology registry maintenance.
    #[command(subcommand)]
    Registry(RegistryCommand),
    /// Meta-search the engines and fuse the extracted technology lists.
    Search(SearchArgs),
    /// Training data construction.
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Train a pairwise ranking model on a dataset.
    Train(TrainArgs),
    /// Rank candidate technologies with a trained model.
    Rank(RankArgs),
    /// Evaluation reports and significance tests.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Split a dataset's groups into k folds.
    Kfold(KfoldArgs),
}

#[derive(Subcommand)]
enum RegistryCommand {
    /// Validate line-delimited technology records and write a clean registry.
    Ingest {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    registry: PathBuf,
    #[arg(long)]
    query: String,
    /// Comma-separated engine ids.
    #[arg(long, value_delimiter = ',', required = true)]
    engines: Vec<String>,
    /// Directory of recorded engine results, one `<id>.json` per engine.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Documents kept per engine.
    #[arg(long, default_value_t = DEFAULT_MAX_RESULTS)]
    top: usize,
    #[arg(long)]
    out: PathBuf,
    /// Also write each engine's extracted list as `<dir>/<id>.json`.
    #[arg(long)]
    per_engine_dir: Option<PathBuf>,
    /// Stop-word file replacing the built-in English list.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Suffix appended to queries for general-purpose engines.
    #[arg(long, default_value = DEFAULT_SUFFIX)]
    suffix: String,
    /// Live engine definitions; engines listed there are queried over HTTP.
    #[arg(long)]
    live_config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum DatasetCommand {
    /// Build pair instances from project dependencies and alternative groups.
    Build {
        #[arg(long)]
        registry: PathBuf,
        #[arg(long)]
        projects: PathBuf,
        #[arg(long)]
        alternatives: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = Scaling::MaxDivision)]
        scaling: Scaling,
        #[arg(long, default_value_t = Scenario::All)]
        scenario: Scenario,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = Hyperparams::default().n_trees)]
    trees: usize,
    #[arg(long, default_value_t = Hyperparams::default().learning_rate)]
    learning_rate: f64,
    #[arg(long, default_value_t = Hyperparams::default().max_depth)]
    max_depth: usize,
    #[arg(long, default_value_t = Hyperparams::default().min_samples_split)]
    min_split: usize,
    #[arg(long, default_value_t = Hyperparams::default().min_samples_leaf)]
    min_leaf: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    registry: PathBuf,
    /// Ranked list of candidates, usually the output of `search`.
    #[arg(long)]
    candidates: PathBuf,
    #[arg(long, default_value_t = Scenario::All)]
    scenario: Scenario,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Score retrieval runs against relevance judgments.
    Retrieval {
        /// Directory of ranked lists; each list's source names its method.
        #[arg(long)]
        runs: PathBuf,
        #[arg(long)]
        judgments: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// `ideal` or `cross-query-max`.
        #[arg(long, default_value = "ideal")]
        ndcg: Normalization,
    },
    /// Score predicted rankings against reference rankings with the same file names.
    Ranking {
        #[arg(long)]
        predicted: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Method label; defaults to the predicted directory name.
        #[arg(long)]
        method: Option<String>,
    },
    /// Signed-rank test per metric between two methods.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Method to take from report a; needed when it holds several.
        #[arg(long)]
        method_a: Option<String>,
        #[arg(long)]
        method_b: Option<String>,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct KfoldArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Runs the command line; returns 0 on success, 1 on usage errors and 2 on
/// data errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Registry(RegistryCommand::Ingest { input, out }) => registry_ingest(&input, &out),
        Command::Search(args) => search(args),
        Command::Dataset(DatasetCommand::Build {
            registry,
            projects,
            alternatives,
            out,
            scaling,
            scenario,
        }) => dataset_build(&registry, &projects, &alternatives, &out, scaling, scenario),
        Command::Train(args) => train_model(args),
        Command::Rank(args) => rank(args),
        Command::Eval(EvalCommand::Retrieval {
            runs,
            judgments,
            out,
            ndcg,
        }) => eval_retrieval(&runs, &judgments, &out, ndcg),
        Command::Eval(EvalCommand::Ranking {
            predicted,
            reference,
            out,
            method,
        }) => eval_ranking(&predicted, &reference, &out, method),
        Command::Eval(EvalCommand::Compare {
            a,
            b,
            method_a,
            method_b,
            out,
        }) => eval_compare(&a, &b, method_a, method_b, out.as_deref()),
        Command::Kfold(args) => kfold_split(args),
    }
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn load_registry(path: &Path) -> Result<Registry, CliError> {
    let (registry, report) = Registry::ingest(path)?;
    for s in &report.skipped {
        eprintln!("warning: {}: line {} skipped: {}", path.display(), s.line, s.reason);
    }
    warn_all(&report.warnings);
    Ok(registry)
}

fn registry_ingest(input: &Path, out: &Path) -> Result<(), CliError> {
    let registry = load_registry(input)?;
    let file = std::fs::File::create(out).map_err(|e| CliError::Io(format!("cannot write {}: {e}", out.display())))?;
    registry.write_jsonl(std::io::BufWriter::new(file))?;
    eprintln!("{} records written to {}", registry.len(), out.display());
    Ok(())
}

fn search(args: SearchArgs) -> Result<(), CliError> {
    if args.top == 0 {
        return Err(CliError::Usage("--top must be at least 1".to_string()));
    }
    if args.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".to_string()));
    }
    let registry = load_registry(&args.registry)?;
    let stopwords = match &args.stopwords {
        Some(p) => StopWords::from_file(p)?,
        None => StopWords::english(),
    };
    let options = QueryOptions {
        stopwords,
        suffix: args.suffix.clone(),
    };
    let live = match &args.live_config {
        Some(p) => LiveConfigFile::load(p)?.engines,
        None => Vec::new(),
    };

    let mut engines: Vec<Arc<dyn SearchEngine>> = Vec::with_capacity(args.engines.len());
    for id in &args.engines {
        if let Some(config) = live.iter().find(|c| &c.id == id) {
            engines.push(live_engine(config.clone(), args.top)?);
            continue;
        }
        let Some(dir) = &args.fixtures else {
            return Err(CliError::Usage(format!(
                "engine {id:?} needs --fixtures or a live config entry"
            )));
        };
        let mut engine = ReplayEngine::load_dir(dir, std::slice::from_ref(id))?.remove(0);
        engine.set_max_results(args.top);
        engines.push(Arc::new(engine));
    }

    let outcome = crate::engines::search_all(&engines, &args.query, &options, args.jobs)?;
    for (id, failure) in &outcome.failures {
        eprintln!("warning: engine {id} failed: {}", failure.message);
    }
    let mut lists = Vec::with_capacity(outcome.results.len());
    for engine in &engines {
        let desc = engine.descriptor();
        let Some(docs) = outcome.results.get(&desc.id) else {
            continue;
        };
        let extraction = extract_from_documents(&registry, docs, desc.kind, &desc.id);
        warn_all(&extraction.warnings);
        lists.push(extraction.list.with_query(&args.query));
    }
    if let Some(dir) = &args.per_engine_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        for list in &lists {
            list.save(dir.join(format!("{}.json", list.source)))?;
        }
    }
    let fused = borda_fuse(&lists).with_query(&args.query);
    fused.save(&args.out)?;
    Ok(())
}

#[cfg(feature = "live")]
fn live_engine(mut config: crate::engines::LiveEngineConfig, top: usize) -> Result<Arc<dyn SearchEngine>, CliError> {
    use crate::engines::{HttpEngine, UreqTransport};
    config.max_results = config.max_results.min(top);
    let engine = HttpEngine::new(config, UreqTransport).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(Arc::new(engine))
}

#[cfg(not(feature = "live"))]
fn live_engine(config: crate::engines::LiveEngineConfig, _top: usize) -> Result<Arc<dyn SearchEngine>, CliError> {
    Err(CliError::Usage(format!(
        "engine {:?} is live but this build has no HTTP support",
        config.id
    )))
}

fn dataset_build(
    registry: &Path,
    projects: &Path,
    alternatives: &Path,
    out: &Path,
    scaling: Scaling,
    scenario: Scenario,
) -> Result<(), CliError> {
    let registry = load_registry(registry)?;
    let ranking = ProjectRanking::load(projects)?;
    let alternatives = Alternatives::load(alternatives)?;
    let built = build_training_rankings(&ranking, &alternatives, &registry, scenario);
    warn_all(&built.warnings);
    let (dataset, warnings) = Dataset::from_rankings(&built.rankings, built.feature_names, scaling)?;
    warn_all(&warnings);
    dataset.save(out)?;
    eprintln!(
        "{} training rankings, {} pair instances written to {}",
        built.rankings.len(),
        dataset.instances.len(),
        out.display()
    );
    Ok(())
}

fn train_model(args: TrainArgs) -> Result<(), CliError> {
    let hp = Hyperparams {
        n_trees: args.trees,
        learning_rate: args.learning_rate,
        max_depth: args.max_depth,
        min_samples_split: args.min_split,
        min_samples_leaf: args.min_leaf,
    };
    hp.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let dataset = Dataset::load(&args.dataset)?;
    let model = train(&dataset, &hp, args.seed)?;
    model.save(&args.out)?;
    Ok(())
}

fn rank(args: RankArgs) -> Result<(), CliError> {
    if args.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".to_string()));
    }
    let model = RankingModel::load(&args.model)?;
    let registry = load_registry(&args.registry)?;
    let candidates = RankedList::load(&args.candidates)?;
    let mut records = Vec::with_capacity(candidates.len());
    for name in candidates.names() {
        match registry.get(name) {
            Some(r) => records.push(r.clone()),
            None => eprintln!("warning: candidate {name:?} is not in the registry; dropped"),
        }
    }
    let order: Vec<String> = candidates.names().into_iter().map(String::from).collect();
    let mut ranked = rank_candidates(&model, &records, args.scenario, &order, args.jobs)?;
    ranked.query = candidates.query.clone();
    ranked.save(&args.out)?;
    Ok(())
}

/// `*.json` files of a directory in name order.
fn json_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Io(format!("cannot read {}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::Io(e.to_string()))?.path();
        if path.extension().is_some_and(|x| x == "json") && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn eval_retrieval(runs: &Path, judgments: &Path, out: &Path, ndcg: Normalization) -> Result<(), CliError> {
    let judgments = Judgments::load(judgments)?;
    let lists = json_files(runs)?
        .iter()
        .map(RankedList::load)
        .collect::<Result<Vec<_>, _>>()?;
    let report = evaluate_retrieval(&lists, &judgments, ndcg)?;
    warn_all(&report.warnings);
    report.save(out)?;
    Ok(())
}

fn eval_ranking(predicted: &Path, reference: &Path, out: &Path, method: Option<String>) -> Result<(), CliError> {
    let method = method.unwrap_or_else(|| {
        predicted
            .file_name()
            .map_or_else(|| "predicted".to_string(), |n| n.to_string_lossy().into_owned())
    });
    let mut cases = Vec::new();
    for path in json_files(predicted)? {
        let name = path.file_name().expect("listed files have names");
        let ref_path = reference.join(name);
        if !ref_path.is_file() {
            eprintln!("warning: no reference ranking for {}", path.display());
            continue;
        }
        let id = path
            .file_stem()
            .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        cases.push(RankingCase {
            id,
            predicted: RankedList::load(&path)?,
            reference: RankedList::load(&ref_path)?,
        });
    }
    if cases.is_empty() {
        return Err(CliError::Io(format!(
            "no predicted ranking in {} has a reference in {}",
            predicted.display(),
            reference.display()
        )));
    }
    let report = evaluate_ranking(&method, &cases)?;
    warn_all(&report.warnings);
    report.save(out)?;
    Ok(())
}

fn pick_method(report: &Report, requested: Option<String>, flag: &str) -> Result<String, CliError> {
    if let Some(m) = requested {
        return Ok(m);
    }
    match report.methods().as_slice() {
        [only] => Ok(only.to_string()),
        many => Err(CliError::Usage(format!(
            "report holds methods {}; choose one with {flag}",
            many.join(", ")
        ))),
    }
}

fn eval_compare(
    a: &Path,
    b: &Path,
    method_a: Option<String>,
    method_b: Option<String>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let ra = Report::load(a)?;
    let rb = Report::load(b)?;
    let ma = pick_method(&ra, method_a, "--method-a")?;
    let mb = pick_method(&rb, method_b, "--method-b")?;
    let rows = compare_reports(&ra, &ma, &rb, &mb)?;
    let text = comparison_tsv(&ma, &mb, &rows);
    match out {
        Some(p) => write_file(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn kfold_split(args: KfoldArgs) -> Result<(), CliError> {
    let dataset = Dataset::load(&args.dataset)?;
    let folds = kfold(&dataset.group_ids(), args.k, args.seed)?;
    let value = serde_json::json!({ "k": args.k, "seed": args.seed, "folds": folds });
    let text = serde_json::to_string_pretty(&value).map_err(|e| CliError::Io(e.to_string()))?;
    write_file(&args.out, &format!("{text}\n"))
}
