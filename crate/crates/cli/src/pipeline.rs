use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use shapecf_core::blackbox::Classifier;
use shapecf_core::cfgen::{Counterfactual, Explainer};
use shapecf_core::dataset::{load_dataset, train_test_split, DatasetSchema, Label};
use shapecf_core::eval::{
    baseline_dim_substitution, build_report, evaluate_counterfactual, format_tables, write_csv,
    Detectors, EvaluationReport, EvaluationRow,
};
use shapecf_core::mining::mine_contracted;
use shapecf_core::{par_map, Dataset, Store};

use crate::{CliError, RunConfig};

pub const SHAPELETS_FILE: &str = "shapelets.json";
pub const MINING_LOG_FILE: &str = "mining_log.json";
pub const COUNTERFACTUALS_FILE: &str = "counterfactuals.json";
pub const PARTIAL_FILE: &str = "counterfactuals.partial.jsonl";
pub const REPORT_JSON_FILE: &str = "report.json";
pub const REPORT_CSV_FILE: &str = "report.csv";

/// One explanation request and its outcome for both methods.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub base_id: usize,
    pub original_class: Label,
    pub target_class: Label,
    pub sets: Counterfactual<f64>,
    pub baseline: Option<Counterfactual<f64>>,
}

/// Contents of `counterfactuals.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplainSummary {
    pub attempts: usize,
    pub valid: usize,
    pub flip_rate: f64,
    pub baseline_valid: Option<usize>,
    pub baseline_flip_rate: Option<f64>,
    pub results: Vec<QueryResult>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ReportFile {
    sets: EvaluationReport,
    baseline: Option<EvaluationReport>,
}

#[derive(Debug)]
pub struct RunArtifacts {
    pub run_dir: PathBuf,
    pub store: Store,
    pub summary: ExplainSummary,
    pub sets_report: EvaluationReport,
    pub baseline_report: Option<EvaluationReport>,
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    s
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|_| CliError::MissingInput(format!("{} not found; run the earlier steps first", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn prepare_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.run_dir();
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    Ok(dir)
}

fn load_split(cfg: &RunConfig) -> Result<(Dataset, Dataset), CliError> {
    let schema = DatasetSchema {
        dims: cfg.dataset.dims,
    };
    let ds: Dataset = load_dataset(&cfg.dataset.path, schema)?;
    Ok(train_test_split(&ds, cfg.split.train_fraction, cfg.seed)?)
}

/// Mines class-shapelets from the training split and writes the store and
/// mining log. An empty store is still written, then reported as an error.
pub fn cmd_mine(cfg: &RunConfig) -> Result<Store, CliError> {
    cfg.validate()?;
    let dir = prepare_dir(cfg)?;
    let (train, _) = load_split(cfg)?;
    let outcome = mine_contracted(&train, &cfg.mining, cfg.jobs())?;
    write_file(&dir.join(SHAPELETS_FILE), &outcome.store.to_json())?;
    write_file(&dir.join(MINING_LOG_FILE), &to_json(&outcome.log))?;
    for w in &outcome.log.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!(
        "mined {} class-shapelets from {} candidates -> {}",
        outcome.store.len(),
        outcome.log.candidates_evaluated,
        dir.display()
    );
    if outcome.is_empty() {
        return Err(CliError::EmptyStore);
    }
    Ok(outcome.store)
}

/// `(test position, original class, target class)` for every test instance
/// and every class other than its label, in instance order then class order.
pub fn explain_queries(train: &Dataset, test: &Dataset) -> Vec<(usize, Label, Label)> {
    let classes = train.class_set();
    test.labels()
        .iter()
        .enumerate()
        .flat_map(|(pos, label)| {
            classes
                .iter()
                .filter(move |c| *c != label)
                .map(move |c| (pos, label.clone(), c.clone()))
        })
        .collect()
}

fn read_partial(path: &Path) -> Result<BTreeMap<(usize, Label), QueryResult>, CliError> {
    let mut done = BTreeMap::new();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(_) => return Ok(done),
    };
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        // A torn final line from an interrupted write is recomputed.
        if let Ok(r) = serde_json::from_str::<QueryResult>(&line) {
            done.insert((r.base_id, r.target_class.clone()), r);
        }
    }
    Ok(done)
}

/// Generates one counterfactual per (test instance, other class), plus the
/// substitution baseline when enabled. Finished results are appended to a
/// partial file as they complete, so an interrupted run resumes where it
/// stopped.
pub fn cmd_explain(cfg: &RunConfig) -> Result<ExplainSummary, CliError> {
    cfg.validate()?;
    let dir = prepare_dir(cfg)?;
    let store = Store::load(dir.join(SHAPELETS_FILE)).map_err(|e| match e {
        shapecf_core::mining::MiningError::InvalidStore(m) => CliError::Data(m),
        other => CliError::MissingInput(other.to_string()),
    })?;
    let (train, test) = load_split(cfg)?;
    let model = cfg.model.build(&train)?;
    let explainer = Explainer::new(&store, model.as_ref(), &train, cfg.engine.clone())?;

    let partial_path = dir.join(PARTIAL_FILE);
    let mut done = read_partial(&partial_path)?;
    let queries = explain_queries(&train, &test);
    let pending: Vec<&(usize, Label, Label)> = queries
        .iter()
        .filter(|(pos, _, target)| !done.contains_key(&(test.instance(*pos).id, target.clone())))
        .collect();
    if !done.is_empty() {
        eprintln!("resuming: {} of {} attempts already done", queries.len() - pending.len(), queries.len());
    }

    let jobs = cfg.jobs();
    let mut partial = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&partial_path)
        .map_err(|e| CliError::io(&partial_path, e))?;
    let batch = 2 * jobs;
    for chunk in pending.chunks(batch) {
        let results = par_map(chunk, jobs, |&&(pos, ref original, ref target)| {
            explain_one(&explainer, model.as_ref(), &train, &test, pos, original, target, cfg.eval.baseline)
        })?;
        let mut lines = String::new();
        for r in results {
            lines.push_str(&serde_json::to_string(&r).expect("result serializes"));
            lines.push('\n');
            done.insert((r.base_id, r.target_class.clone()), r);
        }
        partial
            .write_all(lines.as_bytes())
            .and_then(|_| partial.flush())
            .map_err(|e| CliError::io(&partial_path, e))?;
    }

    let results: Vec<QueryResult> = queries
        .iter()
        .map(|(pos, _, target)| done.remove(&(test.instance(*pos).id, target.clone())).expect("every query answered"))
        .collect();
    let summary = summarize(results);
    write_file(&dir.join(COUNTERFACTUALS_FILE), &to_json(&summary))?;
    fs::remove_file(&partial_path).map_err(|e| CliError::io(&partial_path, e))?;
    eprintln!(
        "{} of {} counterfactuals valid (flip rate {:.4})",
        summary.valid, summary.attempts, summary.flip_rate
    );
    Ok(summary)
}

#[allow(clippy::too_many_arguments)]
fn explain_one(
    explainer: &Explainer<'_, f64>,
    model: &dyn Classifier<f64>,
    train: &Dataset,
    test: &Dataset,
    pos: usize,
    original: &Label,
    target: &Label,
    with_baseline: bool,
) -> Result<QueryResult, CliError> {
    let x = test.instance(pos);
    let sets = explainer.explain(x, original, target)?;
    let baseline = if with_baseline {
        Some(baseline_dim_substitution(x, original, target, train, model)?)
    } else {
        None
    };
    Ok(QueryResult {
        base_id: x.id,
        original_class: original.clone(),
        target_class: target.clone(),
        sets,
        baseline,
    })
}

fn summarize(results: Vec<QueryResult>) -> ExplainSummary {
    let attempts = results.len();
    let rate = |v: usize| if attempts == 0 { 0.0 } else { v as f64 / attempts as f64 };
    let valid = results.iter().filter(|r| r.sets.valid).count();
    let baseline_valid = results
        .iter()
        .map(|r| r.baseline.as_ref().map(|b| b.valid as usize))
        .sum::<Option<usize>>()
        .filter(|_| attempts > 0);
    ExplainSummary {
        attempts,
        valid,
        flip_rate: rate(valid),
        baseline_valid,
        baseline_flip_rate: baseline_valid.map(rate),
        results,
    }
}

fn report_for<'a>(
    cfs: impl Iterator<Item = &'a Counterfactual<f64>>,
    test: &Dataset,
    detectors: &Detectors<f64>,
    cfg: &RunConfig,
) -> Result<EvaluationReport, CliError> {
    let cfs: Vec<&Counterfactual<f64>> = cfs.filter(|c| c.valid || !cfg.eval.valid_only).collect();
    let rows: Vec<EvaluationRow> = par_map(&cfs, cfg.jobs(), |cf| {
        let (x, _) = test
            .find(cf.base_id)
            .ok_or_else(|| CliError::Data(format!("instance {} is not in the test split", cf.base_id)))?;
        Ok::<_, CliError>(evaluate_counterfactual(x, cf, Some(detectors), cfg.eval.tol)?)
    })?;
    Ok(build_report(rows, cfg.eval.outlier_factor)?)
}

/// Scores the stored counterfactuals and writes `report.json` and
/// `report.csv`; the aggregate tables go to standard output.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<(EvaluationReport, Option<EvaluationReport>), CliError> {
    cfg.validate()?;
    let dir = prepare_dir(cfg)?;
    let summary: ExplainSummary = read_json(&dir.join(COUNTERFACTUALS_FILE))?;
    if summary.results.is_empty() {
        return Err(CliError::Data("counterfactual file holds no results".into()));
    }
    let (train, test) = load_split(cfg)?;
    let detectors = Detectors::fit(&train, &cfg.eval.detectors)?;
    let sets = report_for(summary.results.iter().map(|r| &r.sets), &test, &detectors, cfg)?;
    let baseline = if cfg.eval.baseline && summary.results.iter().all(|r| r.baseline.is_some()) {
        let cfs = summary.results.iter().filter_map(|r| r.baseline.as_ref());
        Some(report_for(cfs, &test, &detectors, cfg)?)
    } else {
        None
    };

    let mut methods: Vec<(&str, &EvaluationReport)> = vec![("sets", &sets)];
    if let Some(b) = &baseline {
        methods.push(("baseline", b));
    }
    let mut csv = Vec::new();
    write_csv(&methods, &mut csv).map_err(|e| CliError::Other(e.to_string()))?;
    write_file(
        &dir.join(REPORT_CSV_FILE),
        std::str::from_utf8(&csv).expect("csv is UTF-8"),
    )?;
    let file = ReportFile {
        sets: sets.clone(),
        baseline: baseline.clone(),
    };
    write_file(&dir.join(REPORT_JSON_FILE), &to_json(&file))?;
    print!("{}", format_tables(&methods));
    Ok((sets, baseline))
}

/// `mine`, `explain` and `evaluate` in sequence.
pub fn run(cfg: &RunConfig) -> Result<RunArtifacts, CliError> {
    let store = cmd_mine(cfg)?;
    let summary = cmd_explain(cfg)?;
    let (sets_report, baseline_report) = cmd_evaluate(cfg)?;
    Ok(RunArtifacts {
        run_dir: cfg.run_dir(),
        store,
        summary,
        sets_report,
        baseline_report,
    })
}
