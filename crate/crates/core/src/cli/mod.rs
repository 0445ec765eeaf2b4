//! The `msmatch` command line.

pub mod config;
pub mod pipeline;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::alignment::{read_alignment, write_alignment, Membership};
use crate::evaluation::{evaluate, gold_policy, kinds_by_source, load_gold_dir, write_results_csv, ResultRow};
use crate::orchestrator::to_jsonl;
use crate::planner::Strategy;
use crate::repair::{repair, RepairConfig, RepairMethod};
use crate::testbed::{generate, write_corpus, CorpusSpec};
use crate::text::{build_profiles, extract_document, write_profiles};
use config::{resolve, resolve_strategy, ConfigFile, MatcherSection, RepairSection, RunConfig};
use pipeline::{build_plan, load_sources, matrix_tsv, run_experiment, run_experiment_with, similarity_matrix, Experiment, Workspace};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("matcher failure: {0}")]
    Matcher(String),
    #[error("evaluation error: {0}")]
    Evaluation(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Matcher(_) => 3,
            CliError::Evaluation(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Other(format!("{}: {e}", path.display()))
}

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  I/O or other failure
  2  configuration error (bad flags or config file, missing input or gold directory, invalid corpus spec)
  3  matcher failure (timeout, non-zero exit, invalid output, failed merge)
  4  evaluation error (unreadable gold standard, alignment outside the sources)";

#[derive(Debug, Parser)]
#[command(name = "msmatch", version, about = "Multi-source knowledge graph matching with binary matchers", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus with gold standards.
    #[command(after_help = EXIT_CODES)]
    Generate {
        /// Corpus spec, TOML or JSON (by extension).
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print tf-idf profiles, or the cosine similarity matrix, of the input sources.
    #[command(after_help = EXIT_CODES)]
    Profile {
        #[arg(long)]
        input: PathBuf,
        /// Print the similarity matrix instead of the profiles.
        #[arg(long)]
        matrix: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the execution plan as TSV.
    #[command(after_help = EXIT_CODES)]
    Plan {
        #[command(flatten)]
        run: RunFlags,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one configuration, appending evaluation rows to results.csv in the output directory.
    #[command(after_help = EXIT_CODES)]
    Run {
        #[command(flatten)]
        run: RunFlags,
    },
    /// Run several configurations over one corpus and write a comparison table.
    #[command(after_help = EXIT_CODES)]
    Compare {
        /// Config files, one per configuration; flags apply to each.
        #[arg(long = "configs", value_name = "FILE")]
        configs: Vec<PathBuf>,
        /// Every strategy with every ordering and linkage.
        #[arg(long)]
        full_grid: bool,
        /// Strategies to run with default ordering and linkage.
        #[arg(long = "strategies", value_name = "STRATEGY", value_delimiter = ',')]
        strategies: Vec<String>,
        #[command(flatten)]
        run: RunFlags,
        /// Comparison CSV; printed when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repair an alignment and optionally evaluate it before and after.
    #[command(after_help = EXIT_CODES)]
    Repair {
        /// Alignment TSV to repair.
        #[arg(long)]
        alignment: PathBuf,
        /// Sources the alignment refers to.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        method: String,
        #[arg(long)]
        threshold: Option<f64>,
        /// Gold directory; prints micro scores before and after the repair.
        #[arg(long)]
        gold: Option<PathBuf>,
        /// The alignment is a transitive-pairs output and needs closure before evaluation.
        #[arg(long)]
        closure: bool,
        /// Repaired alignment TSV; printed when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Removed edges as JSON lines.
        #[arg(long)]
        removed: Option<PathBuf>,
    },
}

/// Flags that override the values of a config file.
#[derive(Debug, Args)]
struct RunFlags {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    strategy: Option<String>,
    /// e.g. ModelSize-Desc, classes-asc.
    #[arg(long)]
    ordering: Option<String>,
    /// single, average or complete.
    #[arg(long)]
    linkage: Option<String>,
    /// no-drift or full.
    #[arg(long)]
    merge_strategy: Option<String>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    gold: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Workers for independent tasks.
    #[arg(long)]
    jobs: Option<usize>,
    /// baseline or external.
    #[arg(long)]
    matcher: Option<String>,
    #[arg(long)]
    matcher_name: Option<String>,
    /// Template with {source}, {target}, {inputAlignment} and {outputAlignment}.
    #[arg(long)]
    matcher_command: Option<String>,
    #[arg(long)]
    timeout_secs: Option<u64>,
    /// Rebuild the baseline index for every task.
    #[arg(long)]
    no_warm_start: bool,
    #[arg(long)]
    repair_method: Option<String>,
    #[arg(long)]
    repair_threshold: Option<f64>,
}

impl RunFlags {
    fn base(&self) -> Result<ConfigFile, CliError> {
        match &self.config {
            Some(path) => ConfigFile::load(path),
            None => Ok(ConfigFile::default()),
        }
    }

    fn overrides(&self) -> ConfigFile {
        let repair = (self.repair_method.is_some() || self.repair_threshold.is_some())
            .then(|| RepairSection { method: self.repair_method.clone(), threshold: self.repair_threshold });
        ConfigFile {
            strategy: self.strategy.clone(),
            ordering: self.ordering.clone(),
            linkage: self.linkage.clone(),
            merge_strategy: self.merge_strategy.clone(),
            input_dir: self.input.clone(),
            gold_dir: self.gold.clone(),
            output_dir: self.output.clone(),
            jobs: self.jobs,
            matcher: MatcherSection {
                kind: self.matcher.clone(),
                name: self.matcher_name.clone(),
                warm_start: self.no_warm_start.then_some(false),
                command: self.matcher_command.clone(),
                timeout_secs: self.timeout_secs,
                work_dir: None,
            },
            repair,
        }
    }

    fn merged(&self) -> Result<ConfigFile, CliError> {
        Ok(self.base()?.overridden_by(self.overrides()))
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("msmatch: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Generate { spec, out } => cmd_generate(&spec, &out).map(|manifest| println!("{}", manifest.display())),
        Command::Profile { input, matrix, out } => cmd_profile(&input, matrix).and_then(|text| emit(out.as_deref(), &text)),
        Command::Plan { run, out } => cmd_plan(&run.merged()?).and_then(|text| emit(out.as_deref(), &text)),
        Command::Run { run } => {
            let summary = cmd_run(&resolve(run.merged()?)?)?;
            println!("{summary}");
            Ok(())
        }
        Command::Compare { configs, full_grid, strategies, run, out } => {
            let configs = compare_configs(&configs, full_grid, &strategies, &run)?;
            let text = cmd_compare(&configs)?;
            emit(out.as_deref(), &text)
        }
        Command::Repair { alignment, input, method, threshold, gold, closure, out, removed } => {
            let method: RepairMethod = method.parse().map_err(|e: crate::repair::RepairError| CliError::Config(e.to_string()))?;
            let config = RepairConfig { method, threshold };
            cmd_repair(&RepairArgs { alignment, input, config, gold, closure, out, removed })
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))
}

/// Reads a corpus spec (TOML unless the extension is `.json`), generates the
/// corpus into `out` and returns the manifest path.
pub fn cmd_generate(spec_path: &Path, out: &Path) -> Result<PathBuf, CliError> {
    let text = std::fs::read_to_string(spec_path).map_err(|e| CliError::Config(format!("{}: {e}", spec_path.display())))?;
    let spec: CorpusSpec = if spec_path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid corpus spec: {e}")))?
    } else {
        toml::from_str(&text).map_err(|e| CliError::Config(format!("invalid corpus spec: {e}")))?
    };
    let corpus = generate(&spec).map_err(|e| CliError::Config(e.to_string()))?;
    write_corpus(&corpus, out).map_err(|e| CliError::Other(e.to_string()))
}

pub fn cmd_profile(input: &Path, matrix: bool) -> Result<String, CliError> {
    let kgs = load_sources(input)?;
    if matrix {
        return Ok(matrix_tsv(&similarity_matrix(&kgs)));
    }
    let docs: Vec<_> = kgs.iter().map(extract_document).collect();
    Ok(write_profiles(&build_profiles(&docs)))
}

/// The plan TSV; only the strategy fields and the input directory are needed.
pub fn cmd_plan(file: &ConfigFile) -> Result<String, CliError> {
    let (strategy, ordering, linkage) = resolve_strategy(file)?;
    let input = file.input_dir.as_deref().ok_or_else(|| CliError::Config("no input directory given".into()))?;
    let kgs = load_sources(input)?;
    let plan = build_plan(strategy, ordering, linkage, &kgs).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(plan.to_tsv())
}

fn result_rows(config: &RunConfig, e: &Experiment) -> Vec<ResultRow> {
    let mut rows = e.labels(config).rows(&e.report);
    if let (Some(labels), Some((_, _, report))) = (e.repaired_labels(config), &e.repaired) {
        rows.extend(labels.rows(report));
    }
    rows
}

/// Executes one configuration. Writes `plan.tsv`, `run.log.jsonl`,
/// `alignment.tsv` (and `alignment.repaired.tsv`) into the output directory
/// and appends to `results.csv`. Returns a one-line summary.
pub fn cmd_run(config: &RunConfig) -> Result<String, CliError> {
    let ws = Workspace::load(&config.input_dir, &config.gold_dir)?;
    let out = &config.output_dir;
    std::fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let experiment = run_experiment_with(config, &ws, |e| {
        let _ = write_file(&out.join("run.log.jsonl"), to_jsonl(e.log()).as_bytes());
    })?;
    write_file(&out.join("plan.tsv"), experiment.plan.to_tsv().as_bytes())?;
    write_file(&out.join("run.log.jsonl"), experiment.record.log_jsonl().as_bytes())?;
    write_file(&out.join("alignment.tsv"), &write_alignment(&experiment.record.raw_alignment))?;
    if let Some((_, outcome, _)) = &experiment.repaired {
        write_file(&out.join("alignment.repaired.tsv"), &write_alignment(&outcome.alignment))?;
    }
    append_results(&out.join("results.csv"), &result_rows(config, &experiment), gold_policy(&ws.golds))?;
    let mut summary = format!(
        "{} {} tasks={} micro_f1={:.4} macro_f1={:.4}",
        experiment.record.strategy_name,
        config.variant_label(),
        experiment.plan.tasks.len(),
        experiment.report.micro.f1,
        experiment.report.macro_.f1
    );
    if let Some((_, _, report)) = &experiment.repaired {
        let _ = write!(summary, " repaired_micro_f1={:.4}", report.micro.f1);
    }
    Ok(summary)
}

fn append_results(path: &Path, rows: &[ResultRow], policy: &str) -> Result<(), CliError> {
    let header = (!path.exists()).then_some(policy);
    let text = write_results_csv(rows, header);
    let mut file = OpenOptions::new().create(true).append(true).open(path).map_err(|e| io_err(path, e))?;
    file.write_all(text.as_bytes()).map_err(|e| io_err(path, e))
}

fn compare_configs(files: &[PathBuf], full_grid: bool, strategies: &[String], flags: &RunFlags) -> Result<Vec<RunConfig>, CliError> {
    let base = flags.base()?;
    let overrides = flags.overrides();
    let mut configs = Vec::new();
    for path in files {
        configs.push(resolve(ConfigFile::load(path)?.overridden_by(overrides.clone()))?);
    }
    let variant = |strategy: Strategy, ordering: Option<String>, linkage: Option<String>| {
        let file = ConfigFile { strategy: Some(strategy.name().into()), ordering, linkage, ..overrides.clone() };
        resolve(base.clone().overridden_by(file))
    };
    for s in strategies {
        let strategy: Strategy = s.parse().map_err(|e: crate::planner::PlanError| CliError::Config(e.to_string()))?;
        configs.push(variant(strategy, None, None)?);
    }
    if full_grid {
        for (strategy, ordering, linkage) in pipeline::full_grid() {
            configs.push(variant(strategy, ordering.map(|o| o.to_string()), linkage.map(|l| l.name().to_string()))?);
        }
    }
    if configs.is_empty() {
        if base.strategy.is_none() && overrides.strategy.is_none() {
            return Err(CliError::Config("nothing to compare: give --configs, --strategies, --full-grid or --strategy".into()));
        }
        configs.push(resolve(base.overridden_by(overrides))?);
    }
    Ok(configs)
}

#[derive(Debug, Serialize)]
struct CompareRow {
    strategy: String,
    ordering: String,
    matcher: String,
    micro_precision: f64,
    micro_recall: f64,
    micro_f1: f64,
    macro_f1: f64,
    tasks: usize,
    runtime_ms: f64,
}

/// Runs every configuration over the corpus of the first one and returns the
/// comparison CSV, one row per configuration (and per repair).
pub fn cmd_compare(configs: &[RunConfig]) -> Result<String, CliError> {
    let first = configs.first().ok_or_else(|| CliError::Config("no configurations to compare".into()))?;
    let ws = Workspace::load(&first.input_dir, &first.gold_dir)?;
    let mut rows = Vec::new();
    for config in configs {
        let e = run_experiment(config, &ws)?;
        let labels = e.labels(config);
        let tasks = e.plan.tasks.len();
        let row = |labels: crate::evaluation::RunLabels, report: &crate::evaluation::EvaluationReport| CompareRow {
            strategy: labels.strategy,
            ordering: labels.ordering,
            matcher: labels.matcher,
            micro_precision: report.micro.precision,
            micro_recall: report.micro.recall,
            micro_f1: report.micro.f1,
            macro_f1: report.macro_.f1,
            tasks,
            runtime_ms: labels.runtime_ms,
        };
        rows.push(row(labels, &e.report));
        if let (Some(labels), Some((_, _, report))) = (e.repaired_labels(config), &e.repaired) {
            rows.push(row(labels, report));
        }
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        writer.serialize(row).map_err(|e| CliError::Other(e.to_string()))?;
    }
    let bytes = writer.into_inner().map_err(|e| CliError::Other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8 fields"))
}

pub struct RepairArgs {
    pub alignment: PathBuf,
    pub input: PathBuf,
    pub config: RepairConfig,
    pub gold: Option<PathBuf>,
    pub closure: bool,
    pub out: Option<PathBuf>,
    pub removed: Option<PathBuf>,
}

pub fn cmd_repair(args: &RepairArgs) -> Result<(), CliError> {
    args.config.validate(false).map_err(|e| CliError::Config(e.to_string()))?;
    let kgs = load_sources(&args.input)?;
    let membership = Membership::from_kgs(&kgs);
    let bytes = std::fs::read(&args.alignment).map_err(|e| io_err(&args.alignment, e))?;
    let alignment = read_alignment(&bytes).map_err(|e| CliError::Evaluation(format!("{}: {e}", args.alignment.display())))?;
    let outcome = repair(&alignment, &membership, &args.config).map_err(|e| CliError::Evaluation(e.to_string()))?;
    emit(args.out.as_deref(), &String::from_utf8(write_alignment(&outcome.alignment)).expect("utf-8 alignment"))?;
    if let Some(path) = &args.removed {
        let text: String =
            outcome.removed.iter().map(|r| serde_json::to_string(r).expect("serializable") + "\n").collect();
        write_file(path, text.as_bytes())?;
    }
    eprintln!("removed {} of {} correspondences", outcome.removed.len(), alignment.len());
    if let Some(gold_dir) = &args.gold {
        if !gold_dir.is_dir() {
            return Err(CliError::Config(format!("gold directory {} does not exist", gold_dir.display())));
        }
        let golds = load_gold_dir(gold_dir).map_err(|e| CliError::Evaluation(e.to_string()))?;
        let kinds = kinds_by_source(&kgs, &membership);
        for (what, a) in [("before", &alignment), ("after", &outcome.alignment)] {
            let report = evaluate(a, args.closure, &golds, &membership, &kinds).map_err(|e| CliError::Evaluation(e.to_string()))?;
            eprintln!(
                "{what}: micro precision={:.4} recall={:.4} f1={:.4}",
                report.micro.precision, report.micro.recall, report.micro.f1
            );
        }
    }
    Ok(())
}
