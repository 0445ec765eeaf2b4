//! The run pipeline behind the `plan`, `run` and `compare` commands.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::config::{MatcherConfig, RunConfig};
use super::CliError;
use crate::alignment::Membership;
use crate::evaluation::{evaluate, kinds_by_source, load_gold_dir, EvaluationError, EvaluationReport, GoldStandard, RunLabels};
use crate::matcher::{BaselineMatcher, ExternalMatcher, ExternalMatcherConfig, Matcher};
use crate::orchestrator::{execute, RunError, RunOptions, RunRecord, TaskFailure};
use crate::planner::{
    order_kgs, plan_all_pairs, plan_first_vs_rest, plan_im_order, plan_im_similarity, plan_tp_similarity, plan_windowing,
    ExecutionPlan, Linkage, OrderingSpec, PlanError, Strategy,
};
use crate::rdf::{parse_ntriples, stats, EntityKind, Iri, KnowledgeGraph};
use crate::repair::{repair, RepairConfig, RepairOutcome};
use crate::text::{build_profiles, extract_document, SimilarityMatrix};

/// Every `*.nt` file of `dir`, in file name order; a graph's id is its file stem.
pub fn load_sources(dir: &Path) -> Result<Vec<KnowledgeGraph>, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Config(format!("input directory {} does not exist", dir.display())));
    }
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| CliError::Other(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("nt"))
        .collect();
    paths.sort();
    let mut kgs = Vec::with_capacity(paths.len());
    for path in paths {
        let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let bytes = std::fs::read(&path).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
        kgs.push(parse_ntriples(&bytes, &id).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?);
    }
    if kgs.len() < 2 {
        return Err(CliError::Config(format!("{} holds {} N-Triples files, at least 2 are needed", dir.display(), kgs.len())));
    }
    Ok(kgs)
}

/// Sources, gold standards and the lookups evaluation needs.
pub struct Workspace {
    pub kgs: Vec<KnowledgeGraph>,
    pub golds: Vec<GoldStandard>,
    pub membership: Membership,
    pub kinds: HashMap<Iri, EntityKind>,
}

impl Workspace {
    pub fn new(kgs: Vec<KnowledgeGraph>, golds: Vec<GoldStandard>) -> Self {
        let membership = Membership::from_kgs(&kgs);
        let kinds = kinds_by_source(&kgs, &membership);
        Workspace { kgs, golds, membership, kinds }
    }

    pub fn load(input_dir: &Path, gold_dir: &Path) -> Result<Self, CliError> {
        let kgs = load_sources(input_dir)?;
        if !gold_dir.is_dir() {
            return Err(CliError::Config(format!("gold directory {} does not exist", gold_dir.display())));
        }
        let golds = load_gold_dir(gold_dir).map_err(|e| match e {
            EvaluationError::NoGold(_) => CliError::Config(e.to_string()),
            other => CliError::Evaluation(other.to_string()),
        })?;
        let ids: Vec<&str> = kgs.iter().map(KnowledgeGraph::id).collect();
        for g in &golds {
            for id in [g.pair.first(), g.pair.second()] {
                if !ids.contains(&id) {
                    return Err(CliError::Evaluation(format!("gold standard {} names unknown source {id}", g.pair)));
                }
            }
        }
        Ok(Workspace::new(kgs, golds))
    }
}

pub fn similarity_matrix(kgs: &[KnowledgeGraph]) -> SimilarityMatrix {
    let docs: Vec<_> = kgs.iter().map(extract_document).collect();
    SimilarityMatrix::from_profiles(&build_profiles(&docs))
}

/// `id<TAB>id...` header then one row per source.
pub fn matrix_tsv(m: &SimilarityMatrix) -> String {
    let mut out = String::from("source");
    for id in m.ids() {
        let _ = write!(out, "\t{id}");
    }
    out.push('\n');
    for (i, id) in m.ids().iter().enumerate() {
        out.push_str(id);
        for j in 0..m.len() {
            let _ = write!(out, "\t{:.6}", m.similarity(i, j));
        }
        out.push('\n');
    }
    out
}

pub fn build_plan(
    strategy: Strategy,
    ordering: Option<OrderingSpec>,
    linkage: Option<Linkage>,
    kgs: &[KnowledgeGraph],
) -> Result<ExecutionPlan, PlanError> {
    let ordered = || {
        let spec = ordering.unwrap_or(OrderingSpec::ALL[5]);
        order_kgs(kgs.iter().map(|kg| (kg.id(), stats(kg))), spec)
    };
    match strategy {
        Strategy::AllPairs => plan_all_pairs(&kgs.iter().map(|k| k.id().to_string()).collect::<Vec<_>>()),
        Strategy::TpWindow => plan_windowing(&ordered()),
        Strategy::TpFirst => plan_first_vs_rest(&ordered()),
        Strategy::ImOrder => plan_im_order(&ordered()),
        Strategy::TpSim => plan_tp_similarity(&similarity_matrix(kgs)),
        Strategy::ImSim => plan_im_similarity(&similarity_matrix(kgs), linkage.unwrap_or_default()),
    }
}

pub fn build_matcher(config: &MatcherConfig, output_dir: &Path) -> Result<Box<dyn Matcher>, CliError> {
    match config {
        MatcherConfig::Baseline { warm_start: true } => Ok(Box::new(BaselineMatcher::with_warm_start())),
        MatcherConfig::Baseline { warm_start: false } => Ok(Box::new(BaselineMatcher::new())),
        MatcherConfig::External { name, command, timeout, work_dir } => {
            let config = ExternalMatcherConfig {
                command_template: command.clone(),
                timeout: *timeout,
                work_dir: work_dir.clone().unwrap_or_else(|| output_dir.join("matcher-work")),
            };
            ExternalMatcher::new(name.clone(), config)
                .map(|m| Box::new(m) as Box<dyn Matcher>)
                .map_err(|e| CliError::Config(e.to_string()))
        }
    }
}

pub fn run_error(e: RunError) -> CliError {
    match e {
        RunError::UnknownSource(_) => CliError::Config(e.to_string()),
        RunError::Task { failure: TaskFailure::Matcher(_) | TaskFailure::Merge(_) | TaskFailure::UnresolvableEntity(_), .. } => {
            CliError::Matcher(e.to_string())
        }
        RunError::Pool(_) => CliError::Other(e.to_string()),
    }
}

pub struct Experiment {
    pub plan: ExecutionPlan,
    pub record: RunRecord,
    pub report: EvaluationReport,
    pub repaired: Option<(RepairConfig, RepairOutcome, EvaluationReport)>,
}

impl Experiment {
    pub fn labels(&self, config: &RunConfig) -> RunLabels {
        RunLabels {
            strategy: self.record.strategy_name.clone(),
            ordering: config.variant_label(),
            matcher: self.record.matcher_name.clone(),
            runtime_ms: self.record.total_runtime.as_secs_f64() * 1000.0,
        }
    }

    /// Labels for the rows of the repaired alignment.
    pub fn repaired_labels(&self, config: &RunConfig) -> Option<RunLabels> {
        let (r, _, _) = self.repaired.as_ref()?;
        let mut labels = self.labels(config);
        labels.strategy = match r.threshold {
            Some(t) => format!("{}+{}@{}", labels.strategy, r.method.name(), t),
            None => format!("{}+{}", labels.strategy, r.method.name()),
        };
        Some(labels)
    }
}

/// Plans, executes, evaluates and optionally repairs, without touching the
/// file system apart from what an external matcher needs.
pub fn run_experiment(config: &RunConfig, ws: &Workspace) -> Result<Experiment, CliError> {
    run_experiment_with(config, ws, |_| ())
}

/// As [`run_experiment`]; `on_failure` sees the run error, with its partial task log, before it is mapped.
pub fn run_experiment_with(
    config: &RunConfig,
    ws: &Workspace,
    on_failure: impl FnOnce(&RunError),
) -> Result<Experiment, CliError> {
    let plan = build_plan(config.strategy, config.ordering, config.linkage, &ws.kgs).map_err(|e| CliError::Config(e.to_string()))?;
    let mut matcher = build_matcher(&config.matcher, &config.output_dir)?;
    let options = RunOptions { merge_strategy: config.merge_strategy, jobs: config.jobs, label: Some(config.variant_label()) };
    let record = execute(&plan, &ws.kgs, matcher.as_mut(), &options).map_err(|e| {
        on_failure(&e);
        run_error(e)
    })?;
    let eval = |alignment| {
        evaluate(alignment, record.closure_needed, &ws.golds, &ws.membership, &ws.kinds)
            .map_err(|e| CliError::Evaluation(e.to_string()))
    };
    let report = eval(&record.raw_alignment)?;
    let repaired = match &config.repair {
        None => None,
        Some(r) => {
            let outcome = repair(&record.raw_alignment, &ws.membership, r).map_err(|e| CliError::Evaluation(e.to_string()))?;
            let report = eval(&outcome.alignment)?;
            Some((*r, outcome, report))
        }
    };
    Ok(Experiment { plan, record, report, repaired })
}

/// (strategy, ordering, linkage) for every configuration of the comparison grid.
pub fn full_grid() -> Vec<(Strategy, Option<OrderingSpec>, Option<Linkage>)> {
    let mut grid = vec![(Strategy::AllPairs, None, None)];
    for strategy in [Strategy::TpWindow, Strategy::TpFirst, Strategy::ImOrder] {
        for spec in OrderingSpec::ALL {
            grid.push((strategy, Some(spec), None));
        }
    }
    grid.push((Strategy::TpSim, None, None));
    for linkage in Linkage::ALL {
        grid.push((Strategy::ImSim, None, Some(linkage)));
    }
    grid
}
