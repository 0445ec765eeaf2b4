//! Executes an execution plan against a matcher.

use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::alignment::{Alignment, Correspondence};
use crate::matcher::{Matcher, MatcherError};
use crate::merge::{merge, select_roles, MergeError, MergeStrategy};
use crate::planner::{ExecutionPlan, MatchTask, NodeRef};
use crate::rdf::{Iri, KnowledgeGraph, Origin};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaskFailure {
    #[error(transparent)]
    Matcher(#[from] MatcherError),
    #[error(transparent)]
    Merge(#[from] MergeError),
    #[error("{0} cannot be traced back to a source graph")]
    UnresolvableEntity(Iri),
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("plan references unknown source '{0}'")]
    UnknownSource(String),
    #[error("task {task} failed: {failure}")]
    Task { task: usize, failure: TaskFailure, log: Vec<TaskLog> },
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

impl RunError {
    pub fn log(&self) -> &[TaskLog] {
        match self {
            RunError::Task { log, .. } => log,
            _ => &[],
        }
    }
}

/// One JSON-lines record per task.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TaskLog {
    pub task_index: usize,
    pub source_ref: String,
    pub target_ref: String,
    /// Graphs actually passed as source and target after role selection.
    pub source_graph: String,
    pub target_graph: String,
    pub duration_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub merge_ms: Option<f64>,
    pub correspondences: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub added_triples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TaskLog {
    fn new(task: &MatchTask, source: &str, target: &str) -> Self {
        TaskLog {
            task_index: task.index,
            source_ref: task.source.to_string(),
            target_ref: task.target.to_string(),
            source_graph: source.to_string(),
            target_graph: target.to_string(),
            duration_ms: 0.0,
            merge_ms: None,
            correspondences: 0,
            added_triples: None,
            error: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub strategy_name: String,
    pub ordering_or_linkage: Option<String>,
    pub matcher_name: String,
    pub per_task_runtimes: Vec<Duration>,
    pub merge_runtimes: Vec<Duration>,
    pub total_runtime: Duration,
    pub raw_alignment: Alignment,
    pub closure_needed: bool,
    pub matcher_calls: usize,
    pub task_log: Vec<TaskLog>,
}

impl RunRecord {
    /// The task log as JSON lines.
    pub fn log_jsonl(&self) -> String {
        to_jsonl(&self.task_log)
    }
}

pub fn to_jsonl(log: &[TaskLog]) -> String {
    log.iter().map(|r| serde_json::to_string(r).expect("serializable") + "\n").collect()
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub merge_strategy: MergeStrategy,
    /// Worker threads for independent tasks; 0 or 1 runs sequentially.
    pub jobs: usize,
    /// Ordering or linkage name recorded in the run record.
    pub label: Option<String>,
}

/// Maps IRIs that merges replaced to their replacements.
#[derive(Debug, Clone, Default)]
pub struct RewriteLog {
    rewrites: HashMap<Iri, Iri>,
}

impl RewriteLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, from: Iri, to: Iri) {
        self.rewrites.insert(from, to);
    }

    pub fn get(&self, iri: &Iri) -> Option<&Iri> {
        self.rewrites.get(iri)
    }

    pub fn len(&self) -> usize {
        self.rewrites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewrites.is_empty()
    }
}

fn resolve_iri(iri: &Iri, log: &RewriteLog, leaf_iris: &HashSet<Iri>) -> Result<Iri, TaskFailure> {
    let mut current = iri;
    for _ in 0..=log.len() {
        if leaf_iris.contains(current) {
            return Ok(current.clone());
        }
        match log.get(current) {
            Some(next) => current = next,
            None => break,
        }
    }
    Err(TaskFailure::UnresolvableEntity(iri.clone()))
}

/// Maps both entities to IRIs that occur in the original source graphs,
/// following rewrites where needed. Returns `None` when both ends collapse
/// onto the same entity.
pub fn resolve_to_leaves(
    c: &Correspondence,
    log: &RewriteLog,
    leaf_iris: &HashSet<Iri>,
) -> Result<Option<Correspondence>, TaskFailure> {
    let one = resolve_iri(&c.entity_one, log, leaf_iris)?;
    let two = resolve_iri(&c.entity_two, log, leaf_iris)?;
    if one == two {
        return Ok(None);
    }
    Ok(Some(Correspondence::new(one, two, c.confidence).expect("confidence already validated")))
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

/// Runs every task of `plan`. Incremental plans merge after each task and
/// run in order; other plans may use `options.jobs` workers.
pub fn execute(
    plan: &ExecutionPlan,
    kgs: &[KnowledgeGraph],
    matcher: &mut dyn Matcher,
    options: &RunOptions,
) -> Result<RunRecord, RunError> {
    let leaves: HashMap<&str, &KnowledgeGraph> = kgs.iter().map(|kg| (kg.id(), kg)).collect();
    for id in plan.leaves() {
        if !leaves.contains_key(id.as_str()) {
            return Err(RunError::UnknownSource(id));
        }
    }
    let leaf_iris: HashSet<Iri> = kgs.iter().flat_map(|kg| kg.iris().into_iter().cloned()).collect();
    let mut record = RunRecord {
        strategy_name: plan.strategy_name().to_string(),
        ordering_or_linkage: options.label.clone(),
        matcher_name: matcher.name().to_string(),
        per_task_runtimes: Vec::with_capacity(plan.tasks.len()),
        merge_runtimes: Vec::new(),
        total_runtime: Duration::ZERO,
        raw_alignment: Alignment::new(),
        closure_needed: plan.closure_needed,
        matcher_calls: 0,
        task_log: Vec::with_capacity(plan.tasks.len()),
    };
    if plan.merge_after_match {
        run_incremental(plan, &leaves, &leaf_iris, matcher, options.merge_strategy, &mut record)?;
    } else {
        run_independent(plan, &leaves, &leaf_iris, matcher, options.jobs, &mut record)?;
    }
    record.total_runtime = record.per_task_runtimes.iter().chain(&record.merge_runtimes).sum();
    Ok(record)
}

struct Outcome {
    log: TaskLog,
    runtime: Duration,
    result: Result<Alignment, TaskFailure>,
}

fn run_one(task: &MatchTask, leaves: &HashMap<&str, &KnowledgeGraph>, matcher: &mut dyn Matcher) -> Outcome {
    let leaf = |n: &NodeRef| match n {
        NodeRef::Leaf(id) => leaves[id.as_str()],
        NodeRef::Union(_) => unreachable!("independent plans have no unions"),
    };
    let (source, target) = (leaf(&task.source), leaf(&task.target));
    let mut log = TaskLog::new(task, source.id(), target.id());
    let started = Instant::now();
    let result = matcher.match_kgs(source, target, &Alignment::new()).map_err(TaskFailure::from);
    let runtime = started.elapsed();
    log.duration_ms = ms(runtime);
    Outcome { log, runtime, result }
}

fn run_independent(
    plan: &ExecutionPlan,
    leaves: &HashMap<&str, &KnowledgeGraph>,
    leaf_iris: &HashSet<Iri>,
    matcher: &mut dyn Matcher,
    jobs: usize,
    record: &mut RunRecord,
) -> Result<(), RunError> {
    let outcomes: Vec<Outcome> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| RunError::Pool(e.to_string()))?;
        let forks: Vec<Box<dyn Matcher>> = plan.tasks.iter().map(|_| matcher.fork()).collect();
        pool.install(|| {
            plan.tasks
                .par_iter()
                .zip(forks)
                .map(|(task, mut m)| run_one(task, leaves, m.as_mut()))
                .collect()
        })
    } else {
        plan.tasks.iter().map(|task| run_one(task, leaves, matcher)).collect()
    };

    let empty_log = RewriteLog::new();
    for outcome in outcomes {
        record.matcher_calls += 1;
        record.per_task_runtimes.push(outcome.runtime);
        let mut log = outcome.log;
        let resolved = outcome.result.and_then(|alignment| {
            let mut out = Vec::with_capacity(alignment.len());
            for c in alignment.iter() {
                out.extend(resolve_to_leaves(c, &empty_log, leaf_iris)?);
            }
            Ok(out)
        });
        match resolved {
            Ok(correspondences) => {
                log.correspondences = correspondences.len();
                record.raw_alignment.extend(correspondences);
                record.task_log.push(log);
            }
            Err(failure) => {
                log.error = Some(failure.to_string());
                let task = log.task_index;
                record.task_log.push(log);
                return Err(RunError::Task { task, failure, log: std::mem::take(&mut record.task_log) });
            }
        }
    }
    Ok(())
}

fn run_incremental(
    plan: &ExecutionPlan,
    leaves: &HashMap<&str, &KnowledgeGraph>,
    leaf_iris: &HashSet<Iri>,
    matcher: &mut dyn Matcher,
    strategy: MergeStrategy,
    record: &mut RunRecord,
) -> Result<(), RunError> {
    let mut unions: HashMap<usize, KnowledgeGraph> = HashMap::new();
    let mut rewrites = RewriteLog::new();
    for task in &plan.tasks {
        let take = |n: &NodeRef, unions: &mut HashMap<usize, KnowledgeGraph>| match n {
            NodeRef::Leaf(id) => std::borrow::Cow::Borrowed(leaves[id.as_str()]),
            NodeRef::Union(t) => std::borrow::Cow::Owned(unions.remove(t).expect("planner orders producers first")),
        };
        let a = take(&task.source, &mut unions);
        let b = take(&task.target, &mut unions);
        let (source, target) = select_roles(&a, &b);
        let copied;
        let target = if target.origin() == Origin::Leaf {
            copied = target.copy_as(target.id(), Origin::CopiedLeaf);
            &copied
        } else {
            target
        };
        let mut log = TaskLog::new(task, source.id(), target.id());

        let started = Instant::now();
        let matched = matcher.match_kgs(source, target, &Alignment::new());
        let runtime = started.elapsed();
        record.matcher_calls += 1;
        record.per_task_runtimes.push(runtime);
        log.duration_ms = ms(runtime);

        let step = matched.map_err(TaskFailure::from).and_then(|alignment| {
            let mut resolved = Vec::with_capacity(alignment.len());
            for c in alignment.iter() {
                resolved.extend(resolve_to_leaves(c, &rewrites, leaf_iris)?);
            }
            let started = Instant::now();
            let merged = merge(strategy, target, source, &alignment, &format!("U{}", task.index + 1), task.index)?;
            Ok((resolved, merged, started.elapsed()))
        });
        let (resolved, merged, merge_time) = match step {
            Ok(v) => v,
            Err(failure) => {
                log.error = Some(failure.to_string());
                record.task_log.push(log);
                return Err(RunError::Task { task: task.index, failure, log: std::mem::take(&mut record.task_log) });
            }
        };
        record.merge_runtimes.push(merge_time);
        log.merge_ms = Some(ms(merge_time));
        log.correspondences = resolved.len();
        log.added_triples = Some(merged.added_triples.len());
        record.raw_alignment.extend(resolved);
        for (from, to) in merged.rewrites {
            rewrites.record(from, to);
        }
        if matcher.supports_warm_start() {
            if let Err(e) = matcher.update_index(merged.union.id(), &merged.added_triples) {
                let failure = TaskFailure::Matcher(e);
                log.error = Some(failure.to_string());
                record.task_log.push(log);
                return Err(RunError::Task { task: task.index, failure, log: std::mem::take(&mut record.task_log) });
            }
        }
        record.task_log.push(log);
        unions.insert(task.index, merged.union);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcher::BaselineMatcher;
    use crate::planner::{plan_all_pairs, plan_im_order, plan_windowing};
    use crate::rdf::{iri, Literal, Triple, RDFS_LABEL, RDF_TYPE};

    fn source(id: &str, labels: &[&str]) -> KnowledgeGraph {
        let ns = id.to_lowercase();
        let mut triples = Vec::new();
        for (i, label) in labels.iter().enumerate() {
            let e = iri(&format!("http://{ns}/e{i}"));
            triples.push(Triple::new(e.clone(), iri(RDF_TYPE), iri(&format!("http://{ns}/Thing"))));
            triples.push(Triple::new(e, iri(RDFS_LABEL), Literal::plain(*label)));
        }
        KnowledgeGraph::from_triples(id, Origin::Leaf, triples)
    }

    fn ids(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    /// Counts calls and fails on a chosen call.
    struct Counting {
        inner: BaselineMatcher,
        calls: usize,
        fail_on: Option<usize>,
    }

    impl Matcher for Counting {
        fn name(&self) -> &str {
            "counting"
        }
        fn match_kgs(&mut self, s: &KnowledgeGraph, t: &KnowledgeGraph, i: &Alignment) -> Result<Alignment, MatcherError> {
            self.calls += 1;
            if self.fail_on == Some(self.calls - 1) {
                return Err(MatcherError::InvalidOutput("boom".into()));
            }
            self.inner.match_kgs(s, t, i)
        }
        fn fork(&self) -> Box<dyn Matcher> {
            Box::new(Counting { inner: BaselineMatcher::new(), calls: 0, fail_on: self.fail_on })
        }
    }

    fn three() -> Vec<KnowledgeGraph> {
        vec![source("A", &["x", "y"]), source("B", &["x", "z"]), source("C", &["y", "z", "x"])]
    }

    #[test]
    fn all_pairs_is_the_union_of_pairwise_runs() {
        let kgs = three();
        let plan = plan_all_pairs(&ids(&["A", "B", "C"])).unwrap();
        let mut m = BaselineMatcher::new();
        let run = execute(&plan, &kgs, &mut m, &RunOptions::default()).unwrap();
        let mut expected = Alignment::new();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            expected.extend(BaselineMatcher::new().match_kgs(&kgs[i], &kgs[j], &Alignment::new()).unwrap());
        }
        assert_eq!(run.raw_alignment, expected);
        assert_eq!(run.matcher_calls, 3);
        assert!(run.merge_runtimes.is_empty());
        assert!(!run.closure_needed);
        assert_eq!(run.total_runtime, run.per_task_runtimes.iter().sum());
    }

    #[test]
    fn parallel_equals_sequential() {
        let kgs = three();
        let plan = plan_all_pairs(&ids(&["A", "B", "C"])).unwrap();
        let seq = execute(&plan, &kgs, &mut BaselineMatcher::new(), &RunOptions::default()).unwrap();
        let options = RunOptions { jobs: 3, ..RunOptions::default() };
        let par = execute(&plan, &kgs, &mut BaselineMatcher::new(), &options).unwrap();
        assert_eq!(seq.raw_alignment, par.raw_alignment);
        assert_eq!(
            seq.task_log.iter().map(|l| l.task_index).collect::<Vec<_>>(),
            par.task_log.iter().map(|l| l.task_index).collect::<Vec<_>>()
        );
    }

    #[test]
    fn incremental_output_references_leaf_iris() {
        let kgs = three();
        let plan = plan_im_order(&ids(&["A", "B", "C"])).unwrap();
        for strategy in [MergeStrategy::Full, MergeStrategy::NoDrift] {
            let options = RunOptions { merge_strategy: strategy, ..RunOptions::default() };
            let run = execute(&plan, &kgs, &mut BaselineMatcher::with_warm_start(), &options).unwrap();
            assert_eq!(run.matcher_calls, 2);
            assert_eq!(run.merge_runtimes.len(), 2);
            assert_eq!(run.total_runtime, run.per_task_runtimes.iter().chain(&run.merge_runtimes).sum());
            let leaf_iris: HashSet<&Iri> = kgs.iter().flat_map(|k| k.iris()).collect();
            for e in run.raw_alignment.entities() {
                assert!(leaf_iris.contains(e), "{e}");
            }
            // task 0: A-x with B-x; task 1: the union against C
            assert!(run.raw_alignment.contains_pair(&iri("http://a/e0"), &iri("http://b/e0")));
            assert!(run.raw_alignment.contains_pair(&iri("http://a/e1"), &iri("http://c/e0")));
            assert!(run.raw_alignment.contains_pair(&iri("http://b/e1"), &iri("http://c/e1")));
            assert_eq!(run.raw_alignment.len(), 4);
            // the x of B survives in the union, so it is the one matched to C
            assert!(run.raw_alignment.contains_pair(&iri("http://b/e0"), &iri("http://c/e2")));
        }
    }

    #[test]
    fn leaf_inputs_are_not_mutated() {
        let kgs = three();
        let before: Vec<usize> = kgs.iter().map(KnowledgeGraph::len).collect();
        let plan = plan_im_order(&ids(&["A", "B", "C"])).unwrap();
        execute(&plan, &kgs, &mut BaselineMatcher::new(), &RunOptions::default()).unwrap();
        assert_eq!(kgs.iter().map(KnowledgeGraph::len).collect::<Vec<_>>(), before);
        assert!(kgs.iter().all(|k| k.origin() == Origin::Leaf));
    }

    #[test]
    fn failure_carries_task_index() {
        let kgs = three();
        for plan in [plan_windowing(&ids(&["A", "B", "C"])).unwrap(), plan_im_order(&ids(&["A", "B", "C"])).unwrap()] {
            let mut m = Counting { inner: BaselineMatcher::new(), calls: 0, fail_on: Some(1) };
            match execute(&plan, &kgs, &mut m, &RunOptions::default()) {
                Err(RunError::Task { task, log, .. }) => {
                    assert_eq!(task, 1);
                    assert_eq!(log.len(), 2);
                    assert!(log[1].error.is_some());
                }
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn unknown_source() {
        let plan = plan_all_pairs(&ids(&["A", "Z"])).unwrap();
        let err = execute(&plan, &three(), &mut BaselineMatcher::new(), &RunOptions::default()).unwrap_err();
        assert!(matches!(err, RunError::UnknownSource(id) if id == "Z"));
    }

    #[test]
    fn resolution() {
        let leaf: HashSet<Iri> = [iri("http://a/1"), iri("http://t/5"), iri("http://x/9")].into_iter().collect();
        let mut log = RewriteLog::new();
        let c = Correspondence::certain(iri("http://a/1"), iri("http://t/5")).unwrap();
        assert_eq!(resolve_to_leaves(&c, &log, &leaf).unwrap(), Some(c.clone()));

        // a chain of two rewrites
        log.record(iri("urn:tmp:1"), iri("urn:tmp:2"));
        log.record(iri("urn:tmp:2"), iri("http://x/9"));
        let c = Correspondence::new(iri("urn:tmp:1"), iri("http://a/1"), 0.5).unwrap();
        let r = resolve_to_leaves(&c, &log, &leaf).unwrap().unwrap();
        assert!(r.involves(&iri("http://x/9")) && r.involves(&iri("http://a/1")));
        assert_eq!(r.confidence, 0.5);

        let c = Correspondence::certain(iri("urn:nowhere"), iri("http://a/1")).unwrap();
        assert_eq!(resolve_to_leaves(&c, &log, &leaf), Err(TaskFailure::UnresolvableEntity(iri("urn:nowhere"))));
    }

    #[test]
    fn log_is_json_lines() {
        let kgs = three();
        let plan = plan_im_order(&ids(&["A", "B", "C"])).unwrap();
        let run = execute(&plan, &kgs, &mut BaselineMatcher::new(), &RunOptions::default()).unwrap();
        let lines: Vec<serde_json::Value> = run.log_jsonl().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1]["sourceRef"], "U1");
        assert_eq!(lines[1]["targetRef"], "C");
        assert_eq!(lines[1]["sourceGraph"], "C");
        assert_eq!(lines[1]["targetGraph"], "U1");
        assert!(lines[0]["addedTriples"].is_number());
    }
}
