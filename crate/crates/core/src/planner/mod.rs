//! Reduction of a multi-source matching problem to a plan of binary tasks.
//!
//! Six strategies are supported:
//!
//! | strategy    | tasks       | closure | merges |
//! | ----------- | ----------- | ------- | ------ |
//! | `all-pairs` | n(n-1)/2    | no      | no     |
//! | `tp-window` | n-1 (path)  | yes     | no     |
//! | `tp-first`  | n-1 (star)  | yes     | no     |
//! | `tp-sim`    | n-1 (MST)   | yes     | no     |
//! | `im-order`  | n-1 (left-deep tree) | yes | yes |
//! | `im-sim`    | n-1 (dendrogram)     | yes | yes |

mod agglomerative;
mod ordering;

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::DisjointSet;
use crate::text::SimilarityMatrix;

pub use agglomerative::plan_im_similarity;
pub use ordering::{order_kgs, Direction, Measure, OrderingSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("at least two sources are required, got {0}")]
    TooFewSources(usize),
    #[error("source id {0:?} appears more than once")]
    DuplicateSource(String),
    #[error("unknown {kind} {value:?}")]
    UnknownName { kind: &'static str, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "all-pairs")]
    AllPairs,
    #[serde(rename = "tp-window")]
    TpWindow,
    #[serde(rename = "tp-first")]
    TpFirst,
    #[serde(rename = "tp-sim")]
    TpSim,
    #[serde(rename = "im-order")]
    ImOrder,
    #[serde(rename = "im-sim")]
    ImSim,
}

impl Strategy {
    pub const ALL: [Strategy; 6] =
        [Strategy::AllPairs, Strategy::TpWindow, Strategy::TpFirst, Strategy::TpSim, Strategy::ImOrder, Strategy::ImSim];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::AllPairs => "all-pairs",
            Strategy::TpWindow => "tp-window",
            Strategy::TpFirst => "tp-first",
            Strategy::TpSim => "tp-sim",
            Strategy::ImOrder => "im-order",
            Strategy::ImSim => "im-sim",
        }
    }

    pub fn uses_ordering(self) -> bool {
        matches!(self, Strategy::TpWindow | Strategy::TpFirst | Strategy::ImOrder)
    }

    pub fn uses_similarity(self) -> bool {
        matches!(self, Strategy::TpSim | Strategy::ImSim)
    }

    pub fn is_incremental(self) -> bool {
        matches!(self, Strategy::ImOrder | Strategy::ImSim)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = PlanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| PlanError::UnknownName { kind: "strategy", value: s.to_string() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Single,
    #[default]
    Average,
    Complete,
}

impl Linkage {
    pub const ALL: [Linkage; 3] = [Linkage::Single, Linkage::Average, Linkage::Complete];

    pub fn name(self) -> &'static str {
        match self {
            Linkage::Single => "single",
            Linkage::Average => "average",
            Linkage::Complete => "complete",
        }
    }
}

impl FromStr for Linkage {
    type Err = PlanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Linkage::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| PlanError::UnknownName { kind: "linkage", value: s.to_string() })
    }
}

/// An input of a task: a source graph or the union produced by an earlier task.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeRef {
    Leaf(String),
    Union(usize),
}

impl NodeRef {
    pub fn leaf(id: impl Into<String>) -> Self {
        NodeRef::Leaf(id.into())
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeRef::Leaf(id) => f.write_str(id),
            NodeRef::Union(task) => write!(f, "U{}", task + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchTask {
    pub index: usize,
    pub source: NodeRef,
    pub target: NodeRef,
}

impl MatchTask {
    /// Tasks whose unions this task consumes.
    pub fn dependencies(&self) -> impl Iterator<Item = usize> + '_ {
        [&self.source, &self.target].into_iter().filter_map(|n| match n {
            NodeRef::Union(t) => Some(*t),
            NodeRef::Leaf(_) => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionPlan {
    pub strategy: Strategy,
    pub tasks: Vec<MatchTask>,
    pub merge_after_match: bool,
    pub closure_needed: bool,
}

impl ExecutionPlan {
    fn new(strategy: Strategy, pairs: Vec<(NodeRef, NodeRef)>) -> Self {
        let tasks = pairs
            .into_iter()
            .enumerate()
            .map(|(index, (source, target))| MatchTask { index, source, target })
            .collect();
        ExecutionPlan {
            strategy,
            tasks,
            merge_after_match: strategy.is_incremental(),
            closure_needed: strategy != Strategy::AllPairs,
        }
    }

    pub fn strategy_name(&self) -> &'static str {
        self.strategy.name()
    }

    /// Leaf ids underneath a node.
    pub fn leaves_of(&self, node: &NodeRef) -> BTreeSet<String> {
        match node {
            NodeRef::Leaf(id) => BTreeSet::from([id.clone()]),
            NodeRef::Union(t) => {
                let task = &self.tasks[*t];
                let mut leaves = self.leaves_of(&task.source);
                leaves.extend(self.leaves_of(&task.target));
                leaves
            }
        }
    }

    /// All leaf ids referenced by the plan.
    pub fn leaves(&self) -> BTreeSet<String> {
        self.tasks
            .iter()
            .flat_map(|t| [&t.source, &t.target])
            .filter_map(|n| match n {
                NodeRef::Leaf(id) => Some(id.clone()),
                NodeRef::Union(_) => None,
            })
            .collect()
    }

    /// `taskIndex<TAB>sourceRef<TAB>targetRef<TAB>mergeAfterMatch` rows.
    pub fn to_tsv(&self) -> String {
        self.tasks
            .iter()
            .map(|t| format!("{}\t{}\t{}\t{}\n", t.index, t.source, t.target, self.merge_after_match))
            .collect()
    }
}

fn check_ids(ids: &[String]) -> Result<(), PlanError> {
    if ids.len() < 2 {
        return Err(PlanError::TooFewSources(ids.len()));
    }
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(PlanError::DuplicateSource(id.clone()));
        }
    }
    Ok(())
}

/// Every unordered pair once, in lexicographic order.
pub fn plan_all_pairs(ids: &[String]) -> Result<ExecutionPlan, PlanError> {
    check_ids(ids)?;
    let mut sorted: Vec<&String> = ids.iter().collect();
    sorted.sort();
    let mut pairs = Vec::with_capacity(ids.len() * (ids.len() - 1) / 2);
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            pairs.push((NodeRef::leaf(*a), NodeRef::leaf(*b)));
        }
    }
    Ok(ExecutionPlan::new(Strategy::AllPairs, pairs))
}

/// Consecutive sources in the given order: (k1,k2), (k2,k3), ...
pub fn plan_windowing(ordered: &[String]) -> Result<ExecutionPlan, PlanError> {
    check_ids(ordered)?;
    let pairs = ordered.windows(2).map(|w| (NodeRef::leaf(&w[0]), NodeRef::leaf(&w[1]))).collect();
    Ok(ExecutionPlan::new(Strategy::TpWindow, pairs))
}

/// The first source is the hub every other source is matched against.
pub fn plan_first_vs_rest(ordered: &[String]) -> Result<ExecutionPlan, PlanError> {
    check_ids(ordered)?;
    let hub = &ordered[0];
    let pairs = ordered[1..].iter().map(|k| (NodeRef::leaf(hub), NodeRef::leaf(k))).collect();
    Ok(ExecutionPlan::new(Strategy::TpFirst, pairs))
}

/// Left-deep merge tree: task i matches the union of the first i+1 sources
/// with source i+2.
pub fn plan_im_order(ordered: &[String]) -> Result<ExecutionPlan, PlanError> {
    check_ids(ordered)?;
    let mut pairs = vec![(NodeRef::leaf(&ordered[0]), NodeRef::leaf(&ordered[1]))];
    for (i, k) in ordered[2..].iter().enumerate() {
        pairs.push((NodeRef::Union(i), NodeRef::leaf(k)));
    }
    Ok(ExecutionPlan::new(Strategy::ImOrder, pairs))
}

/// Minimum spanning tree over text distance (1 - cosine) using Kruskal's
/// algorithm. Ties fall back to lexicographic pair order; tasks appear in
/// acceptance order, oriented (smaller id, larger id).
pub fn plan_tp_similarity(similarity: &SimilarityMatrix) -> Result<ExecutionPlan, PlanError> {
    let ids = similarity.ids();
    check_ids(ids)?;
    let mut edges = Vec::new();
    for i in 0..ids.len() {
        for j in (i + 1)..ids.len() {
            let (a, b) = if ids[i] <= ids[j] { (i, j) } else { (j, i) };
            edges.push((similarity.distance(i, j), a, b));
        }
    }
    edges.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| (&ids[x.1], &ids[x.2]).cmp(&(&ids[y.1], &ids[y.2]))));
    let mut forest = DisjointSet::new();
    let mut pairs = Vec::with_capacity(ids.len() - 1);
    for (_, a, b) in edges {
        if forest.union(&a, &b) {
            pairs.push((NodeRef::leaf(&ids[a]), NodeRef::leaf(&ids[b])));
            if pairs.len() == ids.len() - 1 {
                break;
            }
        }
    }
    Ok(ExecutionPlan::new(Strategy::TpSim, pairs))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn ids(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn pairs(plan: &ExecutionPlan) -> Vec<(String, String)> {
        plan.tasks.iter().map(|t| (t.source.to_string(), t.target.to_string())).collect()
    }

    fn p(a: &str, b: &str) -> (String, String) {
        (a.to_string(), b.to_string())
    }

    #[test]
    fn all_pairs_counts() {
        for (n, expected) in [(2, 1), (4, 6), (8, 28)] {
            let names: Vec<String> = (0..n).map(|i| format!("k{i}")).collect();
            let plan = plan_all_pairs(&names).unwrap();
            assert_eq!(plan.tasks.len(), expected);
            assert!(!plan.closure_needed && !plan.merge_after_match);
        }
        assert_eq!(plan_all_pairs(&ids(&["A"])), Err(PlanError::TooFewSources(1)));
        assert_eq!(plan_all_pairs(&ids(&["A", "A"])), Err(PlanError::DuplicateSource("A".into())));
        assert_eq!(pairs(&plan_all_pairs(&ids(&["C", "A", "B"])).unwrap()), vec![p("A", "B"), p("A", "C"), p("B", "C")]);
    }

    #[test]
    fn windowing() {
        let plan = plan_windowing(&ids(&["A", "B", "C", "D"])).unwrap();
        assert_eq!(pairs(&plan), vec![p("A", "B"), p("B", "C"), p("C", "D")]);
        assert!(plan.closure_needed && !plan.merge_after_match);
        assert_eq!(plan_windowing(&ids(&["A", "B"])).unwrap().tasks.len(), 1);
        let reversed = plan_windowing(&ids(&["D", "C", "B", "A"])).unwrap();
        let fwd: BTreeSet<_> = pairs(&plan).into_iter().collect();
        let back: BTreeSet<_> = pairs(&reversed).into_iter().map(|(a, b)| (b, a)).collect();
        assert_eq!(fwd, back);
    }

    #[test]
    fn first_vs_rest() {
        let plan = plan_first_vs_rest(&ids(&["A", "B", "C", "D"])).unwrap();
        assert_eq!(pairs(&plan), vec![p("A", "B"), p("A", "C"), p("A", "D")]);
        assert!(plan.tasks.iter().all(|t| t.source == NodeRef::leaf("A")));
        assert_eq!(
            plan_first_vs_rest(&ids(&["A", "B"])).unwrap().tasks,
            plan_windowing(&ids(&["A", "B"])).unwrap().tasks
        );
    }

    #[test]
    fn incremental_order() {
        let plan = plan_im_order(&ids(&["A", "B", "C", "D"])).unwrap();
        assert_eq!(pairs(&plan), vec![p("A", "B"), p("U1", "C"), p("U2", "D")]);
        assert!(plan.merge_after_match && plan.closure_needed);
        // left-deep: every task depends on its predecessor
        for t in &plan.tasks[1..] {
            assert_eq!(t.dependencies().collect::<Vec<_>>(), vec![t.index - 1]);
        }
        assert_eq!(plan.leaves_of(&NodeRef::Union(2)).len(), 4);
        let two = plan_im_order(&ids(&["A", "B"])).unwrap();
        assert_eq!(two.tasks.len(), 1);
    }

    fn matrix(names: &[&str], sim: &[(&str, &str, f64)]) -> SimilarityMatrix {
        let n = names.len();
        let mut values = vec![vec![0.0; n]; n];
        for (i, row) in values.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for (a, b, s) in sim {
            let i = names.iter().position(|x| x == a).unwrap();
            let j = names.iter().position(|x| x == b).unwrap();
            values[i][j] = *s;
            values[j][i] = *s;
        }
        SimilarityMatrix::from_values(ids(names), values).unwrap()
    }

    #[test]
    fn tp_similarity_keeps_topic_edges() {
        let m = matrix(
            &["A", "B", "C", "D"],
            &[("A", "C", 0.9), ("B", "D", 0.8), ("A", "B", 0.1), ("A", "D", 0.2), ("B", "C", 0.15), ("C", "D", 0.05)],
        );
        let plan = plan_tp_similarity(&m).unwrap();
        assert_eq!(pairs(&plan), vec![p("A", "C"), p("B", "D"), p("A", "D")]);
    }

    #[test]
    fn tp_similarity_ties_are_lexicographic() {
        let m = matrix(&["D", "B", "C", "A"], &[]);
        let plan = plan_tp_similarity(&m).unwrap();
        assert_eq!(pairs(&plan), vec![p("A", "B"), p("A", "C"), p("A", "D")]);
    }

    #[test]
    fn tsv_dump() {
        let plan = plan_im_order(&ids(&["A", "B", "C"])).unwrap();
        assert_eq!(plan.to_tsv(), "0\tA\tB\ttrue\n1\tU1\tC\ttrue\n");
    }

    #[test]
    fn names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>(), Ok(s));
        }
        assert!("im-fancy".parse::<Strategy>().is_err());
        assert_eq!("complete".parse::<Linkage>(), Ok(Linkage::Complete));
    }
}
