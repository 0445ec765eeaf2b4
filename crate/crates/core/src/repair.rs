//! Removing likely-wrong correspondences from a multi-source alignment.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{closure, expand_all_pairs, Alignment, AlignmentError, Correspondence, Membership, PairKey};
use crate::rdf::Iri;

/// Error-degree thresholds used in the reproduction experiments.
pub const REPRODUCTION_THRESHOLDS: [f64; 5] = [0.99, 0.95, 0.90, 0.80, 0.60];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RepairError {
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error("threshold {0} outside [0, 1]")]
    ThresholdOutOfRange(f64),
    #[error("threshold {0} is not one of the reproduction thresholds")]
    NotAReproductionThreshold(f64),
    #[error("the error-degree method needs a threshold")]
    MissingThreshold,
    #[error("unknown repair method '{0}'")]
    UnknownMethod(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepairMethod {
    ErrorDegree,
    SourceConsistency,
    ConnectedComponents,
}

impl RepairMethod {
    pub fn name(self) -> &'static str {
        match self {
            RepairMethod::ErrorDegree => "error-degree",
            RepairMethod::SourceConsistency => "source-consistency",
            RepairMethod::ConnectedComponents => "connected-components",
        }
    }
}

impl FromStr for RepairMethod {
    type Err = RepairError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "error-degree" => Ok(RepairMethod::ErrorDegree),
            "source-consistency" => Ok(RepairMethod::SourceConsistency),
            "connected-components" => Ok(RepairMethod::ConnectedComponents),
            _ => Err(RepairError::UnknownMethod(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepairConfig {
    pub method: RepairMethod,
    #[serde(default)]
    pub threshold: Option<f64>,
}

impl RepairConfig {
    /// With `reproduction`, error-degree thresholds are restricted to
    /// [`REPRODUCTION_THRESHOLDS`].
    pub fn validate(&self, reproduction: bool) -> Result<(), RepairError> {
        if let Some(t) = self.threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(RepairError::ThresholdOutOfRange(t));
            }
            if reproduction && self.method == RepairMethod::ErrorDegree && !REPRODUCTION_THRESHOLDS.contains(&t) {
                return Err(RepairError::NotAReproductionThreshold(t));
            }
        } else if self.method == RepairMethod::ErrorDegree {
            return Err(RepairError::MissingThreshold);
        }
        Ok(())
    }
}

/// Undirected graph with entities as nodes and correspondences as edges.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    nodes: BTreeMap<Iri, String>,
    edges: BTreeMap<PairKey, f64>,
    adjacency: BTreeMap<Iri, BTreeSet<Iri>>,
}

impl SimilarityGraph {
    pub fn from_alignment(alignment: &Alignment, membership: &Membership) -> Result<Self, AlignmentError> {
        let mut graph = SimilarityGraph { nodes: BTreeMap::new(), edges: BTreeMap::new(), adjacency: BTreeMap::new() };
        for c in alignment.iter() {
            for e in [&c.entity_one, &c.entity_two] {
                graph.nodes.insert(e.clone(), membership.source_of(e)?.to_string());
            }
            graph.edges.insert(c.key(), c.confidence);
            graph.adjacency.entry(c.entity_one.clone()).or_default().insert(c.entity_two.clone());
            graph.adjacency.entry(c.entity_two.clone()).or_default().insert(c.entity_one.clone());
        }
        Ok(graph)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&PairKey, f64)> {
        self.edges.iter().map(|(k, c)| (k, *c))
    }

    pub fn source_of(&self, node: &Iri) -> Option<&str> {
        self.nodes.get(node).map(String::as_str)
    }

    fn neighbors(&self, node: &Iri) -> impl Iterator<Item = &Iri> {
        self.adjacency.get(node).into_iter().flatten()
    }

    fn remove_edge(&mut self, key: &PairKey) {
        self.edges.remove(key);
        for (a, b) in [(&key.0, &key.1), (&key.1, &key.0)] {
            if let Some(n) = self.adjacency.get_mut(a) {
                n.remove(b);
            }
        }
    }

    pub fn to_alignment(&self) -> Alignment {
        self.edges
            .iter()
            .map(|(k, c)| Correspondence::new(k.0.clone(), k.1.clone(), *c).expect("valid edge"))
            .collect()
    }

    /// Connected components (isolated nodes included), each sorted, in order
    /// of their smallest node.
    pub fn components(&self) -> Vec<Vec<Iri>> {
        let mut seen: BTreeSet<&Iri> = BTreeSet::new();
        let mut out = Vec::new();
        for start in self.nodes.keys() {
            if !seen.insert(start) {
                continue;
            }
            let mut component = vec![start.clone()];
            let mut stack = vec![start];
            while let Some(n) = stack.pop() {
                for m in self.neighbors(n) {
                    if seen.insert(m) {
                        component.push(m.clone());
                        stack.push(m);
                    }
                }
            }
            component.sort();
            out.push(component);
        }
        out
    }
}

/// `1 - (|N(u) ∩ N(v)| + 1) / (|N(u) ∪ N(v)| + 1)` with neighborhoods
/// taken without `u` and `v`. An edge whose endpoints share all their other
/// neighbors scores 0; a bridge into an otherwise unrelated group scores high.
pub fn error_degree(graph: &SimilarityGraph, u: &Iri, v: &Iri) -> f64 {
    let hood = |x: &Iri| -> BTreeSet<&Iri> { graph.neighbors(x).filter(|n| *n != u && *n != v).collect() };
    let (nu, nv) = (hood(u), hood(v));
    let common = nu.intersection(&nv).count();
    let all = nu.union(&nv).count();
    1.0 - (common as f64 + 1.0) / (all as f64 + 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemovedEdge {
    pub entity_one: Iri,
    pub entity_two: Iri,
    pub confidence: f64,
    pub error_degree: f64,
    pub reason: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepairOutcome {
    pub alignment: Alignment,
    pub removed: Vec<RemovedEdge>,
}

/// Drops every edge whose error degree, computed on the unmodified graph,
/// exceeds `threshold`.
pub fn filter_by_error(graph: &SimilarityGraph, threshold: f64) -> RepairOutcome {
    let mut alignment = Alignment::new();
    let mut removed = Vec::new();
    for (key, confidence) in graph.edges() {
        let err = error_degree(graph, &key.0, &key.1);
        if err > threshold {
            removed.push(RemovedEdge {
                entity_one: key.0.clone(),
                entity_two: key.1.clone(),
                confidence,
                error_degree: err,
                reason: "error-degree",
            });
        } else {
            alignment.insert(Correspondence::new(key.0.clone(), key.1.clone(), confidence).expect("valid edge"));
        }
    }
    RepairOutcome { alignment, removed }
}

fn has_source_conflict(graph: &SimilarityGraph, component: &[Iri]) -> bool {
    let mut sources = BTreeSet::new();
    component.iter().any(|n| !sources.insert(graph.source_of(n)))
}

/// Repeatedly removes the weakest edge of a component holding two entities
/// of one source until no such component remains. Ties go to the higher
/// error degree, then to the smaller entity pair.
pub fn source_consistency_repair(graph: &SimilarityGraph) -> RepairOutcome {
    let mut g = graph.clone();
    let mut removed = Vec::new();
    while let Some(component) = g.components().into_iter().find(|c| has_source_conflict(&g, c)) {
        let members: BTreeSet<&Iri> = component.iter().collect();
        let mut worst: Option<(f64, f64, PairKey)> = None;
        for (key, confidence) in g.edges() {
            if !members.contains(&key.0) {
                continue;
            }
            let err = error_degree(&g, &key.0, &key.1);
            let better = match &worst {
                None => true,
                Some((c, e, k)) => confidence
                    .total_cmp(c)
                    .then_with(|| e.total_cmp(&err))
                    .then_with(|| key.cmp(k))
                    .is_lt(),
            };
            if better {
                worst = Some((confidence, err, key.clone()));
            }
        }
        let (confidence, err, key) = worst.expect("a conflicting component has edges");
        g.remove_edge(&key);
        removed.push(RemovedEdge {
            entity_one: key.0,
            entity_two: key.1,
            confidence,
            error_degree: err,
            reason: "source-conflict",
        });
    }
    RepairOutcome { alignment: g.to_alignment(), removed }
}

/// Replaces the alignment by every cross-source pair of each connected component.
pub fn connected_components_repair(alignment: &Alignment, membership: &Membership) -> Result<Alignment, AlignmentError> {
    Ok(expand_all_pairs(&closure(alignment, membership)?))
}

pub fn repair(alignment: &Alignment, membership: &Membership, config: &RepairConfig) -> Result<RepairOutcome, RepairError> {
    config.validate(false)?;
    match config.method {
        RepairMethod::ConnectedComponents => {
            Ok(RepairOutcome { alignment: connected_components_repair(alignment, membership)?, removed: Vec::new() })
        }
        RepairMethod::ErrorDegree => {
            let graph = SimilarityGraph::from_alignment(alignment, membership)?;
            Ok(filter_by_error(&graph, config.threshold.ok_or(RepairError::MissingThreshold)?))
        }
        RepairMethod::SourceConsistency => {
            let graph = SimilarityGraph::from_alignment(alignment, membership)?;
            Ok(source_consistency_repair(&graph))
        }
    }
}
