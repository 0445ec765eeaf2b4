//! Union of two matched knowledge graphs.

use std::collections::HashMap;
use std::str::FromStr;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::Alignment;
use crate::rdf::{Iri, KnowledgeGraph, Origin, Term, Triple};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MergeError {
    #[error("{entity} is aligned to both {first} and {second}")]
    NonBijectiveAlignment { entity: Iri, first: Iri, second: Iri },
    #[error("unknown merge strategy '{0}'")]
    UnknownStrategy(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MergeStrategy {
    /// Rewrites matched source IRIs and adds every source triple.
    Full,
    /// Adds only triples about unmatched entities.
    #[default]
    NoDrift,
}

impl MergeStrategy {
    pub fn name(self) -> &'static str {
        match self {
            MergeStrategy::Full => "full",
            MergeStrategy::NoDrift => "no-drift",
        }
    }
}

impl FromStr for MergeStrategy {
    type Err = MergeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(MergeStrategy::Full),
            "no-drift" | "nodrift" => Ok(MergeStrategy::NoDrift),
            _ => Err(MergeError::UnknownStrategy(s.to_string())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MergeResult {
    pub union: KnowledgeGraph,
    /// Triples of the union that the target did not have, in insertion order.
    pub added_triples: Vec<Triple>,
    /// Source triples carried over (possibly rewritten, possibly already present).
    pub rewritten_count: usize,
    /// Source triples dropped by the merge rules.
    pub skipped_count: usize,
    /// Source IRI to target IRI, for every aligned source entity.
    pub rewrites: HashMap<Iri, Iri>,
}

fn is_union(kg: &KnowledgeGraph) -> Option<usize> {
    match kg.origin() {
        Origin::Union { task } => Some(task),
        Origin::Leaf | Origin::CopiedLeaf => None,
    }
}

/// Returns `(source, target)`.
///
/// A union always beats a leaf; of two unions the more recent one is the
/// target; of two leaves the larger one is, ties going to the larger id.
pub fn select_roles<'a>(a: &'a KnowledgeGraph, b: &'a KnowledgeGraph) -> (&'a KnowledgeGraph, &'a KnowledgeGraph) {
    let a_is_target = match (is_union(a), is_union(b)) {
        (Some(ta), Some(tb)) => ta > tb,
        (Some(_), None) => true,
        (None, Some(_)) => false,
        (None, None) => (a.len(), a.id()) > (b.len(), b.id()),
    };
    if a_is_target {
        (b, a)
    } else {
        (a, b)
    }
}

/// Orients each correspondence from `source` to `target`. Correspondences
/// that do not connect the two graphs are ignored.
pub fn source_to_target(
    alignment: &Alignment,
    source: &KnowledgeGraph,
    target: &KnowledgeGraph,
) -> Result<HashMap<Iri, Iri>, MergeError> {
    let source_iris = source.iris();
    let target_iris = target.iris();
    let mut map: HashMap<Iri, Iri> = HashMap::new();
    for c in alignment.iter() {
        let (s, t) = if source_iris.contains(&c.entity_one) && target_iris.contains(&c.entity_two) {
            (&c.entity_one, &c.entity_two)
        } else if source_iris.contains(&c.entity_two) && target_iris.contains(&c.entity_one) {
            (&c.entity_two, &c.entity_one)
        } else {
            continue;
        };
        if let Some(existing) = map.get(s) {
            if existing != t {
                let (first, second) = if existing < t { (existing.clone(), t.clone()) } else { (t.clone(), existing.clone()) };
                return Err(MergeError::NonBijectiveAlignment { entity: s.clone(), first, second });
            }
        }
        map.insert(s.clone(), t.clone());
    }
    Ok(map)
}

fn rewrite(iri: &Iri, map: &HashMap<Iri, Iri>) -> Iri {
    map.get(iri).unwrap_or(iri).clone()
}

fn rewrite_term(term: &Term, map: &HashMap<Iri, Iri>) -> Term {
    match term {
        Term::Iri(i) => Term::Iri(rewrite(i, map)),
        Term::Literal(_) => term.clone(),
    }
}

fn build(
    target: &KnowledgeGraph,
    source: &KnowledgeGraph,
    rewrites: HashMap<Iri, Iri>,
    union_id: &str,
    task: usize,
    rule: impl Fn(&Triple, &HashMap<Iri, Iri>) -> Option<Triple>,
) -> MergeResult {
    let mut union = target.copy_as(union_id, Origin::Union { task });
    let mut added: IndexSet<Triple> = IndexSet::new();
    let (mut rewritten_count, mut skipped_count) = (0, 0);
    for t in source.triples() {
        match rule(t, &rewrites) {
            Some(carried) => {
                rewritten_count += 1;
                if union.insert(carried.clone()) {
                    added.insert(carried);
                }
            }
            None => skipped_count += 1,
        }
    }
    MergeResult { union, added_triples: added.into_iter().collect(), rewritten_count, skipped_count, rewrites }
}

/// Every source triple, with matched IRIs in any position replaced by their
/// target counterparts.
pub fn merge_full(
    target: &KnowledgeGraph,
    source: &KnowledgeGraph,
    alignment: &Alignment,
    union_id: &str,
    task: usize,
) -> Result<MergeResult, MergeError> {
    let rewrites = source_to_target(alignment, source, target)?;
    Ok(build(target, source, rewrites, union_id, task, |t, map| {
        Some(Triple::new(rewrite(&t.subject, map), rewrite(&t.predicate, map), rewrite_term(&t.object, map)))
    }))
}

/// Source triples whose subject is unmatched and whose object is a literal
/// or an unmatched IRI. Matched predicates are rewritten.
pub fn merge_no_drift(
    target: &KnowledgeGraph,
    source: &KnowledgeGraph,
    alignment: &Alignment,
    union_id: &str,
    task: usize,
) -> Result<MergeResult, MergeError> {
    let rewrites = source_to_target(alignment, source, target)?;
    Ok(build(target, source, rewrites, union_id, task, |t, map| {
        if map.contains_key(&t.subject) {
            return None;
        }
        if let Term::Iri(o) = &t.object {
            if map.contains_key(o) {
                return None;
            }
        }
        Some(Triple::new(t.subject.clone(), rewrite(&t.predicate, map), t.object.clone()))
    }))
}

pub fn merge(
    strategy: MergeStrategy,
    target: &KnowledgeGraph,
    source: &KnowledgeGraph,
    alignment: &Alignment,
    union_id: &str,
    task: usize,
) -> Result<MergeResult, MergeError> {
    match strategy {
        MergeStrategy::Full => merge_full(target, source, alignment, union_id, task),
        MergeStrategy::NoDrift => merge_no_drift(target, source, alignment, union_id, task),
    }
}
