//! Correspondences, alignments and their transitive closure.

mod closure;
mod disjoint_set;
mod tsv;

use std::collections::{btree_map, BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::rdf::{Iri, KnowledgeGraph};

pub use closure::{closure, consistency_warnings, expand_all_pairs, expand_to_pairs, split_by_pair, EntityCluster, PairSplit};
pub use disjoint_set::DisjointSet;
pub use tsv::{read_alignment, write_alignment};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlignmentError {
    #[error("a correspondence needs two distinct entities, got {0} twice")]
    SelfCorrespondence(Iri),
    #[error("confidence {0} outside [0, 1]")]
    ConfidenceOutOfRange(f64),
    #[error("malformed alignment row on line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("confidence {value} on line {line} outside [0, 1]")]
    RowConfidenceOutOfRange { line: usize, value: f64 },
    #[error("cannot resolve the source knowledge graph of {0}")]
    UnknownSource(Iri),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Relation {
    #[default]
    Equivalence,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("=")
    }
}

/// `⟨entity_one, entity_two, =, confidence⟩`. Identity is the unordered entity pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Correspondence {
    pub entity_one: Iri,
    pub entity_two: Iri,
    pub relation: Relation,
    pub confidence: f64,
}

impl Correspondence {
    pub fn new(entity_one: Iri, entity_two: Iri, confidence: f64) -> Result<Self, AlignmentError> {
        if entity_one == entity_two {
            return Err(AlignmentError::SelfCorrespondence(entity_one));
        }
        if !(0.0..=1.0).contains(&confidence) {
            return Err(AlignmentError::ConfidenceOutOfRange(confidence));
        }
        Ok(Correspondence { entity_one, entity_two, relation: Relation::Equivalence, confidence })
    }

    /// Shorthand for a certain equivalence (confidence 1.0).
    pub fn certain(entity_one: Iri, entity_two: Iri) -> Result<Self, AlignmentError> {
        Self::new(entity_one, entity_two, 1.0)
    }

    pub fn key(&self) -> PairKey {
        PairKey::new(&self.entity_one, &self.entity_two)
    }

    pub fn involves(&self, entity: &Iri) -> bool {
        &self.entity_one == entity || &self.entity_two == entity
    }

    /// The other end of the correspondence, if `entity` is one of its ends.
    pub fn counterpart(&self, entity: &Iri) -> Option<&Iri> {
        if &self.entity_one == entity {
            Some(&self.entity_two)
        } else if &self.entity_two == entity {
            Some(&self.entity_one)
        } else {
            None
        }
    }
}

/// Lexicographically ordered entity pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairKey(pub Iri, pub Iri);

impl PairKey {
    pub fn new(a: &Iri, b: &Iri) -> Self {
        if a <= b {
            PairKey(a.clone(), b.clone())
        } else {
            PairKey(b.clone(), a.clone())
        }
    }
}

/// A set of correspondences without duplicate unordered pairs, iterated in
/// canonical pair order.
#[derive(Debug, Clone, Default)]
pub struct Alignment {
    correspondences: BTreeMap<PairKey, Correspondence>,
}

impl Alignment {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a correspondence. On a duplicate pair the higher confidence is kept
    /// and `false` is returned.
    pub fn insert(&mut self, c: Correspondence) -> bool {
        match self.correspondences.entry(c.key()) {
            btree_map::Entry::Vacant(slot) => {
                slot.insert(c);
                true
            }
            btree_map::Entry::Occupied(mut slot) => {
                if c.confidence > slot.get().confidence {
                    slot.insert(c);
                }
                false
            }
        }
    }

    pub fn len(&self) -> usize {
        self.correspondences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.correspondences.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Correspondence> {
        self.correspondences.values()
    }

    pub fn keys(&self) -> impl Iterator<Item = &PairKey> {
        self.correspondences.keys()
    }

    pub fn contains_pair(&self, a: &Iri, b: &Iri) -> bool {
        self.correspondences.contains_key(&PairKey::new(a, b))
    }

    pub fn contains_key(&self, key: &PairKey) -> bool {
        self.correspondences.contains_key(key)
    }

    pub fn get(&self, a: &Iri, b: &Iri) -> Option<&Correspondence> {
        self.correspondences.get(&PairKey::new(a, b))
    }

    pub fn remove(&mut self, key: &PairKey) -> Option<Correspondence> {
        self.correspondences.remove(key)
    }

    pub fn entities(&self) -> BTreeSet<&Iri> {
        self.iter().flat_map(|c| [&c.entity_one, &c.entity_two]).collect()
    }

    pub fn extend(&mut self, other: impl IntoIterator<Item = Correspondence>) {
        for c in other {
            self.insert(c);
        }
    }

    /// True when no entity takes part in more than one correspondence.
    pub fn is_one_to_one(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.iter().all(|c| seen.insert(&c.entity_one) && seen.insert(&c.entity_two))
    }

    pub fn key_set(&self) -> BTreeSet<&PairKey> {
        self.correspondences.keys().collect()
    }
}

/// Equality on the unordered pairs and their confidences; orientation is ignored.
impl PartialEq for Alignment {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len()
            && self
                .correspondences
                .iter()
                .zip(other.correspondences.iter())
                .all(|((ka, a), (kb, b))| ka == kb && a.confidence == b.confidence)
    }
}

impl FromIterator<Correspondence> for Alignment {
    fn from_iter<I: IntoIterator<Item = Correspondence>>(iter: I) -> Self {
        let mut alignment = Alignment::new();
        alignment.extend(iter);
        alignment
    }
}

impl IntoIterator for Alignment {
    type Item = Correspondence;
    type IntoIter = btree_map::IntoValues<PairKey, Correspondence>;

    fn into_iter(self) -> Self::IntoIter {
        self.correspondences.into_values()
    }
}

/// Unordered pair of source graph ids, stored with the smaller id first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SourcePair {
    first: String,
    second: String,
}

impl SourcePair {
    pub fn new(a: impl Into<String>, b: impl Into<String>) -> Self {
        let (a, b) = (a.into(), b.into());
        if a <= b {
            SourcePair { first: a, second: b }
        } else {
            SourcePair { first: b, second: a }
        }
    }

    pub fn first(&self) -> &str {
        &self.first
    }

    pub fn second(&self) -> &str {
        &self.second
    }

    pub fn contains(&self, id: &str) -> bool {
        self.first == id || self.second == id
    }

    pub fn is_intra_source(&self) -> bool {
        self.first == self.second
    }
}

impl fmt::Display for SourcePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.first, self.second)
    }
}

/// Which leaf graph each entity originates from.
#[derive(Debug, Clone, Default)]
pub struct Membership {
    sources: HashMap<Iri, String>,
}

impl Membership {
    pub fn new() -> Self {
        Self::default()
    }

    /// An entity belongs to the graph that declares it (uses it as a subject).
    /// Entities no graph declares belong to the single graph mentioning them.
    /// Entities declared by several graphs stay unresolved.
    pub fn from_kgs<'a>(kgs: impl IntoIterator<Item = &'a KnowledgeGraph>) -> Self {
        let kgs: Vec<&KnowledgeGraph> = kgs.into_iter().collect();
        let mut declared: HashMap<&Iri, Option<&str>> = HashMap::new();
        for kg in &kgs {
            for entity in kg.declared_entities() {
                declared
                    .entry(entity)
                    .and_modify(|owner| {
                        if *owner != Some(kg.id()) {
                            *owner = None;
                        }
                    })
                    .or_insert(Some(kg.id()));
            }
        }
        let mut mentioned: HashMap<&Iri, Option<&str>> = HashMap::new();
        for kg in &kgs {
            for entity in kg.iris() {
                if declared.contains_key(entity) || crate::rdf::is_builtin_vocabulary(entity) {
                    continue;
                }
                mentioned
                    .entry(entity)
                    .and_modify(|owner| *owner = None)
                    .or_insert(Some(kg.id()));
            }
        }
        let sources = declared
            .into_iter()
            .chain(mentioned)
            .filter_map(|(iri, owner)| owner.map(|o| (iri.clone(), o.to_string())))
            .collect();
        Membership { sources }
    }

    pub fn insert(&mut self, entity: Iri, source: impl Into<String>) {
        self.sources.insert(entity, source.into());
    }

    pub fn source_of(&self, entity: &Iri) -> Result<&str, AlignmentError> {
        self.sources.get(entity).map(String::as_str).ok_or_else(|| AlignmentError::UnknownSource(entity.clone()))
    }

    pub fn contains(&self, entity: &Iri) -> bool {
        self.sources.contains_key(entity)
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::{iri, Origin, Triple};

    #[test]
    fn correspondence_invariants() {
        assert!(matches!(
            Correspondence::certain(iri("http://x/a"), iri("http://x/a")),
            Err(AlignmentError::SelfCorrespondence(_))
        ));
        assert!(matches!(
            Correspondence::new(iri("http://x/a"), iri("http://x/b"), 1.5),
            Err(AlignmentError::ConfidenceOutOfRange(_))
        ));
        assert!(Correspondence::new(iri("http://x/a"), iri("http://x/b"), f64::NAN).is_err());
    }

    #[test]
    fn unordered_identity() {
        let mut a = Alignment::new();
        assert!(a.insert(Correspondence::new(iri("http://x/b"), iri("http://x/a"), 0.4).unwrap()));
        assert!(!a.insert(Correspondence::new(iri("http://x/a"), iri("http://x/b"), 0.9).unwrap()));
        assert_eq!(a.len(), 1);
        assert_eq!(a.get(&iri("http://x/b"), &iri("http://x/a")).unwrap().confidence, 0.9);
    }

    #[test]
    fn one_to_one_check() {
        let a: Alignment = [("a", "b"), ("c", "d")]
            .iter()
            .map(|(x, y)| Correspondence::certain(iri(&format!("http://x/{x}")), iri(&format!("http://x/{y}"))).unwrap())
            .collect();
        assert!(a.is_one_to_one());
        let mut b = a.clone();
        b.insert(Correspondence::certain(iri("http://x/a"), iri("http://x/d")).unwrap());
        assert!(!b.is_one_to_one());
    }

    #[test]
    fn membership_prefers_declaring_graph() {
        let a = KnowledgeGraph::from_triples(
            "A",
            Origin::Leaf,
            [Triple::new(iri("http://a/1"), iri("http://x/knows"), iri("http://b/1"))],
        );
        let b = KnowledgeGraph::from_triples(
            "B",
            Origin::Leaf,
            [
                Triple::new(iri("http://b/1"), iri("http://x/p"), iri("http://shared/o")),
                Triple::new(iri("http://b/2"), iri("http://x/p"), iri("http://shared/o")),
            ],
        );
        let c = KnowledgeGraph::from_triples(
            "C",
            Origin::Leaf,
            [Triple::new(iri("http://c/1"), iri("http://x/p"), iri("http://shared/o"))],
        );
        let m = Membership::from_kgs([&a, &b, &c]);
        assert_eq!(m.source_of(&iri("http://a/1")), Ok("A"));
        assert_eq!(m.source_of(&iri("http://b/1")), Ok("B"));
        assert!(m.source_of(&iri("http://shared/o")).is_err());
        // only A mentions it, as a predicate
        assert_eq!(m.source_of(&iri("http://x/knows")), Ok("A"));
    }
}
