use std::collections::{BTreeMap, BTreeSet};

use super::{Alignment, AlignmentError, Correspondence, DisjointSet, Membership, SourcePair};
use crate::rdf::Iri;

/// A connected component of the correspondence graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct EntityCluster {
    members: BTreeSet<(Iri, String)>,
}

impl EntityCluster {
    pub fn new(members: impl IntoIterator<Item = (Iri, String)>) -> Self {
        EntityCluster { members: members.into_iter().collect() }
    }

    pub fn members(&self) -> impl Iterator<Item = (&Iri, &str)> {
        self.members.iter().map(|(iri, src)| (iri, src.as_str()))
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members_of<'a>(&'a self, source: &'a str) -> impl Iterator<Item = &'a Iri> + 'a {
        self.members.iter().filter(move |(_, s)| s == source).map(|(iri, _)| iri)
    }

    pub fn sources(&self) -> BTreeSet<&str> {
        self.members.iter().map(|(_, s)| s.as_str()).collect()
    }

    /// False when two members come from the same source graph.
    pub fn is_source_consistent(&self) -> bool {
        self.sources().len() == self.members.len()
    }
}

/// Connected components of the alignment, excluding singletons, sorted by
/// their smallest member.
pub fn closure(alignment: &Alignment, membership: &Membership) -> Result<Vec<EntityCluster>, AlignmentError> {
    let mut ds = DisjointSet::new();
    for c in alignment.iter() {
        membership.source_of(&c.entity_one)?;
        membership.source_of(&c.entity_two)?;
        ds.union(&c.entity_one, &c.entity_two);
    }
    let mut clusters = ds
        .groups()
        .into_iter()
        .map(|group| {
            let members = group.into_iter().map(|iri| {
                // resolved above
                let src = membership.source_of(&iri).unwrap_or_default().to_string();
                (iri, src)
            });
            EntityCluster::new(members)
        })
        .collect::<Vec<_>>();
    clusters.sort();
    Ok(clusters)
}

/// Every cross-source combination between the two sources of `pair` within
/// each cluster, with confidence 1.0.
pub fn expand_to_pairs(clusters: &[EntityCluster], pair: &SourcePair) -> Alignment {
    let mut out = Alignment::new();
    if pair.is_intra_source() {
        return out;
    }
    for cluster in clusters {
        for a in cluster.members_of(pair.first()) {
            for b in cluster.members_of(pair.second()) {
                if let Ok(c) = Correspondence::certain(a.clone(), b.clone()) {
                    out.insert(c);
                }
            }
        }
    }
    out
}

/// All cross-source pairs of every cluster.
pub fn expand_all_pairs(clusters: &[EntityCluster]) -> Alignment {
    let mut out = Alignment::new();
    for cluster in clusters {
        let members: Vec<(&Iri, &str)> = cluster.members().collect();
        for (i, (a, sa)) in members.iter().enumerate() {
            for (b, sb) in &members[i + 1..] {
                if sa != sb {
                    if let Ok(c) = Correspondence::certain((*a).clone(), (*b).clone()) {
                        out.insert(c);
                    }
                }
            }
        }
    }
    out
}

/// Clusters holding more than one entity of the same source.
pub fn consistency_warnings(clusters: &[EntityCluster]) -> Vec<&EntityCluster> {
    clusters.iter().filter(|c| !c.is_source_consistent()).collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairSplit {
    pub buckets: BTreeMap<SourcePair, Alignment>,
    /// Correspondences between two entities of the same source.
    pub diagnostics: Alignment,
}

impl PairSplit {
    pub fn total(&self) -> usize {
        self.buckets.values().map(Alignment::len).sum::<usize>() + self.diagnostics.len()
    }
}

pub fn split_by_pair(alignment: &Alignment, membership: &Membership) -> Result<PairSplit, AlignmentError> {
    let mut split = PairSplit::default();
    for c in alignment.iter() {
        let a = membership.source_of(&c.entity_one)?;
        let b = membership.source_of(&c.entity_two)?;
        if a == b {
            split.diagnostics.insert(c.clone());
        } else {
            split.buckets.entry(SourcePair::new(a, b)).or_default().insert(c.clone());
        }
    }
    Ok(split)
}
