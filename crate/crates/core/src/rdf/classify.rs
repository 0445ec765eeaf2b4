use std::collections::{HashMap, HashSet};

use serde::Serialize;

use super::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Class,
    Property,
    Instance,
}

impl EntityKind {
    pub const ALL: [EntityKind; 3] = [EntityKind::Class, EntityKind::Property, EntityKind::Instance];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Class => "class",
            EntityKind::Property => "property",
            EntityKind::Instance => "instance",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct KgStats {
    pub num_classes: usize,
    pub num_instances: usize,
    pub model_size: usize,
}

const META_CLASSES: [&str; 2] = [OWL_CLASS, RDFS_CLASS];
const META_PROPERTIES: [&str; 4] = [RDF_PROPERTY, OWL_OBJECT_PROPERTY, OWL_DATATYPE_PROPERTY, OWL_ANNOTATION_PROPERTY];

const BUILTIN_NAMESPACES: [&str; 4] = [
    "http://www.w3.org/1999/02/22-rdf-syntax-ns#",
    "http://www.w3.org/2000/01/rdf-schema#",
    "http://www.w3.org/2002/07/owl#",
    "http://www.w3.org/2001/XMLSchema#",
];

pub fn is_builtin_vocabulary(iri: &Iri) -> bool {
    BUILTIN_NAMESPACES.iter().any(|ns| iri.as_str().starts_with(ns))
}

fn is_meta(iri: &Iri) -> bool {
    let s = iri.as_str();
    META_CLASSES.contains(&s) || META_PROPERTIES.contains(&s)
}

/// Classifies every IRI of the graph.
///
/// Class: object of `rdf:type`, or typed `owl:Class`/`rdfs:Class`.
/// Property: typed as one of the property meta-classes, or used as a predicate.
/// Instance: anything else. Class wins over Property wins over Instance.
pub fn entity_kinds(kg: &KnowledgeGraph) -> HashMap<Iri, EntityKind> {
    let mut classes = HashSet::new();
    let mut properties = HashSet::new();
    for t in kg.triples() {
        properties.insert(&t.predicate);
        if t.predicate.as_str() == RDF_TYPE {
            if let Some(obj) = t.object.as_iri() {
                classes.insert(obj);
                if META_CLASSES.contains(&obj.as_str()) {
                    classes.insert(&t.subject);
                } else if META_PROPERTIES.contains(&obj.as_str()) {
                    properties.insert(&t.subject);
                }
            }
        }
    }
    kg.iris()
        .into_iter()
        .map(|iri| {
            let kind = if classes.contains(iri) {
                EntityKind::Class
            } else if properties.contains(iri) {
                EntityKind::Property
            } else {
                EntityKind::Instance
            };
            (iri.clone(), kind)
        })
        .collect()
}

pub fn entity_kind(kg: &KnowledgeGraph, entity: &Iri) -> Result<EntityKind, RdfError> {
    // Single-entity lookups rebuild the classification; callers classifying
    // many entities should use `entity_kinds`.
    entity_kinds(kg).remove(entity).ok_or_else(|| RdfError::UnknownEntity(entity.clone()))
}

/// Classes exclude the RDF/OWL vocabulary itself; instances are distinct
/// subjects typed with a non-meta class.
pub fn stats(kg: &KnowledgeGraph) -> KgStats {
    let num_classes = entity_kinds(kg)
        .into_iter()
        .filter(|(iri, kind)| *kind == EntityKind::Class && !is_builtin_vocabulary(iri))
        .count();
    let num_instances = kg
        .triples()
        .filter(|t| t.predicate.as_str() == RDF_TYPE)
        .filter(|t| t.object.as_iri().is_some_and(|o| !is_meta(o)))
        .map(|t| &t.subject)
        .collect::<HashSet<_>>()
        .len();
    KgStats { num_classes, num_instances, model_size: kg.len() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::iri;
    use proptest::prelude::*;

    fn kg(triples: &[(&str, &str, &str)]) -> KnowledgeGraph {
        KnowledgeGraph::from_triples(
            "k",
            Origin::Leaf,
            triples.iter().map(|(s, p, o)| Triple::new(iri(s), iri(p), iri(o))),
        )
    }

    #[test]
    fn empty_stats() {
        assert_eq!(stats(&kg(&[])), KgStats { num_classes: 0, num_instances: 0, model_size: 0 });
    }

    #[test]
    fn person_example() {
        let g = kg(&[("http://x/a", RDF_TYPE, "http://x/Person"), ("http://x/Person", RDF_TYPE, OWL_CLASS)]);
        assert_eq!(stats(&g), KgStats { num_classes: 1, num_instances: 1, model_size: 2 });
    }

    #[test]
    fn untyped_graph_has_no_classes_or_instances() {
        let g = kg(&[
            ("http://x/a", "http://x/p", "http://x/b"),
            ("http://x/b", "http://x/p", "http://x/c"),
            ("http://x/c", "http://x/p", "http://x/d"),
            ("http://x/d", "http://x/q", "http://x/e"),
            ("http://x/e", "http://x/q", "http://x/a"),
        ]);
        assert_eq!(stats(&g), KgStats { num_classes: 0, num_instances: 0, model_size: 5 });
    }

    #[test]
    fn kinds() {
        let g = kg(&[
            ("http://x/luke", RDF_TYPE, "http://x/Jedi"),
            ("http://x/luke", "http://x/knows", "http://x/leia"),
            ("http://x/hasName", RDF_TYPE, OWL_DATATYPE_PROPERTY),
        ]);
        assert_eq!(entity_kind(&g, &iri("http://x/Jedi")), Ok(EntityKind::Class));
        assert_eq!(entity_kind(&g, &iri("http://x/knows")), Ok(EntityKind::Property));
        assert_eq!(entity_kind(&g, &iri("http://x/hasName")), Ok(EntityKind::Property));
        assert_eq!(entity_kind(&g, &iri("http://x/luke")), Ok(EntityKind::Instance));
        assert_eq!(entity_kind(&g, &iri("http://x/leia")), Ok(EntityKind::Instance));
        assert!(matches!(entity_kind(&g, &iri("http://x/yoda")), Err(RdfError::UnknownEntity(_))));
    }

    #[test]
    fn class_beats_property() {
        // used as a predicate and as a type
        let g = kg(&[("http://x/a", "http://x/odd", "http://x/b"), ("http://x/c", RDF_TYPE, "http://x/odd")]);
        assert_eq!(entity_kind(&g, &iri("http://x/odd")), Ok(EntityKind::Class));
    }

    proptest! {
        #[test]
        fn model_size_counts_distinct_triples(edges in proptest::collection::vec((0u8..6, 0u8..3, 0u8..6), 0..40)) {
            let triples: Vec<Triple> = edges
                .iter()
                .map(|(s, p, o)| {
                    let p = if *p == 0 { RDF_TYPE.to_string() } else { format!("http://x/p{p}") };
                    Triple::new(iri(&format!("http://x/e{s}")), iri(&p), iri(&format!("http://x/e{o}")))
                })
                .collect();
            let distinct: std::collections::HashSet<_> = triples.iter().cloned().collect();
            let g = KnowledgeGraph::from_triples("k", Origin::Leaf, triples);
            let s = stats(&g);
            prop_assert_eq!(s.model_size, distinct.len());
            let kinds = entity_kinds(&g);
            prop_assert_eq!(&kinds, &entity_kinds(&g));
            prop_assert_eq!(kinds.len(), g.iris().len());
        }
    }
}
