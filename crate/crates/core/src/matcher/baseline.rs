//! Exact label matcher used as the built-in 1:1 system.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use super::{Matcher, MatcherError};
use crate::alignment::{Alignment, Correspondence, PairKey};
use crate::rdf::{is_builtin_vocabulary, Iri, KnowledgeGraph, Term, Triple, RDFS_LABEL};
use crate::text::tokenize_fragment;

/// Lowercased, whitespace-collapsed label.
pub fn label_key(label: &str) -> String {
    label.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Key {
    text: String,
    from_label: bool,
}

/// Entities of one graph together with their normalized labels.
#[derive(Debug, Clone, Default)]
struct LabelIndex {
    graph_id: String,
    labels: BTreeMap<Iri, BTreeSet<String>>,
}

impl LabelIndex {
    fn build(kg: &KnowledgeGraph) -> Self {
        let mut index = LabelIndex { graph_id: kg.id().to_string(), labels: BTreeMap::new() };
        index.add(kg.triples());
        index
    }

    fn add<'a>(&mut self, triples: impl IntoIterator<Item = &'a Triple>) {
        for t in triples {
            if is_builtin_vocabulary(&t.subject) {
                continue;
            }
            let labels = self.labels.entry(t.subject.clone()).or_default();
            if t.predicate.as_str() == RDFS_LABEL {
                if let Term::Literal(lit) = &t.object {
                    let key = label_key(lit.lexical());
                    if !key.is_empty() {
                        labels.insert(key);
                    }
                }
            }
        }
    }

    /// Smallest label if any, otherwise the stemmed fragment tokens.
    fn keys(&self, exclude: &HashSet<&Iri>) -> HashMap<Key, Vec<&Iri>> {
        let mut by_key: HashMap<Key, Vec<&Iri>> = HashMap::new();
        for (entity, labels) in &self.labels {
            if exclude.contains(entity) {
                continue;
            }
            let key = match labels.first() {
                Some(label) => Key { text: label.clone(), from_label: true },
                None => {
                    let tokens = entity.fragment().map(tokenize_fragment).unwrap_or_default();
                    if tokens.is_empty() {
                        continue;
                    }
                    Key { text: tokens.join(" "), from_label: false }
                }
            };
            by_key.entry(key).or_default().push(entity);
        }
        by_key
    }
}

/// Matches entities whose normalized label keys coincide, 1:1.
///
/// Conflicts are resolved greedily, preferring label-derived keys over
/// fragment-derived ones and then the lexicographically smaller entity pair.
/// Correspondences of the input alignment are passed through and their
/// entities are not matched again.
#[derive(Debug, Clone, Default)]
pub struct BaselineMatcher {
    warm_start: bool,
    warm: Option<LabelIndex>,
    index_builds: usize,
}

impl BaselineMatcher {
    pub fn new() -> Self {
        Self::default()
    }

    /// Keeps the target index between calls and accepts incremental updates.
    pub fn with_warm_start() -> Self {
        BaselineMatcher { warm_start: true, ..Self::default() }
    }

    /// Number of full (non-incremental) index builds so far.
    pub fn index_builds(&self) -> usize {
        self.index_builds
    }
}

impl Matcher for BaselineMatcher {
    fn name(&self) -> &str {
        "baseline"
    }

    fn match_kgs(
        &mut self,
        source: &KnowledgeGraph,
        target: &KnowledgeGraph,
        input: &Alignment,
    ) -> Result<Alignment, MatcherError> {
        let source_index = LabelIndex::build(source);
        self.index_builds += 1;
        let warm_hit = self.warm.as_ref().is_some_and(|w| w.graph_id == target.id());
        let target_index = if warm_hit {
            self.warm.take().expect("checked")
        } else {
            self.index_builds += 1;
            LabelIndex::build(target)
        };

        let excluded: HashSet<&Iri> = input.iter().flat_map(|c| [&c.entity_one, &c.entity_two]).collect();
        let source_keys = source_index.keys(&excluded);
        let target_keys = target_index.keys(&excluded);

        let mut candidates: Vec<(u8, PairKey, &Iri, &Iri)> = Vec::new();
        for (key, sources) in &source_keys {
            let Some(targets) = target_keys.get(key) else { continue };
            for s in sources {
                for t in targets {
                    if s != t {
                        candidates.push((u8::from(!key.from_label), PairKey::new(s, t), *s, *t));
                    }
                }
            }
        }
        candidates.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));

        let mut out = input.clone();
        let mut used: HashSet<&Iri> = HashSet::new();
        for (_, _, s, t) in candidates {
            if used.contains(s) || used.contains(t) {
                continue;
            }
            used.insert(s);
            used.insert(t);
            out.insert(Correspondence::certain(s.clone(), t.clone()).expect("distinct entities"));
        }

        if self.warm_start {
            self.warm = Some(target_index);
        }
        Ok(out)
    }

    fn supports_warm_start(&self) -> bool {
        self.warm_start
    }

    fn update_index(&mut self, graph_id: &str, added: &[Triple]) -> Result<(), MatcherError> {
        if !self.warm_start {
            return Err(MatcherError::WarmStartUnsupported);
        }
        if let Some(index) = self.warm.as_mut() {
            index.graph_id = graph_id.to_string();
            index.add(added);
        }
        Ok(())
    }

    fn fork(&self) -> Box<dyn Matcher> {
        Box::new(BaselineMatcher { warm_start: self.warm_start, ..Self::default() })
    }
}
