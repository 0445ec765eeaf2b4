//! RDF terms, triples and in-memory knowledge graphs.

mod classify;
mod ntriples;

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use indexmap::IndexSet;
use thiserror::Error;

pub use classify::{entity_kind, entity_kinds, is_builtin_vocabulary, stats, EntityKind, KgStats};
pub use ntriples::{parse_ntriples, write_ntriples};

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const RDF_PROPERTY: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#Property";
pub const RDF_LANG_STRING: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString";
pub const RDFS_CLASS: &str = "http://www.w3.org/2000/01/rdf-schema#Class";
pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
pub const OWL_CLASS: &str = "http://www.w3.org/2002/07/owl#Class";
pub const OWL_OBJECT_PROPERTY: &str = "http://www.w3.org/2002/07/owl#ObjectProperty";
pub const OWL_DATATYPE_PROPERTY: &str = "http://www.w3.org/2002/07/owl#DatatypeProperty";
pub const OWL_ANNOTATION_PROPERTY: &str = "http://www.w3.org/2002/07/owl#AnnotationProperty";
pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RdfError {
    #[error("invalid IRI {0:?}")]
    InvalidIri(String),
    #[error("literal cannot carry both a language tag and a datatype")]
    LangAndDatatype,
    #[error("malformed N-Triples statement on line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("input is not valid UTF-8")]
    InvalidUtf8,
    #[error("entity {0} does not occur in the knowledge graph")]
    UnknownEntity(Iri),
}

/// An absolute IRI. Cheap to clone.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Iri(Arc<str>);

impl Iri {
    pub fn new(value: impl AsRef<str>) -> Result<Self, RdfError> {
        let value = value.as_ref();
        if !is_absolute_iri(value) {
            return Err(RdfError::InvalidIri(value.to_string()));
        }
        Ok(Iri(Arc::from(value)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Local name: text after the last `#`, else after the last `/`.
    /// `None` when the IRI has neither separator.
    pub fn fragment(&self) -> Option<&str> {
        let s = self.as_str();
        if let Some(pos) = s.rfind('#') {
            return Some(&s[pos + 1..]);
        }
        s.rfind('/').map(|pos| &s[pos + 1..])
    }
}

fn is_absolute_iri(value: &str) -> bool {
    if value.is_empty() || value.chars().any(|c| c.is_whitespace() || c == '<' || c == '>' || c == '"') {
        return false;
    }
    let Some(colon) = value.find(':') else {
        return false;
    };
    let scheme = &value[..colon];
    let mut chars = scheme.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    lexical: String,
    language: Option<String>,
    datatype: Option<Iri>,
}

impl Literal {
    pub fn plain(lexical: impl Into<String>) -> Self {
        Literal { lexical: lexical.into(), language: None, datatype: None }
    }

    pub fn lang(lexical: impl Into<String>, tag: &str) -> Self {
        Literal { lexical: lexical.into(), language: Some(tag.to_ascii_lowercase()), datatype: None }
    }

    /// A typed literal. `xsd:string` is folded into the plain form since both denote the same value.
    pub fn typed(lexical: impl Into<String>, datatype: Iri) -> Self {
        let datatype = (datatype.as_str() != XSD_STRING).then_some(datatype);
        Literal { lexical: lexical.into(), language: None, datatype }
    }

    pub fn new(lexical: impl Into<String>, language: Option<&str>, datatype: Option<Iri>) -> Result<Self, RdfError> {
        match (language, datatype) {
            (Some(_), Some(dt)) if dt.as_str() != RDF_LANG_STRING => Err(RdfError::LangAndDatatype),
            (Some(tag), _) => Ok(Literal::lang(lexical, tag)),
            (None, Some(dt)) => Ok(Literal::typed(lexical, dt)),
            (None, None) => Ok(Literal::plain(lexical)),
        }
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn language(&self) -> Option<&str> {
        self.language.as_deref()
    }

    pub fn datatype(&self) -> Option<&Iri> {
        self.datatype.as_ref()
    }

    /// Literals carrying natural-language text: language-tagged or string-typed.
    pub fn is_textual(&self) -> bool {
        self.language.is_some() || self.datatype.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(Iri),
    Literal(Literal),
}

impl Term {
    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(iri) => Some(iri),
            Term::Literal(_) => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(lit) => Some(lit),
            Term::Iri(_) => None,
        }
    }
}

impl From<Iri> for Term {
    fn from(iri: Iri) -> Self {
        Term::Iri(iri)
    }
}

impl From<Literal> for Term {
    fn from(lit: Literal) -> Self {
        Term::Literal(lit)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: Iri,
    pub predicate: Iri,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Iri, predicate: Iri, object: impl Into<Term>) -> Self {
        Triple { subject, predicate, object: object.into() }
    }

    pub fn iris(&self) -> impl Iterator<Item = &Iri> {
        [Some(&self.subject), Some(&self.predicate), self.object.as_iri()].into_iter().flatten()
    }
}

impl serde::Serialize for Iri {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Origin {
    Leaf,
    /// Produced by merging; `task` is the index of the plan task that created it.
    Union { task: usize },
    CopiedLeaf,
}

/// A named, duplicate-free set of triples. Insertion order is preserved so
/// serialization is deterministic.
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    id: String,
    triples: IndexSet<Triple>,
    origin: Origin,
}

impl KnowledgeGraph {
    pub fn new(id: impl Into<String>, origin: Origin) -> Self {
        KnowledgeGraph { id: id.into(), triples: IndexSet::new(), origin }
    }

    pub fn from_triples(id: impl Into<String>, origin: Origin, triples: impl IntoIterator<Item = Triple>) -> Self {
        KnowledgeGraph { id: id.into(), triples: triples.into_iter().collect(), origin }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> impl ExactSizeIterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.contains(triple)
    }

    /// Returns `false` if the triple was already present.
    pub fn insert(&mut self, triple: Triple) -> bool {
        self.triples.insert(triple)
    }

    /// Every IRI occurring in any position.
    pub fn iris(&self) -> HashSet<&Iri> {
        self.triples.iter().flat_map(Triple::iris).collect()
    }

    pub fn contains_iri(&self, iri: &Iri) -> bool {
        self.triples.iter().any(|t| t.iris().any(|i| i == iri))
    }

    /// IRIs in subject position that are not RDF/RDFS/OWL/XSD vocabulary.
    pub fn declared_entities(&self) -> BTreeSet<&Iri> {
        self.triples
            .iter()
            .map(|t| &t.subject)
            .filter(|iri| !is_builtin_vocabulary(iri))
            .collect()
    }

    /// A copy with a new identity and origin; used when a leaf becomes a merge target.
    pub fn copy_as(&self, id: impl Into<String>, origin: Origin) -> Self {
        KnowledgeGraph { id: id.into(), triples: self.triples.clone(), origin }
    }

    /// Order-independent view of the triple set.
    pub fn triple_set(&self) -> BTreeSet<&Triple> {
        self.triples.iter().collect()
    }
}

#[cfg(test)]
pub(crate) fn iri(s: &str) -> Iri {
    Iri::new(s).unwrap()
}
