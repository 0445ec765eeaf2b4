//! Textual profiles of knowledge graphs: tokenization, tf-idf weighting and
//! cosine similarity between sources.

mod porter;
mod profile;

use std::collections::BTreeMap;

use crate::rdf::{KnowledgeGraph, Term};

pub use porter::stem;
pub use profile::{build_profiles, cosine, write_profiles, SimilarityMatrix, TextProfile};

/// English stopwords (the 33-word list used by Lucene's English analyzer).
pub const STOPWORDS: [&str; 33] = [
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "if", "in", "into", "is", "it", "no", "not", "of",
    "on", "or", "such", "that", "the", "their", "then", "there", "these", "they", "this", "to", "was", "will", "with",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.contains(&token)
}

/// Bag of normalized tokens extracted from one graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenDocument {
    pub source: String,
    pub counts: BTreeMap<String, usize>,
}

impl TokenDocument {
    pub fn new(source: impl Into<String>) -> Self {
        TokenDocument { source: source.into(), counts: BTreeMap::new() }
    }

    pub fn add(&mut self, tokens: impl IntoIterator<Item = String>) {
        for t in tokens {
            *self.counts.entry(t).or_default() += 1;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }
}

/// Splits after `.`, `!` or `?` when followed by whitespace.
fn sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') && chars.peek().is_some_and(|(_, next)| next.is_whitespace()) {
            out.push(&text[start..i + c.len_utf8()]);
            start = i + c.len_utf8();
        }
    }
    out.push(&text[start..]);
    out
}

fn words(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty())
}

fn normalize<'a>(raw: impl Iterator<Item = &'a str>) -> Vec<String> {
    raw.map(str::to_lowercase).filter(|w| !w.is_empty() && !is_stopword(w)).map(|w| stem(&w)).collect()
}

/// Sentence splitting, tokenization, lowercasing, stopword removal, stemming.
pub fn tokenize_literal(text: &str) -> Vec<String> {
    sentences(text).into_iter().flat_map(|s| normalize(words(s))).collect()
}

/// Splits a camel-case word: `hasPartOf` -> `has`, `Part`, `Of`;
/// `XMLParser` -> `XML`, `Parser`.
fn camel_parts(word: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = word.char_indices().collect();
    let mut parts = Vec::new();
    let mut start = 0;
    for w in 1..chars.len() {
        let (i, c) = chars[w];
        let prev = chars[w - 1].1;
        let next_lower = chars.get(w + 1).is_some_and(|(_, n)| n.is_lowercase());
        let boundary = c.is_uppercase() && (prev.is_lowercase() || prev.is_numeric() || (prev.is_uppercase() && next_lower));
        if boundary {
            parts.push(&word[start..i]);
            start = i;
        }
    }
    parts.push(&word[start..]);
    parts
}

/// Like [`tokenize_literal`] without sentence splitting, plus camel-case and
/// `-`/`_`/`~` splitting.
pub fn tokenize_fragment(fragment: &str) -> Vec<String> {
    let pieces = fragment
        .split(['-', '_', '~'])
        .flat_map(words)
        .flat_map(camel_parts);
    normalize(pieces)
}

/// Tokens from every textual literal and from the fragment of every IRI
/// occurrence (subject, predicate and object positions).
pub fn extract_document(kg: &KnowledgeGraph) -> TokenDocument {
    let mut doc = TokenDocument::new(kg.id());
    for t in kg.triples() {
        for iri in t.iris() {
            if let Some(fragment) = iri.fragment() {
                doc.add(tokenize_fragment(fragment));
            }
        }
        if let Term::Literal(lit) = &t.object {
            if lit.is_textual() {
                doc.add(tokenize_literal(lit.lexical()));
            }
        }
    }
    doc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::{iri, Literal, Origin, Triple};

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn literal_pipeline() {
        assert_eq!(tokenize_literal("The Force"), toks(&["forc"]));
        assert_eq!(tokenize_literal(""), Vec::<String>::new());
        assert_eq!(tokenize_literal("Ships. Ships!"), toks(&["ship", "ship"]));
        assert_eq!(tokenize_literal("Star Wars"), toks(&["star", "war"]));
    }

    #[test]
    fn sentence_boundaries() {
        assert_eq!(sentences("A b. C d! E? f"), vec!["A b.", " C d!", " E?", " f"]);
        assert_eq!(sentences("v1.2 is out"), vec!["v1.2 is out"]);
    }

    #[test]
    fn fragment_pipeline() {
        assert_eq!(tokenize_fragment("hasPartOf"), toks(&["ha", "part"]));
        assert_eq!(tokenize_fragment("star-wars_ship"), toks(&["star", "war", "ship"]));
        assert_eq!(tokenize_fragment("X"), toks(&["x"]));
        assert_eq!(tokenize_fragment("XMLParser~v2"), toks(&["xml", "parser", "v2"]));
        assert_eq!(tokenize_fragment(""), Vec::<String>::new());
    }

    #[test]
    fn camel_case_splits() {
        assert_eq!(camel_parts("hasPartOf"), vec!["has", "Part", "Of"]);
        assert_eq!(camel_parts("XMLParser"), vec!["XML", "Parser"]);
        assert_eq!(camel_parts("lower"), vec!["lower"]);
        assert_eq!(camel_parts("Episode4Hope"), vec!["Episode4", "Hope"]);
    }

    #[test]
    fn documents() {
        let star_wars = KnowledgeGraph::from_triples(
            "k",
            Origin::Leaf,
            [Triple::new(iri("urn:a"), iri("urn:b"), Literal::lang("Star Wars", "en"))],
        );
        let doc = extract_document(&star_wars);
        assert_eq!(doc.counts, BTreeMap::from([("star".into(), 1), ("war".into(), 1)]));

        let jedi = iri("http://x/Jedi_Knight");
        let only_iri = KnowledgeGraph::from_triples("k", Origin::Leaf, [Triple::new(jedi.clone(), jedi.clone(), jedi)]);
        let doc = extract_document(&only_iri);
        assert_eq!(doc.counts, BTreeMap::from([("jedi".into(), 3), ("knight".into(), 3)]));

        let numbers = KnowledgeGraph::from_triples(
            "k",
            Origin::Leaf,
            [Triple::new(
                iri("urn:a"),
                iri("urn:b"),
                Literal::typed("42", iri("http://www.w3.org/2001/XMLSchema#integer")),
            )],
        );
        assert!(extract_document(&numbers).is_empty());
    }
}
