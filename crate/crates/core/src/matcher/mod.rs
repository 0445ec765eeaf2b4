//! The binary matcher contract and its implementations.

mod baseline;
mod external;

use thiserror::Error;

use crate::alignment::Alignment;
use crate::rdf::{Iri, KnowledgeGraph, Triple};

pub use baseline::{label_key, BaselineMatcher};
pub use external::{ExternalMatcher, ExternalMatcherConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatcherError {
    #[error("matcher did not finish within {0:?}")]
    Timeout(std::time::Duration),
    #[error("matcher exited with {code:?}: {stderr}")]
    NonZeroExit { code: Option<i32>, stderr: String },
    #[error("matcher output is invalid: {0}")]
    InvalidOutput(String),
    #[error("matcher output references {0}, which occurs in neither input graph")]
    ForeignEntity(Iri),
    #[error("matcher does not support incremental index updates")]
    WarmStartUnsupported,
    #[error("invalid matcher configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o error while running matcher: {0}")]
    Io(String),
}

impl From<std::io::Error> for MatcherError {
    fn from(e: std::io::Error) -> Self {
        MatcherError::Io(e.to_string())
    }
}

/// A system that aligns exactly two knowledge graphs.
pub trait Matcher: Send {
    fn name(&self) -> &str;

    /// Aligns `source` with `target`. `input` holds correspondences known
    /// beforehand.
    fn match_kgs(
        &mut self,
        source: &KnowledgeGraph,
        target: &KnowledgeGraph,
        input: &Alignment,
    ) -> Result<Alignment, MatcherError>;

    fn supports_warm_start(&self) -> bool {
        false
    }

    /// Informs a warm-start matcher that the graph it last indexed as target
    /// grew by `added` triples and is now known as `graph_id`.
    fn update_index(&mut self, graph_id: &str, added: &[Triple]) -> Result<(), MatcherError> {
        let _ = (graph_id, added);
        Err(MatcherError::WarmStartUnsupported)
    }

    /// A fresh instance with the same configuration and no warm state, for
    /// running independent tasks concurrently.
    fn fork(&self) -> Box<dyn Matcher>;
}

/// Checks that every entity of `output` occurs in one of the two graphs.
pub fn check_provenance(output: &Alignment, source: &KnowledgeGraph, target: &KnowledgeGraph) -> Result<(), MatcherError> {
    let known_source = source.iris();
    let known_target = target.iris();
    for entity in output.entities() {
        if !known_source.contains(entity) && !known_target.contains(entity) {
            return Err(MatcherError::ForeignEntity(entity.clone()));
        }
    }
    Ok(())
}
