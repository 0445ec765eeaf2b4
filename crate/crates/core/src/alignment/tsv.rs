//! `entityOne<TAB>entityTwo<TAB>=<TAB>confidence` rows; `#` starts a comment line.

use std::fmt::Write as _;

use super::{Alignment, AlignmentError, Correspondence};
use crate::rdf::Iri;

pub fn read_alignment(bytes: &[u8]) -> Result<Alignment, AlignmentError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| AlignmentError::MalformedRow { line: 0, reason: format!("invalid UTF-8: {e}") })?;
    let mut alignment = Alignment::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let row = raw.trim_end_matches('\r');
        if row.trim().is_empty() || row.starts_with('#') {
            continue;
        }
        let malformed = |reason: &str| AlignmentError::MalformedRow { line, reason: reason.to_string() };
        let fields: Vec<&str> = row.split('\t').collect();
        let [one, two, relation, confidence] = fields[..] else {
            return Err(malformed("expected 4 tab-separated fields"));
        };
        if relation != "=" {
            return Err(malformed("relation must be '='"));
        }
        let one = Iri::new(one).map_err(|_| malformed("first entity is not an absolute IRI"))?;
        let two = Iri::new(two).map_err(|_| malformed("second entity is not an absolute IRI"))?;
        let value: f64 = confidence.trim().parse().map_err(|_| malformed("confidence is not a number"))?;
        if !(0.0..=1.0).contains(&value) {
            return Err(AlignmentError::RowConfidenceOutOfRange { line, value });
        }
        let c = Correspondence::new(one, two, value).map_err(|e| malformed(&e.to_string()))?;
        alignment.insert(c);
    }
    Ok(alignment)
}

/// Rows in canonical pair order, smaller IRI first. Confidences use the
/// shortest representation that parses back to the same value.
pub fn write_alignment(alignment: &Alignment) -> Vec<u8> {
    let mut out = String::new();
    for c in alignment.iter() {
        let key = c.key();
        let _ = writeln!(out, "{}\t{}\t{}\t{}", key.0, key.1, c.relation, c.confidence);
    }
    out.into_bytes()
}
