//! Line-oriented N-Triples reader and writer.

use std::fmt::Write as _;

use super::{Iri, KnowledgeGraph, Literal, Origin, RdfError, Term, Triple};

/// Parses an N-Triples document. Blank nodes become `urn:skolem:<id>:<label>`.
/// Fails on the first malformed statement.
pub fn parse_ntriples(bytes: &[u8], id: &str) -> Result<KnowledgeGraph, RdfError> {
    let text = std::str::from_utf8(bytes).map_err(|_| RdfError::InvalidUtf8)?;
    let mut kg = KnowledgeGraph::new(id, Origin::Leaf);
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let mut cursor = Cursor { rest: line, graph_id: id, line: line_no };
        cursor.skip_ws();
        if cursor.rest.is_empty() || cursor.rest.starts_with('#') {
            continue;
        }
        let triple = cursor.statement()?;
        kg.insert(triple);
    }
    Ok(kg)
}

pub fn write_ntriples(kg: &KnowledgeGraph) -> Vec<u8> {
    let mut out = String::with_capacity(kg.len() * 96);
    for triple in kg.triples() {
        write_iri(&mut out, &triple.subject);
        out.push(' ');
        write_iri(&mut out, &triple.predicate);
        out.push(' ');
        match &triple.object {
            Term::Iri(iri) => write_iri(&mut out, iri),
            Term::Literal(lit) => write_literal(&mut out, lit),
        }
        out.push_str(" .\n");
    }
    out.into_bytes()
}

fn write_iri(out: &mut String, iri: &Iri) {
    out.push('<');
    for c in iri.as_str().chars() {
        if matches!(c, '{' | '}' | '|' | '^' | '`' | '\\') || (c as u32) <= 0x20 {
            let _ = write!(out, "\\u{:04X}", c as u32);
        } else {
            out.push(c);
        }
    }
    out.push('>');
}

fn write_literal(out: &mut String, lit: &Literal) {
    out.push('"');
    for c in lit.lexical().chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    if let Some(tag) = lit.language() {
        out.push('@');
        out.push_str(tag);
    } else if let Some(dt) = lit.datatype() {
        out.push_str("^^");
        write_iri(out, dt);
    }
}

struct Cursor<'a> {
    rest: &'a str,
    graph_id: &'a str,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, reason: impl Into<String>) -> RdfError {
        RdfError::MalformedLine { line: self.line, reason: reason.into() }
    }

    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start_matches([' ', '\t']);
    }

    fn peek(&self) -> Option<char> {
        self.rest.chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.rest = &self.rest[c.len_utf8()..];
        Some(c)
    }

    fn expect(&mut self, c: char) -> Result<(), RdfError> {
        match self.bump() {
            Some(found) if found == c => Ok(()),
            Some(found) => Err(self.err(format!("expected '{c}', found '{found}'"))),
            None => Err(self.err(format!("expected '{c}', found end of line"))),
        }
    }

    fn statement(&mut self) -> Result<Triple, RdfError> {
        let subject = match self.peek() {
            Some('<') => self.iri_ref()?,
            Some('_') => self.blank_node()?,
            _ => return Err(self.err("subject must be an IRI or blank node")),
        };
        self.skip_ws();
        let predicate = match self.peek() {
            Some('<') => self.iri_ref()?,
            _ => return Err(self.err("predicate must be an IRI")),
        };
        self.skip_ws();
        let object = match self.peek() {
            Some('<') => Term::Iri(self.iri_ref()?),
            Some('_') => Term::Iri(self.blank_node()?),
            Some('"') => Term::Literal(self.literal()?),
            _ => return Err(self.err("object must be an IRI, blank node or literal")),
        };
        self.skip_ws();
        self.expect('.')?;
        self.skip_ws();
        if !(self.rest.is_empty() || self.rest.starts_with('#')) {
            return Err(self.err("trailing content after '.'"));
        }
        Ok(Triple { subject, predicate, object })
    }

    fn iri_ref(&mut self) -> Result<Iri, RdfError> {
        self.expect('<')?;
        let mut value = String::new();
        loop {
            match self.bump() {
                None => return Err(self.err("unterminated IRI")),
                Some('>') => break,
                Some('\\') => value.push(self.unicode_escape()?),
                Some(c) if c == ' ' || c == '<' || c == '"' => {
                    return Err(self.err(format!("character '{c}' not allowed in IRI")))
                }
                Some(c) => value.push(c),
            }
        }
        Iri::new(&value).map_err(|_| self.err(format!("not an absolute IRI: {value}")))
    }

    fn unicode_escape(&mut self) -> Result<char, RdfError> {
        let len = match self.bump() {
            Some('u') => 4,
            Some('U') => 8,
            _ => return Err(self.err("invalid escape in IRI")),
        };
        self.hex_char(len)
    }

    fn hex_char(&mut self, len: usize) -> Result<char, RdfError> {
        if self.rest.len() < len || !self.rest.is_char_boundary(len) {
            return Err(self.err("truncated unicode escape"));
        }
        let (hex, rest) = self.rest.split_at(len);
        let code = u32::from_str_radix(hex, 16).map_err(|_| self.err("invalid unicode escape"))?;
        self.rest = rest;
        char::from_u32(code).ok_or_else(|| self.err("escape is not a unicode scalar value"))
    }

    fn blank_node(&mut self) -> Result<Iri, RdfError> {
        if !self.rest.starts_with("_:") {
            return Err(self.err("expected blank node label"));
        }
        self.rest = &self.rest[2..];
        let end = self
            .rest
            .find(|c: char| !(c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | '\u{00B7}')))
            .unwrap_or(self.rest.len());
        // a trailing '.' terminates the statement, it is not part of the label
        let label = self.rest[..end].trim_end_matches('.');
        if label.is_empty() || label.starts_with(['-', '.']) {
            return Err(self.err("empty or invalid blank node label"));
        }
        self.rest = &self.rest[label.len()..];
        Iri::new(format!("urn:skolem:{}:{}", self.graph_id, label))
            .map_err(|_| self.err(format!("graph id {:?} cannot scope a skolem IRI", self.graph_id)))
    }

    fn literal(&mut self) -> Result<Literal, RdfError> {
        self.expect('"')?;
        let mut lexical = String::new();
        loop {
            match self.bump() {
                None => return Err(self.err("unterminated string literal")),
                Some('"') => break,
                Some('\\') => {
                    let c = match self.bump() {
                        Some('t') => '\t',
                        Some('b') => '\u{8}',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('f') => '\u{c}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some('u') => self.hex_char(4)?,
                        Some('U') => self.hex_char(8)?,
                        _ => return Err(self.err("invalid string escape")),
                    };
                    lexical.push(c);
                }
                Some(c) => lexical.push(c),
            }
        }
        match self.peek() {
            Some('@') => {
                self.bump();
                let end = self
                    .rest
                    .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-'))
                    .unwrap_or(self.rest.len());
                let tag = &self.rest[..end];
                let valid = !tag.is_empty()
                    && tag.split('-').enumerate().all(|(i, part)| {
                        !part.is_empty()
                            && if i == 0 {
                                part.chars().all(|c| c.is_ascii_alphabetic())
                            } else {
                                part.chars().all(|c| c.is_ascii_alphanumeric())
                            }
                    });
                if !valid {
                    return Err(self.err("invalid language tag"));
                }
                self.rest = &self.rest[end..];
                Ok(Literal::lang(lexical, tag))
            }
            Some('^') => {
                self.expect('^')?;
                self.expect('^')?;
                let dt = self.iri_ref()?;
                Ok(Literal::typed(lexical, dt))
            }
            _ => Ok(Literal::plain(lexical)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::iri;
    use proptest::prelude::*;

    #[test]
    fn empty_input() {
        let kg = parse_ntriples(b"", "k").unwrap();
        assert!(kg.is_empty());
        assert_eq!(kg.origin(), Origin::Leaf);
    }

    #[test]
    fn duplicate_lines_collapse() {
        let doc = b"<http://x/s> <http://x/p> <http://x/o> .\n<http://x/s> <http://x/p> <http://x/o> .\n";
        assert_eq!(parse_ntriples(doc, "k").unwrap().len(), 1);
    }

    #[test]
    fn language_tagged_literal() {
        let kg = parse_ntriples(b"<http://x/s> <http://x/p> \"x\"@en .", "k").unwrap();
        let t = kg.triples().next().unwrap();
        let lit = t.object.as_literal().unwrap();
        assert_eq!(lit.lexical(), "x");
        assert_eq!(lit.language(), Some("en"));
        assert!(lit.datatype().is_none());
    }

    #[test]
    fn typed_literal_and_comments() {
        let doc = "# header\n\n<http://x/s> <http://x/p> \"4\"^^<http://www.w3.org/2001/XMLSchema#integer> . # trailing\n";
        let kg = parse_ntriples(doc.as_bytes(), "k").unwrap();
        let lit = kg.triples().next().unwrap().object.as_literal().unwrap().clone();
        assert_eq!(lit.datatype().unwrap().as_str(), "http://www.w3.org/2001/XMLSchema#integer");
    }

    #[test]
    fn blank_nodes_are_skolemized_per_graph() {
        let doc = b"_:b0 <http://x/p> _:b1.\n";
        let kg = parse_ntriples(doc, "src1").unwrap();
        let t = kg.triples().next().unwrap();
        assert_eq!(t.subject.as_str(), "urn:skolem:src1:b0");
        assert_eq!(t.object.as_iri().unwrap().as_str(), "urn:skolem:src1:b1");
    }

    #[test]
    fn escapes() {
        let doc = r#"<http://x/s\u00E9> <http://x/p> "a\"b\\c\nd\u00e9" ."#;
        let kg = parse_ntriples(doc.as_bytes(), "k").unwrap();
        let t = kg.triples().next().unwrap();
        assert_eq!(t.subject.as_str(), "http://x/s\u{e9}");
        assert_eq!(t.object.as_literal().unwrap().lexical(), "a\"b\\c\nd\u{e9}");
    }

    #[test]
    fn malformed_lines_report_line_number() {
        let cases: &[&[u8]] = &[
            b"<http://x/s> <http://x/p> <http://x/o>\n",
            b"<http://x/s> \"p\" <http://x/o> .\n",
            b"<http://x/s> <http://x/p> \"open .\n",
            b"<relative> <http://x/p> <http://x/o> .\n",
            b"<http://x/s> <http://x/p> <http://x/o> . junk\n",
            b"<http://x/s> <http://x/p> \"x\"@ .\n",
        ];
        for doc in cases {
            let mut full = b"<http://x/a> <http://x/b> <http://x/c> .\n".to_vec();
            full.extend_from_slice(doc);
            match parse_ntriples(&full, "k") {
                Err(RdfError::MalformedLine { line, .. }) => assert_eq!(line, 2),
                other => panic!("expected malformed line for {:?}, got {other:?}", String::from_utf8_lossy(doc)),
            }
        }
    }

    #[test]
    fn invalid_utf8() {
        assert_eq!(parse_ntriples(&[0xff, 0xfe], "k").unwrap_err(), RdfError::InvalidUtf8);
    }

    fn arb_iri() -> impl Strategy<Value = Iri> {
        "[a-z]{1,6}(/[A-Za-z0-9_{}|^]{0,5})?".prop_map(|s| iri(&format!("http://ex.org/{s}")))
    }

    fn arb_term() -> impl Strategy<Value = Term> {
        prop_oneof![
            arb_iri().prop_map(Term::Iri),
            "\\PC{0,8}".prop_map(|s| Term::Literal(Literal::plain(s))),
            ("[a-z ]{0,8}", "[a-z]{2}(-[a-z0-9]{2})?").prop_map(|(s, t)| Term::Literal(Literal::lang(s, &t))),
            ("[0-9]{1,4}").prop_map(|s| Term::Literal(Literal::typed(
                s,
                iri("http://www.w3.org/2001/XMLSchema#integer")
            ))),
        ]
    }

    proptest! {
        #[test]
        fn write_then_parse_is_identity(triples in proptest::collection::vec((arb_iri(), arb_iri(), arb_term()), 0..20)) {
            let kg = KnowledgeGraph::from_triples(
                "k",
                Origin::Leaf,
                triples.into_iter().map(|(s, p, o)| Triple::new(s, p, o)),
            );
            let reparsed = parse_ntriples(&write_ntriples(&kg), "k").unwrap();
            prop_assert_eq!(kg.triple_set(), reparsed.triple_set());
        }
    }
}
