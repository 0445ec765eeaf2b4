//! Pairwise precision, recall and F1 against gold standards.

mod report;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{
    closure, expand_to_pairs, read_alignment, split_by_pair, Alignment, AlignmentError, Correspondence, Membership,
    SourcePair,
};
use crate::rdf::{entity_kinds, EntityKind, Iri, KnowledgeGraph};

pub use report::{gold_policy, write_results_csv, ResultRow, RunLabels};

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error("gold standard {path}: {reason}")]
    InvalidGold { path: String, reason: String },
    #[error("no gold standards found in {0}")]
    NoGold(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Completeness {
    #[default]
    Complete,
    /// Only system correspondences touching a gold entity can be false positives.
    Partial,
}

impl Completeness {
    pub fn name(self) -> &'static str {
        match self {
            Completeness::Complete => "complete",
            Completeness::Partial => "partial",
        }
    }
}

impl FromStr for Completeness {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "complete" => Ok(Completeness::Complete),
            "partial" => Ok(Completeness::Partial),
            other => Err(format!("unknown completeness '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldStandard {
    pub pair: SourcePair,
    pub alignment: Alignment,
    pub completeness: Completeness,
}

impl GoldStandard {
    pub fn new(pair: SourcePair, alignment: Alignment, completeness: Completeness) -> Self {
        GoldStandard { pair, alignment, completeness }
    }
}

/// Gold standards are `{a}__{b}.tsv` alignment files. A leading
/// `# completeness=partial` comment marks a partial gold standard.
pub fn load_gold_dir(dir: &Path) -> Result<Vec<GoldStandard>, EvaluationError> {
    let mut golds = Vec::new();
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("tsv") {
            continue;
        }
        let invalid = |reason: String| EvaluationError::InvalidGold { path: path.display().to_string(), reason };
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let (a, b) = stem.split_once("__").ok_or_else(|| invalid("file name must be <a>__<b>.tsv".into()))?;
        if a.is_empty() || b.is_empty() || a == b {
            return Err(invalid("file name must name two distinct sources".into()));
        }
        let bytes = std::fs::read(&path)?;
        let mut completeness = Completeness::Complete;
        if let Some(first) = std::str::from_utf8(&bytes).ok().and_then(|t| t.lines().next()) {
            if let Some(value) = first.strip_prefix('#').and_then(|r| r.trim().strip_prefix("completeness=")) {
                completeness = value.parse().map_err(invalid)?;
            }
        }
        let alignment = read_alignment(&bytes).map_err(|e| invalid(e.to_string()))?;
        golds.push(GoldStandard::new(SourcePair::new(a, b), alignment, completeness));
    }
    if golds.is_empty() {
        return Err(EvaluationError::NoGold(dir.display().to_string()));
    }
    Ok(golds)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Counts {
    pub fn new(tp: usize, fp: usize, fn_: usize) -> Self {
        Counts { tp, fp, fn_ }
    }

    /// 1 when nothing was returned.
    pub fn precision(&self) -> f64 {
        if self.tp + self.fp == 0 {
            1.0
        } else {
            self.tp as f64 / (self.tp + self.fp) as f64
        }
    }

    /// 1 when nothing was expected.
    pub fn recall(&self) -> f64 {
        if self.tp + self.fn_ == 0 {
            1.0
        } else {
            self.tp as f64 / (self.tp + self.fn_) as f64
        }
    }

    pub fn metrics(&self) -> Metrics {
        Metrics::from_pr(self.precision(), self.recall())
    }

    fn add(&mut self, other: &Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        Metrics { precision, recall, f1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairResult {
    pub pair: SourcePair,
    pub counts: Counts,
    pub by_kind: BTreeMap<EntityKind, Counts>,
    /// Size of the gold standard; pairs with empty gold are left out of the macro average.
    pub gold_size: usize,
}

impl PairResult {
    pub fn metrics(&self) -> Metrics {
        self.counts.metrics()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub per_pair: Vec<PairResult>,
    pub micro_counts: Counts,
    pub micro: Metrics,
    pub macro_: Metrics,
    /// Pairs that entered the macro average.
    pub macro_pairs: usize,
}

/// Entity kinds, each classified within the graph it belongs to.
pub fn kinds_by_source(kgs: &[KnowledgeGraph], membership: &Membership) -> HashMap<Iri, EntityKind> {
    let mut kinds = HashMap::new();
    for kg in kgs {
        for (iri, kind) in entity_kinds(kg) {
            if membership.source_of(&iri).is_ok_and(|s| s == kg.id()) {
                kinds.insert(iri, kind);
            }
        }
    }
    kinds
}

/// The kind of the canonically first entity, else of the second, else instance.
pub fn correspondence_kind(c: &Correspondence, kinds: &HashMap<Iri, EntityKind>) -> EntityKind {
    let key = c.key();
    kinds.get(&key.0).or_else(|| kinds.get(&key.1)).copied().unwrap_or(EntityKind::Instance)
}

/// Per gold pair, the system correspondences to score. With `closure_needed`
/// the alignment is first closed transitively and every cross-source pair of
/// a cluster becomes a correspondence with confidence 1.0.
pub fn prepare_system_alignment(
    raw: &Alignment,
    closure_needed: bool,
    membership: &Membership,
    pairs: &[SourcePair],
) -> Result<BTreeMap<SourcePair, Alignment>, AlignmentError> {
    if closure_needed {
        let clusters = closure(raw, membership)?;
        Ok(pairs.iter().map(|p| (p.clone(), expand_to_pairs(&clusters, p))).collect())
    } else {
        let mut split = split_by_pair(raw, membership)?;
        Ok(pairs.iter().map(|p| (p.clone(), split.buckets.remove(p).unwrap_or_default())).collect())
    }
}

/// Confidence is ignored. Under partial gold a wrong correspondence only
/// counts when one of its entities appears in the gold standard.
pub fn evaluate_pair(system: &Alignment, gold: &GoldStandard, kinds: &HashMap<Iri, EntityKind>) -> PairResult {
    let mut by_kind: BTreeMap<EntityKind, Counts> = EntityKind::ALL.iter().map(|k| (*k, Counts::default())).collect();
    let gold_entities: HashSet<&Iri> = gold.alignment.entities().into_iter().collect();
    for c in gold.alignment.iter() {
        let counts = by_kind.get_mut(&correspondence_kind(c, kinds)).expect("all kinds present");
        if system.contains_key(&c.key()) {
            counts.tp += 1;
        } else {
            counts.fn_ += 1;
        }
    }
    for c in system.iter() {
        if gold.alignment.contains_key(&c.key()) {
            continue;
        }
        let counts_as_fp = match gold.completeness {
            Completeness::Complete => true,
            Completeness::Partial => gold_entities.contains(&c.entity_one) || gold_entities.contains(&c.entity_two),
        };
        if counts_as_fp {
            by_kind.get_mut(&correspondence_kind(c, kinds)).expect("all kinds present").fp += 1;
        }
    }
    let mut counts = Counts::default();
    for k in by_kind.values() {
        counts.add(k);
    }
    PairResult { pair: gold.pair.clone(), counts, by_kind, gold_size: gold.alignment.len() }
}

/// Micro from summed counts; macro as the mean over pairs with non-empty
/// gold. Without any such pair the macro figures equal the micro ones.
pub fn aggregate(per_pair: Vec<PairResult>) -> EvaluationReport {
    let mut micro_counts = Counts::default();
    for r in &per_pair {
        micro_counts.add(&r.counts);
    }
    let micro = micro_counts.metrics();
    let eligible: Vec<Metrics> = per_pair.iter().filter(|r| r.gold_size > 0).map(PairResult::metrics).collect();
    let macro_ = if eligible.is_empty() {
        micro
    } else {
        let n = eligible.len() as f64;
        Metrics {
            precision: eligible.iter().map(|m| m.precision).sum::<f64>() / n,
            recall: eligible.iter().map(|m| m.recall).sum::<f64>() / n,
            f1: eligible.iter().map(|m| m.f1).sum::<f64>() / n,
        }
    };
    EvaluationReport { macro_pairs: eligible.len(), per_pair, micro_counts, micro, macro_ }
}

/// Prepares the system alignment and scores it against every gold standard.
pub fn evaluate(
    raw: &Alignment,
    closure_needed: bool,
    golds: &[GoldStandard],
    membership: &Membership,
    kinds: &HashMap<Iri, EntityKind>,
) -> Result<EvaluationReport, AlignmentError> {
    let pairs: Vec<SourcePair> = golds.iter().map(|g| g.pair.clone()).collect();
    let system = prepare_system_alignment(raw, closure_needed, membership, &pairs)?;
    let per_pair = golds.iter().map(|g| evaluate_pair(&system[&g.pair], g, kinds)).collect();
    Ok(aggregate(per_pair))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::iri;

    fn align(pairs: &[(&str, &str)]) -> Alignment {
        pairs.iter().map(|(a, b)| Correspondence::certain(iri(a), iri(b)).unwrap()).collect()
    }

    fn gold(pairs: &[(&str, &str)], completeness: Completeness) -> GoldStandard {
        GoldStandard::new(SourcePair::new("A", "B"), align(pairs), completeness)
    }

    fn membership(entities: &[(&str, &str)]) -> Membership {
        let mut m = Membership::new();
        for (e, s) in entities {
            m.insert(iri(e), *s);
        }
        m
    }

    #[test]
    fn perfect() {
        let g = gold(&[("http://a/1", "http://b/1")], Completeness::Complete);
        let r = evaluate_pair(&g.alignment, &g, &HashMap::new());
        assert_eq!(r.metrics(), Metrics { precision: 1.0, recall: 1.0, f1: 1.0 });
    }

    #[test]
    fn half_recall() {
        let g = gold(&[("http://a/1", "http://b/1"), ("http://a/2", "http://b/2")], Completeness::Complete);
        let r = evaluate_pair(&align(&[("http://b/1", "http://a/1")]), &g, &HashMap::new());
        let m = r.metrics();
        assert_eq!((m.precision, m.recall), (1.0, 0.5));
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn partial_gold_suppresses_unrelated_false_positives() {
        let system = align(&[("http://a/1", "http://b/1"), ("http://a/8", "http://b/9"), ("http://a/1", "http://b/7")]);
        let complete = evaluate_pair(&system, &gold(&[("http://a/1", "http://b/1")], Completeness::Complete), &HashMap::new());
        assert_eq!(complete.counts, Counts::new(1, 2, 0));
        let partial = evaluate_pair(&system, &gold(&[("http://a/1", "http://b/1")], Completeness::Partial), &HashMap::new());
        assert_eq!(partial.counts, Counts::new(1, 1, 0));
    }

    #[test]
    fn kinds_partition_counts() {
        let kinds: HashMap<Iri, EntityKind> =
            [(iri("http://a/C"), EntityKind::Class), (iri("http://b/p"), EntityKind::Property)].into_iter().collect();
        let g = gold(&[("http://a/C", "http://b/C"), ("http://a/p", "http://b/p"), ("http://a/i", "http://b/i")], Completeness::Complete);
        let system = align(&[("http://a/C", "http://b/C"), ("http://a/p", "http://b/p"), ("http://a/x", "http://b/y")]);
        let r = evaluate_pair(&system, &g, &kinds);
        assert_eq!(r.by_kind[&EntityKind::Class], Counts::new(1, 0, 0));
        // a/p is unclassified so the kind of b/p applies
        assert_eq!(r.by_kind[&EntityKind::Property], Counts::new(1, 0, 0));
        assert_eq!(r.by_kind[&EntityKind::Instance], Counts::new(0, 1, 1));
        assert_eq!(r.counts, Counts::new(2, 1, 1));
    }

    #[test]
    fn empty_conventions() {
        assert_eq!(Counts::default().metrics(), Metrics { precision: 1.0, recall: 1.0, f1: 1.0 });
        assert_eq!(Counts::new(0, 1, 1).metrics(), Metrics { precision: 0.0, recall: 0.0, f1: 0.0 });
    }

    #[test]
    fn micro_and_macro() {
        let p = |tp, fp, fn_| PairResult {
            pair: SourcePair::new("A", "B"),
            counts: Counts::new(tp, fp, fn_),
            by_kind: BTreeMap::new(),
            gold_size: tp + fn_,
        };
        let report = aggregate(vec![p(1, 1, 0), p(1, 0, 1)]);
        assert!((report.micro.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((report.micro.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((report.macro_.precision - 0.75).abs() < 1e-12);
        assert!((report.macro_.recall - 0.75).abs() < 1e-12);
        assert!((report.macro_.f1 - 2.0 / 3.0).abs() < 1e-12);

        let one = aggregate(vec![p(1, 1, 0)]);
        assert_eq!(one.micro, one.macro_);

        // an empty pair contributes nothing to micro and is left out of macro
        let with_empty = aggregate(vec![p(1, 1, 0), p(0, 0, 0)]);
        assert_eq!(with_empty.macro_pairs, 1);
        assert_eq!(with_empty.micro, one.micro);
        assert_eq!(with_empty.macro_, one.macro_);
    }

    #[test]
    fn closure_reaches_transitive_pairs() {
        let m = membership(&[("http://a/1", "A"), ("http://b/1", "B"), ("http://c/1", "C")]);
        let raw = align(&[("http://a/1", "http://b/1"), ("http://b/1", "http://c/1")]);
        let ac = SourcePair::new("A", "C");
        let closed = prepare_system_alignment(&raw, true, &m, std::slice::from_ref(&ac)).unwrap();
        assert!(closed[&ac].contains_pair(&iri("http://a/1"), &iri("http://c/1")));
        let split = prepare_system_alignment(&raw, false, &m, std::slice::from_ref(&ac)).unwrap();
        assert!(split[&ac].is_empty());
    }

    #[test]
    fn all_pairs_split_is_verbatim() {
        let m = membership(&[("http://a/1", "A"), ("http://b/1", "B"), ("http://c/1", "C")]);
        let raw = align(&[("http://a/1", "http://b/1"), ("http://b/1", "http://c/1")]);
        let pairs = [SourcePair::new("A", "B"), SourcePair::new("B", "C")];
        let split = prepare_system_alignment(&raw, false, &m, &pairs).unwrap();
        assert_eq!(split[&pairs[0]], align(&[("http://a/1", "http://b/1")]));
        assert_eq!(split[&pairs[1]], align(&[("http://b/1", "http://c/1")]));
    }

    #[test]
    fn closure_of_gold_scores_perfectly() {
        let m = membership(&[("http://a/1", "A"), ("http://b/1", "B"), ("http://c/1", "C")]);
        let golds = vec![
            GoldStandard::new(SourcePair::new("A", "B"), align(&[("http://a/1", "http://b/1")]), Completeness::Complete),
            GoldStandard::new(SourcePair::new("A", "C"), align(&[("http://a/1", "http://c/1")]), Completeness::Complete),
            GoldStandard::new(SourcePair::new("B", "C"), align(&[("http://b/1", "http://c/1")]), Completeness::Complete),
        ];
        let raw = align(&[("http://a/1", "http://b/1"), ("http://b/1", "http://c/1")]);
        let report = evaluate(&raw, true, &golds, &m, &HashMap::new()).unwrap();
        assert_eq!(report.micro.f1, 1.0);
        let unclosed = evaluate(&raw, false, &golds, &m, &HashMap::new()).unwrap();
        assert!(unclosed.micro.recall < report.micro.recall);
    }

    #[test]
    fn unknown_entities_fail() {
        let m = membership(&[("http://a/1", "A")]);
        let raw = align(&[("http://a/1", "http://b/1")]);
        assert!(prepare_system_alignment(&raw, true, &m, &[SourcePair::new("A", "B")]).is_err());
    }

    #[test]
    fn gold_directory() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("A__B.tsv"), "http://a/1\thttp://b/1\t=\t1.0\n").unwrap();
        std::fs::write(dir.path().join("A__C.tsv"), "# completeness=partial\nhttp://a/1\thttp://c/1\t=\t1.0\n").unwrap();
        std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let golds = load_gold_dir(dir.path()).unwrap();
        assert_eq!(golds.len(), 2);
        assert_eq!(golds[0].completeness, Completeness::Complete);
        assert_eq!(golds[1].completeness, Completeness::Partial);
        assert_eq!(golds[1].pair, SourcePair::new("C", "A"));

        std::fs::write(dir.path().join("broken.tsv"), "").unwrap();
        assert!(matches!(load_gold_dir(dir.path()), Err(EvaluationError::InvalidGold { .. })));
        assert!(matches!(load_gold_dir(&dir.path().join("missing")), Err(EvaluationError::Io(_))));
    }
}
