//! Results CSV: one row per pair and kind, plus micro and macro rows.

use serde::Serialize;

use super::{Completeness, Counts, EvaluationReport, GoldStandard, Metrics};
use crate::rdf::EntityKind;

/// Identifies the run a block of rows belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLabels {
    pub strategy: String,
    pub ordering: String,
    pub matcher: String,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub strategy: String,
    pub ordering: String,
    pub matcher: String,
    pub pair: String,
    pub kind: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub runtime_ms: f64,
}

/// `complete`, `partial` or `mixed`.
pub fn gold_policy(golds: &[GoldStandard]) -> &'static str {
    let partial = golds.iter().filter(|g| g.completeness == Completeness::Partial).count();
    match partial {
        0 => Completeness::Complete.name(),
        n if n == golds.len() => Completeness::Partial.name(),
        _ => "mixed",
    }
}

impl RunLabels {
    fn row(&self, pair: &str, kind: &str, metrics: Metrics, counts: Option<Counts>) -> ResultRow {
        let counts = counts.unwrap_or_default();
        ResultRow {
            strategy: self.strategy.clone(),
            ordering: self.ordering.clone(),
            matcher: self.matcher.clone(),
            pair: pair.to_string(),
            kind: kind.to_string(),
            precision: metrics.precision,
            recall: metrics.recall,
            f1: metrics.f1,
            tp: counts.tp,
            fp: counts.fp,
            fn_: counts.fn_,
            runtime_ms: self.runtime_ms,
        }
    }

    /// Rows for every pair (per kind and `all`), then the micro rows (per
    /// kind and `all`) and the macro row. Macro rows carry no counts.
    pub fn rows(&self, report: &EvaluationReport) -> Vec<ResultRow> {
        let mut rows = Vec::new();
        let mut micro_by_kind = [Counts::default(); 3];
        for r in &report.per_pair {
            let pair = r.pair.to_string();
            for (i, kind) in EntityKind::ALL.iter().enumerate() {
                let c = r.by_kind.get(kind).copied().unwrap_or_default();
                micro_by_kind[i].add(&c);
                rows.push(self.row(&pair, kind.as_str(), c.metrics(), Some(c)));
            }
            rows.push(self.row(&pair, "all", r.metrics(), Some(r.counts)));
        }
        for (i, kind) in EntityKind::ALL.iter().enumerate() {
            rows.push(self.row("micro", kind.as_str(), micro_by_kind[i].metrics(), Some(micro_by_kind[i])));
        }
        rows.push(self.row("micro", "all", report.micro, Some(report.micro_counts)));
        rows.push(self.row("macro", "all", report.macro_, None));
        rows
    }
}

/// With `header`, the output starts with a `# gold_policy=...` comment and
/// the column names; without, rows can be appended to an existing file.
pub fn write_results_csv(rows: &[ResultRow], header: Option<&str>) -> String {
    let mut out = Vec::new();
    if let Some(policy) = header {
        out.extend_from_slice(format!("# gold_policy={policy}\n").as_bytes());
    }
    {
        let mut writer = csv::WriterBuilder::new().has_headers(header.is_some()).from_writer(&mut out);
        for row in rows {
            writer.serialize(row).expect("in-memory write");
        }
        writer.flush().expect("in-memory write");
    }
    String::from_utf8(out).expect("utf-8 fields")
}
