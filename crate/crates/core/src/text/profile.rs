use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use super::TokenDocument;

/// L2-normalized tf-idf vector of one source.
#[derive(Debug, Clone, PartialEq)]
pub struct TextProfile {
    pub source: String,
    pub weights: BTreeMap<String, f64>,
}

impl TextProfile {
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.weights.values().map(|w| w * w).sum::<f64>().sqrt()
    }
}

/// Smoothed idf: `ln((1 + n) / (1 + df)) + 1`.
fn smoothed_idf(n: usize, df: usize) -> f64 {
    ((1.0 + n as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Raw term counts times smoothed idf, normalized to unit length per document.
pub fn build_profiles(documents: &[TokenDocument]) -> Vec<TextProfile> {
    weigh(documents, smoothed_idf)
}

pub(crate) fn weigh(documents: &[TokenDocument], idf: impl Fn(usize, usize) -> f64) -> Vec<TextProfile> {
    let n = documents.len();
    let mut df: HashMap<&str, usize> = HashMap::new();
    for doc in documents {
        for term in doc.counts.keys() {
            *df.entry(term.as_str()).or_default() += 1;
        }
    }
    documents
        .iter()
        .map(|doc| {
            let mut weights: BTreeMap<String, f64> = doc
                .counts
                .iter()
                .map(|(term, &tf)| (term.clone(), tf as f64 * idf(n, df[term.as_str()])))
                .filter(|(_, w)| *w > 0.0)
                .collect();
            let norm = weights.values().map(|w| w * w).sum::<f64>().sqrt();
            if norm > 0.0 {
                weights.values_mut().for_each(|w| *w /= norm);
            }
            TextProfile { source: doc.source.clone(), weights }
        })
        .collect()
}

/// Dot product of two normalized profiles, in [0, 1]; 0 if either is empty.
pub fn cosine(p1: &TextProfile, p2: &TextProfile) -> f64 {
    let (small, large) = if p1.weights.len() <= p2.weights.len() { (p1, p2) } else { (p2, p1) };
    let dot: f64 = small
        .weights
        .iter()
        .filter_map(|(term, w)| large.weights.get(term).map(|v| w * v))
        .sum();
    dot.clamp(0.0, 1.0)
}

/// Symmetric pairwise similarities between sources.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    ids: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl SimilarityMatrix {
    pub fn from_profiles(profiles: &[TextProfile]) -> Self {
        let n = profiles.len();
        let mut values = vec![vec![0.0; n]; n];
        for i in 0..n {
            values[i][i] = if profiles[i].is_empty() { 0.0 } else { 1.0 };
            for j in (i + 1)..n {
                let s = cosine(&profiles[i], &profiles[j]);
                values[i][j] = s;
                values[j][i] = s;
            }
        }
        SimilarityMatrix { ids: profiles.iter().map(|p| p.source.clone()).collect(), values }
    }

    /// Builds a matrix from explicit values. Returns `None` unless the matrix
    /// is square, symmetric and within [0, 1].
    pub fn from_values(ids: Vec<String>, values: Vec<Vec<f64>>) -> Option<Self> {
        let n = ids.len();
        let ok = values.len() == n
            && values.iter().all(|row| row.len() == n)
            && (0..n).all(|i| (0..n).all(|j| values[i][j] == values[j][i] && (0.0..=1.0).contains(&values[i][j])));
        ok.then_some(SimilarityMatrix { ids, values })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn similarity(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        1.0 - self.values[i][j]
    }
}

/// `source<TAB>term<TAB>weight` rows for inspection.
pub fn write_profiles(profiles: &[TextProfile]) -> String {
    let mut out = String::new();
    for p in profiles {
        for (term, w) in &p.weights {
            let _ = writeln!(out, "{}\t{}\t{}", p.source, term, w);
        }
    }
    out
}
