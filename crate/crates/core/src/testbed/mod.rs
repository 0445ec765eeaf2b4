//! Synthetic multi-source corpora with gold standards known by construction.
//!
//! Every source holds `entities_per_source` typed, labelled instances plus a
//! small schema. Concepts come in three tiers: global ones (in every regular
//! source, `round(r² E)` of them), group ones (in every source of a topic
//! group, up to `round(r E)` per source together with the global ones) and
//! private ones. Labels and descriptions draw on per-group word lists that do
//! not share any stem, so sources of one group are textually closer to each
//! other than to the rest.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{write_alignment, Alignment, Correspondence, SourcePair};
use crate::evaluation::{Completeness, GoldStandard};
use crate::rdf::{
    write_ntriples, Iri, KnowledgeGraph, Literal, Origin, Triple, OWL_CLASS, OWL_OBJECT_PROPERTY, RDFS_LABEL, RDF_TYPE,
};

const RDFS_COMMENT: &str = "http://www.w3.org/2000/01/rdf-schema#comment";

const COMMON_VOCABULARY: &str = include_str!("vocab/common.txt");
const GROUP_VOCABULARIES: [&str; 4] = [
    include_str!("vocab/group1.txt"),
    include_str!("vocab/group2.txt"),
    include_str!("vocab/group3.txt"),
    include_str!("vocab/group4.txt"),
];

const CLASS_LABELS: [&str; 4] = ["Agent", "Place", "Event", "Artifact"];
const PROPERTY_LABELS: [&str; 2] = ["related to", "located in"];
const DESCRIPTION_WORDS: usize = 8;

#[derive(Debug, Error)]
pub enum TestbedError {
    #[error("invalid corpus spec: {0}")]
    InvalidSpec(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn default_one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    /// Sources that take part in the gold standards.
    pub num_sources: usize,
    pub entities_per_source: usize,
    /// Regular source `i` (0-based) belongs to group `i % topic_groups`.
    #[serde(default = "default_one")]
    pub topic_groups: usize,
    #[serde(default)]
    pub overlap_ratio: f64,
    #[serde(default)]
    pub label_noise: f64,
    /// Extra sources with only private concepts and no gold standard.
    #[serde(default)]
    pub distractor_sources: usize,
    #[serde(default)]
    pub seed: u64,
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<(), TestbedError> {
        let invalid = |m: String| Err(TestbedError::InvalidSpec(m));
        if self.num_sources < 2 {
            return invalid(format!("num_sources must be at least 2, got {}", self.num_sources));
        }
        if self.entities_per_source == 0 {
            return invalid("entities_per_source must be positive".into());
        }
        if self.topic_groups == 0 || self.topic_groups > self.num_sources {
            return invalid(format!("topic_groups must be between 1 and num_sources, got {}", self.topic_groups));
        }
        if self.topic_groups > GROUP_VOCABULARIES.len() {
            return invalid(format!("at most {} topic groups are supported", GROUP_VOCABULARIES.len()));
        }
        for (name, v) in [("overlap_ratio", self.overlap_ratio), ("label_noise", self.label_noise)] {
            if !(0.0..=1.0).contains(&v) {
                return invalid(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        Ok(())
    }

    fn global_concepts(&self) -> usize {
        (self.overlap_ratio * self.overlap_ratio * self.entities_per_source as f64).round() as usize
    }

    fn group_concepts(&self) -> usize {
        let shared = (self.overlap_ratio * self.entities_per_source as f64).round() as usize;
        shared.saturating_sub(self.global_concepts())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceInfo {
    pub id: String,
    pub group: usize,
    pub distractor: bool,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub spec: CorpusSpec,
    pub sources: Vec<SourceInfo>,
    pub kgs: Vec<KnowledgeGraph>,
    pub golds: Vec<GoldStandard>,
}

fn words(text: &str) -> Vec<&str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty()).collect()
}

/// Word list for labels and descriptions: `None` is the common list.
fn vocabulary(group: Option<usize>) -> Vec<&'static str> {
    match group {
        None => words(COMMON_VOCABULARY),
        Some(g) => words(GROUP_VOCABULARIES[g]),
    }
}

fn title(word: &str) -> String {
    let mut chars = word.chars();
    chars.next().map(|c| c.to_uppercase().chain(chars).collect()).unwrap_or_default()
}

struct Labeller {
    used: HashSet<String>,
}

impl Labeller {
    /// A label of distinct vocabulary words not used before; grows to three
    /// words when two-word labels keep colliding.
    fn fresh(&mut self, rng: &mut ChaCha8Rng, vocab: &[&str]) -> String {
        for attempt in 0.. {
            let n = if attempt < 50 { 2 } else { 3 + attempt / 1000 };
            let picked: Vec<String> = vocab.choose_multiple(rng, n.min(vocab.len())).map(|w| title(w)).collect();
            let label = picked.join(" ");
            if self.used.insert(label.to_lowercase()) {
                return label;
            }
        }
        unreachable!()
    }

    /// Substitutes one letter so that the result differs from every label so far.
    fn perturb(&mut self, rng: &mut ChaCha8Rng, label: &str) -> String {
        let chars: Vec<char> = label.chars().collect();
        let positions: Vec<usize> = (0..chars.len()).filter(|&i| chars[i].is_ascii_alphabetic()).collect();
        loop {
            let mut out = chars.clone();
            let pos = *positions.choose(rng).expect("labels contain letters");
            let replacement = (b'a' + rng.gen_range(0..26u8)) as char;
            out[pos] = replacement;
            let candidate: String = out.into_iter().collect();
            if self.used.insert(candidate.to_lowercase()) {
                return candidate;
            }
        }
    }
}

struct Concept {
    label: String,
    class: usize,
    /// Indices into the regular/distractor source list.
    members: Vec<usize>,
}

fn source_ids(spec: &CorpusSpec) -> Vec<SourceInfo> {
    let width = spec.num_sources.max(spec.distractor_sources).to_string().len().max(2);
    let regular = (0..spec.num_sources).map(|i| SourceInfo {
        id: format!("S{:0width$}", i + 1),
        group: i % spec.topic_groups,
        distractor: false,
    });
    let distractors = (0..spec.distractor_sources).map(|i| SourceInfo {
        id: format!("D{:0width$}", i + 1),
        group: i % spec.topic_groups,
        distractor: true,
    });
    regular.chain(distractors).collect()
}

fn namespace(id: &str) -> String {
    format!("http://{}.example.org/", id.to_lowercase())
}

fn node(ns: &str, local: &str) -> Iri {
    Iri::new(format!("{ns}{local}")).expect("generated IRIs are valid")
}

fn class_iri(ns: &str, c: usize) -> Iri {
    node(ns, &format!("ontology/C{c}"))
}

fn property_iri(ns: &str, p: usize) -> Iri {
    node(ns, &format!("ontology/P{p}"))
}

fn description(rng: &mut ChaCha8Rng, vocab: &[&str]) -> String {
    let picked: Vec<&str> = (0..DESCRIPTION_WORDS).map(|_| *vocab.choose(rng).expect("non-empty")).collect();
    format!("{}.", title(&picked.join(" ")))
}

/// Deterministic for a given spec.
pub fn generate(spec: &CorpusSpec) -> Result<Corpus, TestbedError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sources = source_ids(spec);
    let regular: Vec<usize> = (0..spec.num_sources).collect();
    let shared_schema = spec.overlap_ratio > 0.0;
    let mut labeller = Labeller { used: HashSet::new() };
    for l in CLASS_LABELS.iter().chain(&PROPERTY_LABELS) {
        labeller.used.insert(l.to_lowercase());
    }

    let mut concepts: Vec<Concept> = Vec::new();
    let mut new_concept = |rng: &mut ChaCha8Rng, labeller: &mut Labeller, vocab: Option<usize>, members: Vec<usize>| {
        let label = labeller.fresh(rng, &vocabulary(vocab));
        let class = rng.gen_range(0..CLASS_LABELS.len());
        concepts.push(Concept { label, class, members });
    };
    for _ in 0..spec.global_concepts() {
        new_concept(&mut rng, &mut labeller, None, regular.clone());
    }
    for g in 0..spec.topic_groups {
        let members: Vec<usize> = regular.iter().copied().filter(|&i| sources[i].group == g).collect();
        for _ in 0..spec.group_concepts() {
            new_concept(&mut rng, &mut labeller, Some(g), members.clone());
        }
    }
    for (i, source) in sources.iter().enumerate() {
        let private = if source.distractor {
            spec.entities_per_source
        } else {
            spec.entities_per_source - spec.global_concepts() - spec.group_concepts()
        };
        for _ in 0..private {
            new_concept(&mut rng, &mut labeller, Some(source.group), vec![i]);
        }
    }

    // per-source occurrence: (concept, label as seen by that source)
    let mut occurrences: Vec<Vec<(usize, String)>> = vec![Vec::new(); sources.len()];
    for (c, concept) in concepts.iter().enumerate() {
        let shared = concept.members.len() > 1;
        for &m in &concept.members {
            let label = if shared && rng.gen_bool(spec.label_noise) {
                labeller.perturb(&mut rng, &concept.label)
            } else {
                concept.label.clone()
            };
            occurrences[m].push((c, label));
        }
    }

    let mut entity_iris: Vec<Vec<Option<Iri>>> = vec![vec![None; concepts.len()]; sources.len()];
    let mut kgs = Vec::with_capacity(sources.len());
    for (i, source) in sources.iter().enumerate() {
        let ns = namespace(&source.id);
        let vocab = vocabulary(Some(source.group));
        let mut triples = Vec::new();
        for (c, label) in CLASS_LABELS.iter().enumerate() {
            let label = if shared_schema { label.to_string() } else { format!("{} {}", source.id, label) };
            triples.push(Triple::new(class_iri(&ns, c), Iri::new(RDF_TYPE).unwrap(), Iri::new(OWL_CLASS).unwrap()));
            triples.push(Triple::new(class_iri(&ns, c), Iri::new(RDFS_LABEL).unwrap(), Literal::lang(label, "en")));
        }
        for (p, label) in PROPERTY_LABELS.iter().enumerate() {
            let label = if shared_schema { label.to_string() } else { format!("{} {}", source.id, label) };
            let iri = property_iri(&ns, p);
            triples.push(Triple::new(iri.clone(), Iri::new(RDF_TYPE).unwrap(), Iri::new(OWL_OBJECT_PROPERTY).unwrap()));
            triples.push(Triple::new(iri, Iri::new(RDFS_LABEL).unwrap(), Literal::lang(label, "en")));
        }

        let mut order: Vec<usize> = (0..occurrences[i].len()).collect();
        order.shuffle(&mut rng);
        let instances: Vec<Iri> = (0..order.len()).map(|k| node(&ns, &format!("resource/R{k:05}"))).collect();
        for (k, &o) in order.iter().enumerate() {
            let (c, label) = &occurrences[i][o];
            let subject = &instances[k];
            entity_iris[i][*c] = Some(subject.clone());
            triples.push(Triple::new(subject.clone(), Iri::new(RDF_TYPE).unwrap(), class_iri(&ns, concepts[*c].class)));
            triples.push(Triple::new(subject.clone(), Iri::new(RDFS_LABEL).unwrap(), Literal::lang(label.as_str(), "en")));
            triples.push(Triple::new(
                subject.clone(),
                Iri::new(RDFS_COMMENT).unwrap(),
                Literal::lang(description(&mut rng, &vocab), "en"),
            ));
            if instances.len() > 1 && rng.gen_bool(0.5) {
                let mut other = rng.gen_range(0..instances.len() - 1);
                if other >= k {
                    other += 1;
                }
                let p = rng.gen_range(0..PROPERTY_LABELS.len());
                triples.push(Triple::new(subject.clone(), property_iri(&ns, p), instances[other].clone()));
            }
        }
        kgs.push(KnowledgeGraph::from_triples(source.id.clone(), Origin::Leaf, triples));
    }

    let mut golds = Vec::new();
    for a in 0..spec.num_sources {
        for b in (a + 1)..spec.num_sources {
            let (na, nb) = (namespace(&sources[a].id), namespace(&sources[b].id));
            let mut alignment = Alignment::new();
            let mut add = |x: Iri, y: Iri| {
                alignment.insert(Correspondence::certain(x, y).expect("distinct namespaces"));
            };
            if shared_schema {
                for c in 0..CLASS_LABELS.len() {
                    add(class_iri(&na, c), class_iri(&nb, c));
                }
                for p in 0..PROPERTY_LABELS.len() {
                    add(property_iri(&na, p), property_iri(&nb, p));
                }
            }
            for (x, y) in entity_iris[a].iter().zip(&entity_iris[b]) {
                if let (Some(x), Some(y)) = (x, y) {
                    add(x.clone(), y.clone());
                }
            }
            golds.push(GoldStandard::new(
                SourcePair::new(sources[a].id.as_str(), sources[b].id.as_str()),
                alignment,
                Completeness::Complete,
            ));
        }
    }
    Ok(Corpus { spec: spec.clone(), sources, kgs, golds })
}

/// Keeps a seeded `1 - fraction` of the gold correspondences and marks the
/// result partial.
pub fn mask_gold(gold: &GoldStandard, fraction: f64, seed: u64) -> GoldStandard {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kept = gold.alignment.iter().filter(|_| !rng.gen_bool(fraction.clamp(0.0, 1.0))).cloned().collect();
    GoldStandard::new(gold.pair.clone(), kept, Completeness::Partial)
}

#[derive(Serialize)]
struct ManifestSource<'a> {
    id: &'a str,
    group: usize,
    distractor: bool,
    file: String,
    triples: usize,
}

#[derive(Serialize)]
struct ManifestGold {
    pair: [String; 2],
    file: String,
    correspondences: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    spec: &'a CorpusSpec,
    sources: Vec<ManifestSource<'a>>,
    golds: Vec<ManifestGold>,
}

pub fn gold_file_name(pair: &SourcePair) -> String {
    format!("{}__{}.tsv", pair.first(), pair.second())
}

/// Writes `manifest.json`, `sources/<id>.nt` and `gold/<a>__<b>.tsv`, and
/// returns the manifest path.
pub fn write_corpus(corpus: &Corpus, dir: &Path) -> Result<PathBuf, TestbedError> {
    std::fs::create_dir_all(dir.join("sources"))?;
    std::fs::create_dir_all(dir.join("gold"))?;
    let mut sources = Vec::new();
    for (info, kg) in corpus.sources.iter().zip(&corpus.kgs) {
        let file = format!("sources/{}.nt", info.id);
        std::fs::write(dir.join(&file), write_ntriples(kg))?;
        sources.push(ManifestSource { id: &info.id, group: info.group, distractor: info.distractor, file, triples: kg.len() });
    }
    let mut golds = Vec::new();
    for g in &corpus.golds {
        let file = format!("gold/{}", gold_file_name(&g.pair));
        std::fs::write(dir.join(&file), write_alignment(&g.alignment))?;
        golds.push(ManifestGold {
            pair: [g.pair.first().to_string(), g.pair.second().to_string()],
            file,
            correspondences: g.alignment.len(),
        });
    }
    let manifest = Manifest { spec: &corpus.spec, sources, golds };
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest).expect("serializable") + "\n")?;
    Ok(path)
}
