//! The command line and the library produce the same evaluation.

use msmatch::cli::config::{MatcherConfig, RunConfig};
use msmatch::cli::pipeline::{run_experiment, Workspace};
use msmatch::evaluation::{gold_policy, write_results_csv};
use msmatch::planner::{Linkage, Strategy};
use msmatch::testbed::{generate, write_corpus, CorpusSpec};

fn strip_runtime(csv: &str) -> Vec<String> {
    csv.lines().map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string()).collect()
}

#[test]
fn run_command_matches_library_rows() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate(&CorpusSpec {
        num_sources: 5,
        entities_per_source: 60,
        topic_groups: 2,
        overlap_ratio: 0.5,
        label_noise: 0.2,
        distractor_sources: 1,
        seed: 21,
    })
    .unwrap();
    write_corpus(&corpus, dir.path()).unwrap();
    let (sources, gold, out) = (dir.path().join("sources"), dir.path().join("gold"), dir.path().join("out"));

    let code = msmatch::cli::run([
        "msmatch",
        "run",
        "--strategy",
        "im-sim",
        "--linkage",
        "complete",
        "--input",
        sources.to_str().unwrap(),
        "--gold",
        gold.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let from_cli = std::fs::read_to_string(out.join("results.csv")).unwrap();

    let config = RunConfig {
        strategy: Strategy::ImSim,
        ordering: None,
        linkage: Some(Linkage::Complete),
        matcher: MatcherConfig::Baseline { warm_start: true },
        merge_strategy: Default::default(),
        repair: None,
        input_dir: sources.clone(),
        gold_dir: gold.clone(),
        output_dir: out.clone(),
        jobs: 1,
    };
    let ws = Workspace::load(&sources, &gold).unwrap();
    let e = run_experiment(&config, &ws).unwrap();
    let from_lib = write_results_csv(&e.labels(&config).rows(&e.report), Some(gold_policy(&ws.golds)));

    // the first line is the gold policy comment, which has no runtime column
    assert_eq!(from_cli.lines().next(), from_lib.lines().next());
    assert_eq!(strip_runtime(&from_cli)[1..], strip_runtime(&from_lib)[1..]);
}
