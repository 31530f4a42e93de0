//! Shared fixtures for the CLI integration and acceptance tests.
#![allow(dead_code)] // each test target uses a different subset

use std::path::{Path, PathBuf};
use std::process::Command;

pub const BIN: &str = env!("CARGO_BIN_EXE_crex");

pub const VOCAB_8: &str = r#"{
  "event_type": "Tropical Cyclone",
  "variables": [
    "Strong Wind", "Heavy Rainfall", "Storm Surge", "Flooding",
    "Power Outage", "Infrastructure Damage", "Casualties", "Evacuation"
  ]
}
"#;

pub const BASE_CHAIN: &str = r#"{
  "event_type": "Tropical Cyclone",
  "variables": [
    "Strong Wind", "Heavy Rainfall", "Storm Surge", "Flooding",
    "Power Outage", "Infrastructure Damage", "Casualties", "Evacuation"
  ],
  "edges": [
    ["Strong Wind", "Infrastructure Damage"],
    ["Strong Wind", "Power Outage"],
    ["Heavy Rainfall", "Flooding"],
    ["Storm Surge", "Flooding"],
    ["Flooding", "Infrastructure Damage"],
    ["Flooding", "Casualties"],
    ["Flooding", "Evacuation"],
    ["Infrastructure Damage", "Power Outage"],
    ["Power Outage", "Casualties"]
  ]
}
"#;

pub const EVIDENCE_TSV: &str = "cause\teffect\tquote\tsource\tlocator\n\
Strong Wind\tPower Outage\twinds downed lines leaving millions without power\tpost-event report\tp. 11\n\
Heavy Rainfall\tFlooding\train totals produced freshwater flooding\tpost-event report\tp. 9\n\
Storm Surge\tFlooding\tsurge inundated coastal neighborhoods\tpost-event report\tp. 8\n\
Flooding\tCasualties\tdrownings were attributed to flood waters\tpost-event report\tp. 13\n\
Flooding\tEvacuation\tflooding forced residents to evacuate\tpost-event report\tp. 14\n";

/// Writes vocabulary, base chain, evidence, reference, and an n-post corpus
/// into `dir`, returning (vocab, reference, corpus) paths.
pub fn write_event_fixtures(dir: &Path, posts: usize) -> (PathBuf, PathBuf, PathBuf) {
    let vocab = dir.join("vocab.json");
    std::fs::write(&vocab, VOCAB_8).unwrap();
    let base = dir.join("base.json");
    std::fs::write(&base, BASE_CHAIN).unwrap();
    let evidence = dir.join("evidence.tsv");
    std::fs::write(&evidence, EVIDENCE_TSV).unwrap();
    let reference = dir.join("reference.json");
    let status = Command::new(BIN)
        .args(["compile-ref", "--event", "Hurricane Irma"])
        .arg("--base")
        .arg(&base)
        .arg("--evidence")
        .arg(&evidence)
        .arg("--out")
        .arg(&reference)
        .status()
        .expect("compile-ref");
    assert!(status.success(), "compile-ref failed");

    let corpus = dir.join("posts.jsonl");
    let mut lines = String::new();
    for i in 0..posts {
        let label = if i % 3 == 0 { "not_informative" } else { "informative" };
        lines.push_str(&format!(
            "{{\"post_id\": \"t{i}\", \"text\": \"report {i} from the storm\", \"label\": \"{label}\"}}\n"
        ));
    }
    std::fs::write(&corpus, lines).unwrap();
    (vocab, reference, corpus)
}

/// Minimal experiment config JSON over the standard fixtures.
pub fn experiment_config(
    vocab: &Path,
    reference: &Path,
    corpus: &Path,
    mode: &str,
    runs: usize,
    mock_default: &str,
) -> String {
    format!(
        r#"{{
  "event_name": "Hurricane Irma",
  "vocab_file": {vocab:?},
  "reference_file": {reference:?},
  "corpus_file": {corpus:?},
  "model": {{
    "kind": "mock",
    "model_id": "scripted-model",
    "mock": {{ "default": {mock_default:?} }}
  }},
  "mode": {mode:?},
  "batch_size": 20,
  "runs": {runs},
  "base_seed": 400
}}
"#,
        vocab = vocab.display().to_string(),
        reference = reference.display().to_string(),
        corpus = corpus.display().to_string(),
    )
}

/// Byte-level snapshot of a directory tree, path-sorted.
pub fn tree_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = walkdir::WalkDir::new(root)
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let rel = e.path().strip_prefix(root).unwrap().display().to_string();
            (rel, std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}
