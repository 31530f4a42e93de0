//! Social-media post corpora: loading, deduplication, label filtering,
//! seeded shuffling, and batching.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("batch size must be at least 1, got {0}")]
    InvalidBatchSize(usize),
    #[error("unsupported corpus format for {0:?} (expected .tsv or .jsonl)")]
    UnknownFormat(String),
    #[error("tsv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Informativeness label carried by the curated datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostLabel {
    Informative,
    NonInformative,
    Unlabeled,
}

impl PostLabel {
    /// Maps a dataset label string. Accepts the spelling variants seen in
    /// CrisisMMD/HumAID exports; "dont know" judgments become unlabeled.
    fn parse(raw: &str) -> Option<PostLabel> {
        let folded = raw.trim().to_lowercase().replace('-', "_");
        match folded.as_str() {
            "" => Some(PostLabel::Unlabeled),
            "informative" => Some(PostLabel::Informative),
            "non_informative" | "not_informative" => Some(PostLabel::NonInformative),
            "unlabeled" | "dont_know_or_cant_judge" => Some(PostLabel::Unlabeled),
            _ => None,
        }
    }
}

impl fmt::Display for PostLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            PostLabel::Informative => "informative",
            PostLabel::NonInformative => "non_informative",
            PostLabel::Unlabeled => "unlabeled",
        };
        f.write_str(name)
    }
}

/// One social-media post. Identifiers are opaque; text is never empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub post_id: String,
    pub text: String,
    pub label: PostLabel,
}

/// An ordered, id-keyed post collection for one event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostCorpus {
    pub event_name: String,
    posts: Vec<Post>,
}

/// A consecutive slice of the corpus handed to the model as one prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostBatch {
    pub index: usize,
    pub posts: Vec<Post>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Tsv,
    Jsonl,
}

impl CorpusFormat {
    pub fn from_path(path: &Path) -> Result<CorpusFormat, CorpusError> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") => Ok(CorpusFormat::Tsv),
            Some("jsonl") | Some("ndjson") => Ok(CorpusFormat::Jsonl),
            _ => Err(CorpusError::UnknownFormat(path.display().to_string())),
        }
    }
}

/// Loads a corpus preserving file order. The event name is taken from the
/// file stem; callers with a configured event name overwrite it afterwards.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<PostCorpus, CorpusError> {
    let event_name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("corpus")
        .to_string();
    let posts = match format {
        CorpusFormat::Tsv => load_tsv(path)?,
        CorpusFormat::Jsonl => load_jsonl(path)?,
    };
    Ok(PostCorpus { event_name, posts })
}

fn load_tsv(path: &Path) -> Result<Vec<Post>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .flexible(true)
        .from_path(path)?;
    let headers = reader
        .headers()
        .map_err(|e| CorpusError::Parse { line: 1, reason: e.to_string() })?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let id_col = column("post_id").ok_or_else(|| CorpusError::MissingColumn("post_id".into()))?;
    let text_col = column("text").ok_or_else(|| CorpusError::MissingColumn("text".into()))?;
    let label_col = column("label");

    let mut posts = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2; // 1-based, after the header
        let row = row.map_err(|e| CorpusError::Parse { line, reason: e.to_string() })?;
        let field = |col: usize| row.get(col).unwrap_or("").to_string();
        posts.push(build_post(
            line,
            field(id_col),
            field(text_col),
            label_col.map(field),
        )?);
    }
    Ok(posts)
}

fn load_jsonl(path: &Path) -> Result<Vec<Post>, CorpusError> {
    #[derive(Deserialize)]
    struct Row {
        post_id: String,
        text: String,
        #[serde(default)]
        label: Option<String>,
    }

    let content = std::fs::read_to_string(path)?;
    let mut posts = Vec::new();
    for (i, raw) in content.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(raw)
            .map_err(|e| CorpusError::Parse { line, reason: e.to_string() })?;
        posts.push(build_post(line, row.post_id, row.text, row.label)?);
    }
    Ok(posts)
}

fn build_post(
    line: usize,
    post_id: String,
    text: String,
    label: Option<String>,
) -> Result<Post, CorpusError> {
    if post_id.trim().is_empty() {
        return Err(CorpusError::Parse { line, reason: "empty post_id".into() });
    }
    if text.trim().is_empty() {
        return Err(CorpusError::Parse { line, reason: "empty text".into() });
    }
    let label = match label {
        None => PostLabel::Unlabeled,
        Some(raw) => PostLabel::parse(&raw).ok_or_else(|| CorpusError::Parse {
            line,
            reason: format!("unrecognized label {raw:?}"),
        })?,
    };
    Ok(Post { post_id, text, label })
}

impl PostCorpus {
    pub fn new(event_name: impl Into<String>, posts: Vec<Post>) -> Self {
        Self { event_name: event_name.into(), posts }
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    pub fn distinct_ids(&self) -> usize {
        self.posts.iter().map(|p| p.post_id.as_str()).collect::<BTreeSet<_>>().len()
    }

    pub fn label_count(&self, label: PostLabel) -> usize {
        self.posts.iter().filter(|p| p.label == label).count()
    }

    /// Removes duplicate post ids, keeping the first occurrence of each.
    pub fn dedupe(&self) -> PostCorpus {
        let mut seen = BTreeSet::new();
        let posts = self
            .posts
            .iter()
            .filter(|p| seen.insert(p.post_id.clone()))
            .cloned()
            .collect();
        PostCorpus { event_name: self.event_name.clone(), posts }
    }

    /// Keeps posts whose label equals `keep`, preserving order. Matching is
    /// strict: unlabeled posts survive only when `keep` is unlabeled.
    pub fn filter_by_label(&self, keep: PostLabel) -> PostCorpus {
        let posts = self.posts.iter().filter(|p| p.label == keep).cloned().collect();
        PostCorpus { event_name: self.event_name.clone(), posts }
    }

    /// Deterministic seeded permutation, for per-run batch-order variance.
    pub fn shuffled(&self, seed: u64) -> PostCorpus {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut posts = self.posts.clone();
        posts.shuffle(&mut rng);
        PostCorpus { event_name: self.event_name.clone(), posts }
    }

    /// Splits into consecutive non-overlapping batches; all full except
    /// possibly the last. An empty corpus yields no batches.
    pub fn batched(&self, size: usize) -> Result<Vec<PostBatch>, CorpusError> {
        if size < 1 {
            return Err(CorpusError::InvalidBatchSize(size));
        }
        Ok(self
            .posts
            .chunks(size)
            .enumerate()
            .map(|(index, chunk)| PostBatch { index, posts: chunk.to_vec() })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post(id: &str, label: PostLabel) -> Post {
        Post {
            post_id: id.into(),
            text: format!("post body {id}"),
            label,
        }
    }

    fn corpus(ids: &[&str]) -> PostCorpus {
        PostCorpus::new(
            "event",
            ids.iter().map(|id| post(id, PostLabel::Unlabeled)).collect(),
        )
    }

    #[test]
    fn dedupe_keeps_first_occurrence() {
        let c = corpus(&["p1", "p2", "p1", "p3", "p2"]);
        let d = c.dedupe();
        let ids: Vec<_> = d.posts().iter().map(|p| p.post_id.as_str()).collect();
        assert_eq!(ids, ["p1", "p2", "p3"]);
    }

    #[test]
    fn dedupe_is_idempotent() {
        let c = corpus(&["a", "b", "a"]);
        assert_eq!(c.dedupe(), c.dedupe().dedupe());
    }

    #[test]
    fn dedupe_degenerate_all_same_id() {
        let c = corpus(&["x", "x", "x", "x", "x"]);
        assert_eq!(c.dedupe().len(), 1);
    }

    #[test]
    fn filter_keeps_matching_labels_in_order() {
        let c = PostCorpus::new(
            "event",
            vec![
                post("a", PostLabel::Informative),
                post("b", PostLabel::NonInformative),
                post("c", PostLabel::Informative),
                post("d", PostLabel::NonInformative),
            ],
        );
        let f = c.filter_by_label(PostLabel::NonInformative);
        let ids: Vec<_> = f.posts().iter().map(|p| p.post_id.as_str()).collect();
        assert_eq!(ids, ["b", "d"]);
    }

    #[test]
    fn filter_is_strict_about_unlabeled() {
        let c = corpus(&["a", "b"]);
        assert!(c.filter_by_label(PostLabel::Informative).is_empty());
        assert_eq!(c.filter_by_label(PostLabel::Unlabeled).len(), 2);
    }

    #[test]
    fn batches_cover_corpus_with_short_tail() {
        let c = corpus(&(0..45).map(|i| format!("p{i}")).collect::<Vec<_>>()
            .iter().map(|s| s.as_str()).collect::<Vec<_>>());
        let batches = c.batched(20).unwrap();
        let sizes: Vec<_> = batches.iter().map(|b| b.posts.len()).collect();
        assert_eq!(sizes, [20, 20, 5]);
        assert_eq!(batches.iter().map(|b| b.index).collect::<Vec<_>>(), [0, 1, 2]);
    }

    #[test]
    fn exact_batch_size_yields_single_batch() {
        let ids: Vec<String> = (0..20).map(|i| format!("p{i}")).collect();
        let c = corpus(&ids.iter().map(|s| s.as_str()).collect::<Vec<_>>());
        assert_eq!(c.batched(20).unwrap().len(), 1);
    }

    #[test]
    fn empty_corpus_yields_no_batches() {
        let c = PostCorpus::new("event", vec![]);
        assert!(c.batched(20).unwrap().is_empty());
    }

    #[test]
    fn zero_batch_size_is_rejected() {
        let c = corpus(&["a"]);
        assert!(matches!(c.batched(0), Err(CorpusError::InvalidBatchSize(0))));
    }

    #[test]
    fn shuffle_is_seed_deterministic() {
        let ids: Vec<String> = (0..50).map(|i| format!("p{i}")).collect();
        let c = corpus(&ids.iter().map(|s| s.as_str()).collect::<Vec<_>>());
        assert_eq!(c.shuffled(7), c.shuffled(7));
        assert_ne!(c.shuffled(7), c.shuffled(8));
    }

    #[test]
    fn loads_jsonl_in_file_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("posts.jsonl");
        std::fs::write(
            &path,
            r#"{"post_id": "1", "text": "flooded streets downtown", "label": "informative"}
{"post_id": "2", "text": "thoughts and prayers"}
{"post_id": "3", "text": "power is out near the coast", "label": "not_informative"}
"#,
        )
        .unwrap();
        let c = load_corpus(&path, CorpusFormat::Jsonl).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.posts()[0].label, PostLabel::Informative);
        assert_eq!(c.posts()[1].label, PostLabel::Unlabeled);
        assert_eq!(c.posts()[2].label, PostLabel::NonInformative);
        assert_eq!(c.event_name, "posts");
    }

    #[test]
    fn jsonl_empty_text_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("posts.jsonl");
        std::fs::write(&path, "{\"post_id\": \"1\", \"text\": \"  \"}\n").unwrap();
        match load_corpus(&path, CorpusFormat::Jsonl).unwrap_err() {
            CorpusError::Parse { line, reason } => {
                assert_eq!(line, 1);
                assert!(reason.contains("empty text"));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn loads_tsv_with_labels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("posts.tsv");
        std::fs::write(
            &path,
            "post_id\ttext\tlabel\n1\twind damage on main st\tinformative\n2\tlol\tnot_informative\n",
        )
        .unwrap();
        let c = load_corpus(&path, CorpusFormat::Tsv).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.posts()[1].label, PostLabel::NonInformative);
    }

    #[test]
    fn tsv_missing_post_id_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("posts.tsv");
        std::fs::write(&path, "id\ttext\n1\thello\n").unwrap();
        match load_corpus(&path, CorpusFormat::Tsv).unwrap_err() {
            CorpusError::MissingColumn(col) => assert_eq!(col, "post_id"),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn unrecognized_label_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("posts.tsv");
        std::fs::write(&path, "post_id\ttext\tlabel\n1\thello\tmaybe\n").unwrap();
        assert!(matches!(
            load_corpus(&path, CorpusFormat::Tsv).unwrap_err(),
            CorpusError::Parse { line: 2, .. }
        ));
    }
}
