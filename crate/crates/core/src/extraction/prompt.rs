//! Renders the causal-extraction prompt for one batch of posts.
//!
//! The skeleton is fixed; only the event name, the comma-separated variable
//! list, and the numbered posts are substituted, so rendering is
//! deterministic byte for byte.

use std::fmt::Write;

use crate::corpus::PostBatch;
use crate::graph::CanonicalVocabulary;

use super::ExtractionError;

/// Builds the full prompt text for a batch. Posts are numbered from 1, one
/// per line; internal newlines in a post body are flattened to spaces so the
/// one-post-per-line layout survives arbitrary input.
pub fn render_prompt(
    event: &str,
    vocab: &CanonicalVocabulary,
    batch: &PostBatch,
) -> Result<String, ExtractionError> {
    if batch.posts.is_empty() {
        return Err(ExtractionError::EmptyBatch { batch_index: batch.index });
    }
    let variables = vocab.variables().join(", ");
    let mut posts = String::new();
    for (i, post) in batch.posts.iter().enumerate() {
        if i > 0 {
            posts.push('\n');
        }
        let flat = post.text.split_whitespace().collect::<Vec<_>>().join(" ");
        write!(posts, "{}. {}", i + 1, flat).expect("writing to String cannot fail");
    }
    Ok(format!(
        "Task: Identify cause and effect relations from social media posts related to {event}.\n\
         Instructions:\n\
         - If available, conduct a native social media search for posts related to {event}; otherwise, rely solely on the provided posts.\n\
         - Restrict all causes and effects to these variables: {variables}.\n\
         - Extract causal relations that are explicitly stated or reasonably implied in the posts.\n\
         - Represent each causal relation as a directed edge in the format of (Cause, Effect).\n\
         Input: {posts}\n\
         Output: A list of causal relations."
    ))
}
