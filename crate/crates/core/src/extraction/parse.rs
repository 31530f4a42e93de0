//! Parses directed causal pairs out of free-form model responses.
//!
//! The prompt mandates the `(Cause, Effect)` format, so the scanner is
//! strict about the pair syntax and forgiving about everything around it:
//! list bullets, numbering, and quotes are tolerated, all other text is
//! ignored. Mentions that parse but do not map onto the vocabulary become
//! rejections, never faults.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::graph::{CanonicalVocabulary, DirectedEdge};

/// Refusal phrases checked (case-insensitively) when a response yields no
/// accepted pairs. Configurable per run; these are the defaults.
pub const DEFAULT_REFUSAL_PHRASES: &[&str] =
    &["cannot", "insufficient evidence", "no causal", "unable to"];

/// A pair mention that parsed syntactically but was not accepted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedMention {
    pub cause_text: String,
    pub effect_text: String,
    pub reason: String,
}

/// Outcome of scanning one response.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParsedResponse {
    /// Accepted edges in scan order; duplicates are kept so batch
    /// aggregation can count occurrences.
    pub edges: Vec<DirectedEdge>,
    pub rejected: Vec<RejectedMention>,
    pub refused: bool,
}

fn pair_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    // One parenthesized group, no nesting; the comma split happens after.
    PATTERN.get_or_init(|| Regex::new(r"\(([^()]*)\)").expect("static regex"))
}

fn strip_mention(raw: &str) -> &str {
    raw.trim().trim_matches(|c| matches!(c, '"' | '\'' | '\u{201c}' | '\u{201d}' | '\u{2018}' | '\u{2019}')).trim()
}

/// Scans `response` for `(X, Y)` pairs and maps each side onto the
/// vocabulary. `refused` is set when nothing was accepted and the response
/// carries one of the refusal phrases.
pub fn parse_causal_pairs(
    response: &str,
    vocab: &CanonicalVocabulary,
    refusal_phrases: &[String],
) -> ParsedResponse {
    let mut parsed = ParsedResponse::default();
    for capture in pair_pattern().captures_iter(response) {
        let inner = &capture[1];
        let parts: Vec<&str> = inner.split(',').collect();
        if parts.len() != 2 {
            continue; // not a pair; ignored text
        }
        let cause_text = strip_mention(parts[0]);
        let effect_text = strip_mention(parts[1]);
        if cause_text.is_empty() || effect_text.is_empty() {
            continue;
        }
        let cause = vocab.resolve(cause_text);
        let effect = vocab.resolve(effect_text);
        match (cause, effect) {
            (Some(cause), Some(effect)) if cause == effect => {
                parsed.rejected.push(RejectedMention {
                    cause_text: cause_text.to_string(),
                    effect_text: effect_text.to_string(),
                    reason: format!("self-loop: {cause}"),
                });
            }
            (Some(cause), Some(effect)) => parsed.edges.push(DirectedEdge {
                cause: cause.to_string(),
                effect: effect.to_string(),
            }),
            (None, _) => parsed.rejected.push(RejectedMention {
                cause_text: cause_text.to_string(),
                effect_text: effect_text.to_string(),
                reason: format!("unknown variable: {cause_text}"),
            }),
            (_, None) => parsed.rejected.push(RejectedMention {
                cause_text: cause_text.to_string(),
                effect_text: effect_text.to_string(),
                reason: format!("unknown variable: {effect_text}"),
            }),
        }
    }
    if parsed.edges.is_empty() {
        let folded = response.to_lowercase();
        parsed.refused = refusal_phrases
            .iter()
            .any(|phrase| !phrase.is_empty() && folded.contains(&phrase.to_lowercase()));
    }
    parsed
}

/// Owned copy of the default refusal phrase list.
pub fn default_refusal_phrases() -> Vec<String> {
    DEFAULT_REFUSAL_PHRASES.iter().map(|s| s.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> CanonicalVocabulary {
        CanonicalVocabulary::new(
            "Tropical Cyclone",
            ["heavy rainfall", "flooding", "power outage"],
        )
        .unwrap()
    }

    fn parse(response: &str) -> ParsedResponse {
        parse_causal_pairs(response, &vocab(), &default_refusal_phrases())
    }

    #[test]
    fn clean_pairs_parse() {
        let parsed = parse("(Heavy Rainfall, Flooding)\n(Flooding, Power Outage)");
        assert_eq!(parsed.edges.len(), 2);
        assert!(parsed.rejected.is_empty());
        assert!(!parsed.refused);
        assert_eq!(parsed.edges[0].cause, "heavy rainfall");
        assert_eq!(parsed.edges[0].effect, "flooding");
    }

    #[test]
    fn self_loop_is_rejected() {
        let parsed = parse("(Flooding, Flooding)");
        assert!(parsed.edges.is_empty());
        assert_eq!(parsed.rejected.len(), 1);
        assert!(parsed.rejected[0].reason.contains("self-loop"));
        assert!(!parsed.refused);
    }

    #[test]
    fn refusal_sentence_sets_flag() {
        let parsed =
            parse("I cannot identify causal relations; the posts contain insufficient evidence.");
        assert!(parsed.edges.is_empty());
        assert!(parsed.refused);
    }

    #[test]
    fn refusal_phrase_with_accepted_pairs_is_not_a_refusal() {
        let parsed = parse("I cannot be sure, but: (Heavy Rainfall, Flooding)");
        assert_eq!(parsed.edges.len(), 1);
        assert!(!parsed.refused);
    }

    #[test]
    fn bullets_numbering_and_quotes_are_tolerated() {
        let parsed = parse(
            "Causal relations:\n1. (\"Heavy Rainfall\", \"Flooding\")\n- ('Flooding', 'Power Outage')",
        );
        assert_eq!(parsed.edges.len(), 2);
    }

    #[test]
    fn unknown_variable_is_rejected_not_fuzzy_matched() {
        let parsed = parse("(floods, power outage)");
        assert!(parsed.edges.is_empty());
        assert_eq!(parsed.rejected.len(), 1);
        assert!(parsed.rejected[0].reason.contains("floods"));
    }

    #[test]
    fn non_pair_parens_are_ignored_text() {
        let parsed = parse("(see above) (a, b, c) () (heavy rainfall, flooding)");
        assert_eq!(parsed.edges.len(), 1);
        assert!(parsed.rejected.is_empty());
    }

    #[test]
    fn duplicates_are_kept_for_counting() {
        let parsed = parse("(heavy rainfall, flooding) and again (heavy rainfall, flooding)");
        assert_eq!(parsed.edges.len(), 2);
    }

    #[test]
    fn plain_non_refusal_text_yields_empty_parse() {
        let parsed = parse("The posts discuss the weather.");
        assert!(parsed.edges.is_empty());
        assert!(!parsed.refused);
    }
}
