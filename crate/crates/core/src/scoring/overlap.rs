//! Lexicon-overlap oracle: a deterministic stand-in for a language model.
//!
//! A candidate's score is `ln(1 + hits)`, where hits counts the candidate's
//! lexicon entries found in the sentence. Entries made only of letters and
//! digits match whole tokens (the sentence is split on every
//! non-alphanumeric character); any other entry matches as a substring.
//! Both comparisons ignore case.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::prompting::{parse, WORD_SEPARATOR};

use super::{ScoreRequest, ScoreResponse, Scorer};

fn tokens(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty())
}

/// Number of distinct entries present in `sentence`.
pub fn overlap_hits<S: AsRef<str>>(sentence: &str, entries: &[S]) -> usize {
    let lowered = sentence.to_lowercase();
    let words: HashSet<&str> = tokens(&lowered).collect();
    let mut seen = HashSet::new();
    entries
        .iter()
        .map(|e| e.as_ref().trim().to_lowercase())
        .filter(|e| !e.is_empty() && seen.insert(e.clone()))
        .filter(|e| {
            if e.chars().all(char::is_alphanumeric) {
                words.contains(e.as_str())
            } else {
                lowered.contains(e.as_str())
            }
        })
        .count()
}

pub fn overlap_score<S: AsRef<str>>(sentence: &str, entries: &[S]) -> f64 {
    (overlap_hits(sentence, entries) as f64).ln_1p()
}

/// Whitespace-token count used as the oracle's reported continuation length.
pub fn token_count(text: &str) -> u32 {
    text.split_whitespace().count().max(1) as u32
}

/// Scores prompts rendered by this crate by reading the sentence and each
/// candidate's word slot back out of the prompt text.
#[derive(Debug, Clone, Copy, Default)]
pub struct OverlapScorer;

impl OverlapScorer {
    pub fn score_prompt(prompt: &str, continuations: &[String]) -> Result<Vec<f64>> {
        let parsed = parse(prompt, continuations).ok_or_else(|| {
            Error::Contract("prompt does not match any known layout for these candidates".into())
        })?;
        Ok(parsed
            .words
            .iter()
            .map(|slot| {
                let entries: Vec<&str> = slot.split(WORD_SEPARATOR).collect();
                overlap_score(&parsed.sentence, &entries)
            })
            .collect())
    }
}

impl Scorer for OverlapScorer {
    fn score(&self, request: &ScoreRequest) -> Result<ScoreResponse> {
        request.validate()?;
        let log_likelihoods = OverlapScorer::score_prompt(&request.prompt, &request.continuations)?;
        Ok(ScoreResponse {
            log_likelihoods,
            token_counts: Some(request.continuations.iter().map(|c| token_count(c)).collect()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_counted_hits() {
        let informal = ["dude", "kinda", "sorta"];
        assert_eq!(overlap_hits("dude that was kinda great", &informal), 2);
        assert!((overlap_score("dude that was kinda great", &informal) - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn empty_overlap_is_zero() {
        assert_eq!(overlap_score("nothing here", &["dude"]), 0.0);
    }

    #[test]
    fn word_boundaries() {
        assert_eq!(overlap_hits("that sort of thing", &["sorta"]), 0);
        assert_eq!(overlap_hits("Sorta, yes.", &["sorta"]), 1);
        assert_eq!(overlap_hits("a thank-you note", &["thank"]), 1);
        assert_eq!(overlap_hits("Thank You so much", &["thank you"]), 1);
        assert_eq!(overlap_hits("thankyou", &["thank you"]), 0);
        assert_eq!(overlap_hits("Ünïcode wörds", &["wörds"]), 1);
    }

    #[test]
    fn duplicate_entries_count_once() {
        assert_eq!(overlap_hits("dude", &["dude", "Dude"]), 1);
    }
}
