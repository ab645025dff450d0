//! Rank classification over pluggable scorers.

mod mock;
mod overlap;
mod remote;

use std::collections::HashSet;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prompting::RenderedPrompt;

pub use mock::{router, serve, serve_until_signal, MockScript, MockServer};
pub use overlap::{overlap_hits, overlap_score, token_count, OverlapScorer};
pub use remote::{RemoteOptions, RemoteScorer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub prompt: String,
    pub continuations: Vec<String>,
}

impl ScoreRequest {
    pub fn new(prompt: impl Into<String>, continuations: Vec<String>) -> Self {
        ScoreRequest {
            prompt: prompt.into(),
            continuations,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.continuations.is_empty() {
            return Err(Error::Contract("request has no continuations".into()));
        }
        let mut seen = HashSet::new();
        for c in &self.continuations {
            if !seen.insert(c.as_str()) {
                return Err(Error::Contract(format!("duplicate continuation {c:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub log_likelihoods: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_counts: Option<Vec<u32>>,
}

impl ScoreResponse {
    /// Check the response against the request it answers.
    pub fn check(&self, request: &ScoreRequest) -> Result<()> {
        let n = request.continuations.len();
        if self.log_likelihoods.len() != n {
            return Err(Error::Contract(format!(
                "expected {n} log-likelihoods, got {}",
                self.log_likelihoods.len()
            )));
        }
        if let Some(counts) = &self.token_counts {
            if counts.len() != n {
                return Err(Error::Contract(format!(
                    "expected {n} token counts, got {}",
                    counts.len()
                )));
            }
        }
        for (c, v) in request.continuations.iter().zip(&self.log_likelihoods) {
            if !v.is_finite() {
                return Err(Error::NonFiniteScore {
                    candidate: c.clone(),
                    value: *v,
                });
            }
        }
        Ok(())
    }
}

/// Anything that returns one log-likelihood per continuation.
pub trait Scorer: Send + Sync {
    fn score(&self, request: &ScoreRequest) -> Result<ScoreResponse>;
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn score(&self, request: &ScoreRequest) -> Result<ScoreResponse> {
        (**self).score(request)
    }
}

impl<S: Scorer + ?Sized> Scorer for Box<S> {
    fn score(&self, request: &ScoreRequest) -> Result<ScoreResponse> {
        (**self).score(request)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub predicted_class: String,
    /// Rendered name → log-likelihood, in prompt order.
    pub scores: IndexMap<String, f64>,
    pub rendered_winner: String,
}

/// Index of the maximum score; the earliest index wins ties.
pub fn argmax(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        match best {
            Some(b) if scores[b] >= s => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Score every rendered class name as a continuation of the prompt and map
/// the best one back to its true class.
pub fn rank_classify(prompt: &RenderedPrompt, scorer: &dyn Scorer, prompt_id: &str) -> Result<Prediction> {
    let candidates = prompt.candidates();
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("prompt has no candidate classes".into()));
    }
    let request = ScoreRequest::new(prompt.text.clone(), candidates);
    let response = scorer.score(&request).map_err(|e| match e {
        Error::Scorer { .. } => e,
        other => Error::Scorer {
            prompt_id: prompt_id.to_string(),
            reason: other.to_string(),
        },
    })?;
    response.check(&request)?;
    let winner = argmax(&response.log_likelihoods).expect("non-empty");
    let rendered_winner = request.continuations[winner].clone();
    let predicted_class = prompt
        .name_map
        .true_class(&rendered_winner)
        .expect("candidate taken from name map")
        .to_string();
    Ok(Prediction {
        predicted_class,
        scores: request.continuations.into_iter().zip(response.log_likelihoods).collect(),
        rendered_winner,
    })
}
