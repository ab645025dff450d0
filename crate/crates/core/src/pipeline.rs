//! Zero-shot evaluation of one style: render every test sentence, rank the
//! candidates with a scorer, and score the predictions.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::corpus::{Split, StyleDataset};
use crate::error::{Error, Result};
use crate::eval::{macro_f1, EvalReport};
use crate::par;
use crate::prompting::{PromptStyle, Renderer};
use crate::scoring::{rank_classify, Scorer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub example_id: String,
    pub gold: String,
    pub predicted: String,
    pub rendered_winner: String,
    pub scores: IndexMap<String, f64>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleResult {
    pub style: String,
    pub predictions: Vec<PredictionRecord>,
    pub report: EvalReport,
}

/// Classify the test split of `dataset`. Work fans out over at most
/// `threads` workers; results come back in test-set order.
pub fn classify_style(
    dataset: &StyleDataset,
    style: &PromptStyle,
    renderer: &Renderer,
    scorer: &dyn Scorer,
    run_seed: u64,
    threads: usize,
) -> Result<StyleResult> {
    if dataset.test.is_empty() {
        return Err(Error::EmptySplit {
            dataset: dataset.name.clone(),
            split: Split::Test.to_string(),
        });
    }
    let predictions = par::try_map_ordered(&dataset.test, threads, |ex| {
        let (seed, lexicon_seed) = renderer.example_seeds(run_seed, &dataset.name, &ex.id);
        let prompt = renderer.render(style, &ex.text, seed, lexicon_seed)?;
        let pred = rank_classify(&prompt, scorer, &format!("{}/{}", dataset.name, ex.id))?;
        Ok(PredictionRecord {
            example_id: ex.id.clone(),
            gold: ex.label.clone(),
            predicted: pred.predicted_class,
            rendered_winner: pred.rendered_winner,
            scores: pred.scores,
            seed,
            truncated: prompt.truncated,
        })
    })?;
    let pairs: Vec<(&str, &str)> = predictions
        .iter()
        .map(|p| (p.gold.as_str(), p.predicted.as_str()))
        .collect();
    let report = macro_f1(&dataset.classes, &pairs)?;
    Ok(StyleResult {
        style: dataset.name.clone(),
        predictions,
        report,
    })
}
