//! Few-shot prompts: MetaICL, MetaICL with lexicon headers, and the K-shot
//! selection exported for LexPT+K.
//!
//! Layout of one demonstration (the optional header lists every class):
//!
//! ```text
//! polite: please, thanks
//! impolite: shut up, whatever
//! Could you help me?
//! Label: polite
//!
//! ```
//!
//! The query follows the last demonstration as `"{sentence}\nLabel:"`.

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Example, StyleDataset};
use crate::error::{Error, Result};
use crate::lexicon::{partial_shuffle, sample_words, Lexicon};
use crate::prompting::{FinetuneRecord, PromptStyle, Renderer, WORD_SEPARATOR};
use crate::seed::{self, stable_hash};

pub const DEFAULT_K: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelPolicy {
    Gold,
    Random,
}

impl fmt::Display for LabelPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelPolicy::Gold => "gold",
            LabelPolicy::Random => "random",
        })
    }
}

impl FromStr for LabelPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gold" => Ok(LabelPolicy::Gold),
            "random" => Ok(LabelPolicy::Random),
            _ => Err(Error::Parse {
                kind: "label policy",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demonstration {
    pub example_id: String,
    pub text: String,
    pub true_label: String,
    pub shown_label: String,
    pub label_policy: LabelPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lexicon_header: Option<IndexMap<String, Vec<String>>>,
}

impl Demonstration {
    fn write_to(&self, out: &mut String) {
        if let Some(header) = &self.lexicon_header {
            for (class, words) in header {
                out.push_str(class);
                if !words.is_empty() {
                    out.push_str(": ");
                    out.push_str(&words.join(WORD_SEPARATOR));
                }
                out.push('\n');
            }
        }
        out.push_str(&self.text);
        out.push_str("\nLabel: ");
        out.push_str(&self.shown_label);
        out.push_str("\n\n");
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotPrompt {
    pub style: String,
    pub demonstrations: Vec<Demonstration>,
    pub query_id: String,
    pub query_sentence: String,
    pub query_label: String,
    pub seed: u64,
}

impl FewShotPrompt {
    pub fn text(&self) -> String {
        let mut out = String::new();
        for d in &self.demonstrations {
            d.write_to(&mut out);
        }
        out.push_str(&self.query_sentence);
        out.push_str("\nLabel:");
        out
    }

    pub fn record(&self, fingerprint: Option<&str>) -> FewShotRecord {
        FewShotRecord {
            prompt: self.text(),
            gold: self.query_label.clone(),
            meta: FewShotMeta {
                style: self.style.clone(),
                query_id: self.query_id.clone(),
                k: self.demonstrations.len(),
                demo_ids: self.demonstrations.iter().map(|d| d.example_id.clone()).collect(),
                shown_labels: self.demonstrations.iter().map(|d| d.shown_label.clone()).collect(),
                seed: self.seed,
                fingerprint: fingerprint.map(str::to_string),
            },
        }
    }
}

/// One line of a few-shot prompt dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotRecord {
    pub prompt: String,
    pub gold: String,
    pub meta: FewShotMeta,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotMeta {
    pub style: String,
    pub query_id: String,
    pub k: usize,
    pub demo_ids: Vec<String>,
    pub shown_labels: Vec<String>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<String>,
}

/// Few-shot construction settings shared across the queries of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FewShotBuilder {
    pub k: usize,
    pub policy: LabelPolicy,
    pub seed: u64,
    /// Draw new demonstrations for every query instead of one set per run.
    pub redraw_per_query: bool,
    /// Draw a new lexicon header for every demonstration instead of one
    /// header shared by all of them.
    pub resample_headers: bool,
}

impl FewShotBuilder {
    pub fn new(k: usize, policy: LabelPolicy, seed: u64) -> Self {
        FewShotBuilder {
            k,
            policy,
            seed,
            redraw_per_query: false,
            resample_headers: false,
        }
    }

    fn demo_seed(&self, style: &str, query: &Example) -> u64 {
        if self.redraw_per_query {
            stable_hash(self.seed, &[style, &query.id, "demos"])
        } else {
            stable_hash(self.seed, &[style, "demos"])
        }
    }

    pub fn metaicl(&self, style: &StyleDataset, query: &Example) -> Result<FewShotPrompt> {
        let seed = self.demo_seed(&style.name, query);
        let picks = pick_labeled(style, self.k, self.policy, seed)?;
        Ok(FewShotPrompt {
            style: style.name.clone(),
            demonstrations: picks
                .into_iter()
                .map(|(ex, shown)| Demonstration {
                    example_id: ex.id.clone(),
                    text: ex.text.clone(),
                    true_label: ex.label.clone(),
                    shown_label: shown,
                    label_policy: self.policy,
                    lexicon_header: None,
                })
                .collect(),
            query_id: query.id.clone(),
            query_sentence: query.text.clone(),
            query_label: query.label.clone(),
            seed,
        })
    }

    pub fn metaicl_lex(&self, style: &StyleDataset, lexicon: &Lexicon, m: usize, query: &Example) -> Result<FewShotPrompt> {
        lexicon.covers(&style.classes)?;
        let mut prompt = self.metaicl(style, query)?;
        let shared = stable_hash(prompt.seed, &["header"]);
        for (i, demo) in prompt.demonstrations.iter_mut().enumerate() {
            let header_seed = if self.resample_headers {
                stable_hash(prompt.seed, &["header", &i.to_string()])
            } else {
                shared
            };
            let mut header = IndexMap::new();
            for class in &style.classes {
                let sample = sample_words(lexicon, class, m, stable_hash(header_seed, &["lexicon", class]))?;
                header.insert(class.clone(), sample.words);
            }
            demo.lexicon_header = Some(header);
        }
        Ok(prompt)
    }
}

/// `k` distinct train examples with their shown labels. Random labels come
/// from a stream of their own, so they do not depend on which examples
/// were picked.
fn pick_labeled(style: &StyleDataset, k: usize, policy: LabelPolicy, seed: u64) -> Result<Vec<(Example, String)>> {
    if k == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    if k > style.train.len() {
        return Err(Error::NotEnoughExamples {
            requested: k,
            available: style.train.len(),
        });
    }
    if style.classes.is_empty() {
        return Err(Error::InvalidDataset {
            dataset: style.name.clone(),
            reason: "no classes".into(),
        });
    }
    let picks = partial_shuffle(style.train.len(), k, stable_hash(seed, &["pick"]));
    let mut label_rng = seed::rng(stable_hash(seed, &["labels"]));
    Ok(picks
        .into_iter()
        .map(|i| {
            let ex = style.train[i].clone();
            let shown = match policy {
                LabelPolicy::Gold => ex.label.clone(),
                LabelPolicy::Random => style.classes[label_rng.random_range(0..style.classes.len())].clone(),
            };
            (ex, shown)
        })
        .collect())
}

pub fn build_metaicl_prompt(
    style: &StyleDataset,
    k: usize,
    policy: LabelPolicy,
    query: &Example,
    seed: u64,
) -> Result<FewShotPrompt> {
    FewShotBuilder::new(k, policy, seed).metaicl(style, query)
}

pub fn build_metaicl_lex_prompt(
    style: &StyleDataset,
    lexicon: &Lexicon,
    k: usize,
    m: usize,
    policy: LabelPolicy,
    query: &Example,
    seed: u64,
) -> Result<FewShotPrompt> {
    FewShotBuilder::new(k, policy, seed).metaicl_lex(style, lexicon, m, query)
}

/// The K target examples for the second fine-tuning step, with labels per
/// policy.
pub fn select_k_for_lexpt(style: &StyleDataset, k: usize, policy: LabelPolicy, seed: u64) -> Result<Vec<(Example, String)>> {
    pick_labeled(style, k, policy, stable_hash(seed, &[&style.name, "lexpt-k"]))
}

/// Render the K-shot selection through a LexPT renderer; each record's
/// target is the rendered name of its shown label.
pub fn lexpt_k_records(
    style: &StyleDataset,
    prompt_style: &PromptStyle,
    renderer: &Renderer,
    k: usize,
    policy: LabelPolicy,
    seed: u64,
) -> Result<Vec<FinetuneRecord>> {
    select_k_for_lexpt(style, k, policy, seed)?
        .into_iter()
        .map(|(ex, shown)| {
            let (s, lex) = renderer.example_seeds(seed, &style.name, &ex.id);
            let prompt = renderer.render(prompt_style, &ex.text, s, lex)?;
            FinetuneRecord::from_prompt(prompt, &style.name, &ex.id, &shown)
        })
        .collect()
}
