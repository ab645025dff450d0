//! Prompt rendering for every prompt variant over the four templates, with
//! class-name randomization and fine-tuning record export.

mod randomize;
mod template;

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::corpus::PoolEntry;
use crate::error::{Error, Result};
use crate::lexicon::{sample_words, Lexicon, LexiconSample};
use crate::par;
use crate::seed::stable_hash;

pub use randomize::{
    randomize_class_names, NameMap, Randomization, WordList, INDEX_VOCAB, SMALL_VOCAB, WORDLIST_ENV,
};
pub use template::{fill, parse, Layout, ParsedPrompt, TemplateId};

/// Separator between sampled lexicon words inside one slot.
pub const WORD_SEPARATOR: &str = ", ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct PromptVariant {
    pub uses_instructions: bool,
    pub randomization: Randomization,
    pub uses_lexicon: bool,
}

impl PromptVariant {
    pub const NO_LEXICON: Self = Self::new(true, Randomization::None, false);
    pub const LP_0: Self = Self::new(false, Randomization::None, true);
    pub const LP_R_INDEX: Self = Self::new(false, Randomization::Indices, true);
    pub const LP_RW_SMALL: Self = Self::new(false, Randomization::WordsSmall, true);
    pub const LP_RW: Self = Self::new(false, Randomization::WordsLarge, true);
    pub const LP_I: Self = Self::new(true, Randomization::None, true);
    pub const LP_I_R_INDEX: Self = Self::new(true, Randomization::Indices, true);
    pub const LP_I_RW_SMALL: Self = Self::new(true, Randomization::WordsSmall, true);
    pub const LP_I_RW: Self = Self::new(true, Randomization::WordsLarge, true);

    /// The eight lexicon variants, instructions × randomization.
    pub const LEXICON_VARIANTS: [Self; 8] = [
        Self::LP_0,
        Self::LP_R_INDEX,
        Self::LP_RW_SMALL,
        Self::LP_RW,
        Self::LP_I,
        Self::LP_I_R_INDEX,
        Self::LP_I_RW_SMALL,
        Self::LP_I_RW,
    ];

    pub const ALL: [Self; 9] = [
        Self::NO_LEXICON,
        Self::LP_0,
        Self::LP_R_INDEX,
        Self::LP_RW_SMALL,
        Self::LP_RW,
        Self::LP_I,
        Self::LP_I_R_INDEX,
        Self::LP_I_RW_SMALL,
        Self::LP_I_RW,
    ];

    pub const fn new(uses_instructions: bool, randomization: Randomization, uses_lexicon: bool) -> Self {
        PromptVariant {
            uses_instructions,
            randomization,
            uses_lexicon,
        }
    }

    pub fn name(&self) -> String {
        if !self.uses_lexicon {
            return "nolex".into();
        }
        let mut s = String::from("lp");
        if self.uses_instructions {
            s.push_str("-i");
        }
        s.push_str(match self.randomization {
            Randomization::None if !self.uses_instructions => "0",
            Randomization::None => "",
            Randomization::Indices => "-ri",
            Randomization::WordsSmall => "-rw-",
            Randomization::WordsLarge => "-rw",
        });
        s
    }
}

impl fmt::Display for PromptVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for PromptVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PromptVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Parse {
                kind: "variant",
                value: s.to_string(),
            })
    }
}

impl From<PromptVariant> for String {
    fn from(v: PromptVariant) -> String {
        v.name()
    }
}

impl TryFrom<String> for PromptVariant {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// A style as seen by the renderer: declared classes and, for lexicon
/// variants, its lexicon.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptStyle {
    pub name: String,
    pub classes: Vec<String>,
    pub lexicon: Option<Lexicon>,
}

impl PromptStyle {
    pub fn new(name: impl Into<String>, classes: Vec<String>, lexicon: Option<Lexicon>) -> Self {
        PromptStyle {
            name: name.into(),
            classes,
            lexicon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub text: String,
    pub name_map: NameMap,
    /// Keyed by true class. Empty for the No-Lexicon variant.
    pub sample_used: IndexMap<String, LexiconSample>,
    pub seed: u64,
    pub lexicon_seed: u64,
    pub variant: PromptVariant,
    pub template: TemplateId,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub truncated: bool,
}

impl RenderedPrompt {
    /// Rendered names in the order they appear in the prompt.
    pub fn candidates(&self) -> Vec<String> {
        self.name_map.rendered_names()
    }
}

#[derive(Debug, Clone)]
pub struct Renderer {
    pub template: TemplateId,
    pub variant: PromptVariant,
    pub m: usize,
    pub words: WordList,
    /// Draw a fresh lexicon sample for every example (default) instead of
    /// one sample per style for the whole run.
    pub resample_per_example: bool,
    /// Character budget; longer prompts get their sentence cut to fit.
    pub max_chars: Option<usize>,
}

impl Renderer {
    pub fn new(template: TemplateId, variant: PromptVariant, m: usize, words: WordList) -> Self {
        Renderer {
            template,
            variant,
            m,
            words,
            resample_per_example: true,
            max_chars: None,
        }
    }

    /// Seeds for one example: `(prompt seed, lexicon seed)`. Both depend
    /// only on the run seed and stable identifiers.
    pub fn example_seeds(&self, run_seed: u64, style: &str, example_id: &str) -> (u64, u64) {
        let prompt = stable_hash(run_seed, &[style, example_id, "prompt"]);
        let lexicon = if self.resample_per_example {
            stable_hash(run_seed, &[style, example_id, "lexicon"])
        } else {
            stable_hash(run_seed, &[style, "lexicon"])
        };
        (prompt, lexicon)
    }

    pub fn render(&self, style: &PromptStyle, sentence: &str, seed: u64, lexicon_seed: u64) -> Result<RenderedPrompt> {
        if style.classes.len() < 2 {
            return Err(Error::Render(format!(
                "style {:?} needs at least two classes",
                style.name
            )));
        }
        if sentence.trim().is_empty() {
            return Err(Error::Render("sentence is empty".into()));
        }
        let variant = self.variant;
        let name_map = randomize_class_names(
            &style.classes,
            variant.randomization,
            &self.words,
            stable_hash(seed, &["names"]),
        )?;

        let mut sample_used = IndexMap::new();
        if variant.uses_lexicon {
            let lexicon = style
                .lexicon
                .as_ref()
                .ok_or_else(|| Error::MissingLexicon(style.name.clone()))?;
            for class in &style.classes {
                let sample = sample_words(
                    lexicon,
                    class,
                    self.m,
                    stable_hash(lexicon_seed, &["lexicon", class]),
                )
                .map_err(|_| Error::UnknownClass {
                    style: style.name.clone(),
                    class: class.clone(),
                })?;
                sample_used.insert(class.clone(), sample);
            }
        }

        let names = name_map.rendered_names();
        let words: Vec<String> = names
            .iter()
            .zip(&style.classes)
            .map(|(rendered, class)| match sample_used.get(class) {
                Some(s) if !s.words.is_empty() => s.words.join(WORD_SEPARATOR),
                _ => rendered.clone(),
            })
            .collect();
        let layout = if variant.uses_instructions {
            Layout::Instructed(self.template)
        } else {
            Layout::Bare
        };
        let mut text = fill(layout, &names, &words, sentence);
        let mut truncated = false;
        if let Some(cap) = self.max_chars {
            let len = text.chars().count();
            if len > cap {
                let keep = sentence.chars().count().saturating_sub(len - cap).max(1);
                let cut: String = sentence.chars().take(keep).collect();
                text = fill(layout, &names, &words, &cut);
                truncated = true;
            }
        }

        Ok(RenderedPrompt {
            text,
            name_map,
            sample_used,
            seed,
            lexicon_seed,
            variant,
            template: self.template,
            truncated,
        })
    }
}

/// Render one prompt with a single seed for both name and lexicon draws.
#[allow(clippy::too_many_arguments)]
pub fn render_prompt(
    template: TemplateId,
    variant: PromptVariant,
    style: &PromptStyle,
    sentence: &str,
    m: usize,
    seed: u64,
    words: &WordList,
) -> Result<RenderedPrompt> {
    Renderer::new(template, variant, m, words.clone()).render(style, sentence, seed, seed)
}

/// The baseline prompt: class names fill the lexicon slots, no randomization.
pub fn render_no_lexicon(template: TemplateId, classes: &[String], sentence: &str) -> Result<RenderedPrompt> {
    let style = PromptStyle::new("", classes.to_vec(), None);
    Renderer::new(template, PromptVariant::NO_LEXICON, 0, WordList::from_words(Vec::<String>::new()))
        .render(&style, sentence, 0, 0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinetuneMeta {
    pub style: String,
    pub variant: PromptVariant,
    pub template: TemplateId,
    pub name_map: NameMap,
    pub example_id: String,
    pub gold: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinetuneRecord {
    pub input: String,
    /// Rendered name of the gold (or assigned) class.
    pub target: String,
    pub meta: FinetuneMeta,
}

impl FinetuneRecord {
    pub fn from_prompt(prompt: RenderedPrompt, style: &str, example_id: &str, label: &str) -> Result<Self> {
        let target = prompt
            .name_map
            .rendered_for(label)
            .ok_or_else(|| Error::Render(format!("label {label:?} is not a class of {style:?}")))?
            .to_string();
        Ok(FinetuneRecord {
            input: prompt.text,
            target,
            meta: FinetuneMeta {
                style: style.to_string(),
                variant: prompt.variant,
                template: prompt.template,
                name_map: prompt.name_map,
                example_id: example_id.to_string(),
                gold: label.to_string(),
                seed: prompt.seed,
                fingerprint: None,
            },
        })
    }
}

fn check_styles(pool: &[PoolEntry], styles: &HashMap<String, PromptStyle>, renderer: &Renderer) -> Result<()> {
    let mut checked = std::collections::HashSet::new();
    for entry in pool {
        if !checked.insert(entry.dataset.as_str()) {
            continue;
        }
        let style = styles
            .get(&entry.dataset)
            .ok_or_else(|| Error::UnknownStyle(entry.dataset.clone()))?;
        if renderer.variant.uses_lexicon {
            style
                .lexicon
                .as_ref()
                .ok_or_else(|| Error::MissingLexicon(entry.dataset.clone()))?
                .covers(&style.classes)?;
        }
    }
    Ok(())
}

fn record_for(
    entry: &PoolEntry,
    styles: &HashMap<String, PromptStyle>,
    renderer: &Renderer,
    run_seed: u64,
) -> Result<FinetuneRecord> {
    let style = &styles[&entry.dataset];
    let (seed, lexicon_seed) = renderer.example_seeds(run_seed, &entry.dataset, &entry.example.id);
    let prompt = renderer.render(style, &entry.example.text, seed, lexicon_seed)?;
    FinetuneRecord::from_prompt(prompt, &entry.dataset, &entry.example.id, &entry.example.label)
}

/// One record per pool entry, in pool order. Names and lexicon samples are
/// drawn per record from seeds derived from the example identity.
pub fn export_finetune_records(
    pool: &[PoolEntry],
    styles: &HashMap<String, PromptStyle>,
    renderer: &Renderer,
    run_seed: u64,
    threads: usize,
) -> Result<Vec<FinetuneRecord>> {
    check_styles(pool, styles, renderer)?;
    par::try_map_ordered(pool, threads, |entry| record_for(entry, styles, renderer, run_seed))
}

const EXPORT_CHUNK: usize = 2048;

/// Stream records as JSONL, rendering at most one chunk ahead of the writer.
/// Returns the number of records written.
pub fn export_finetune_jsonl<W: Write>(
    pool: &[PoolEntry],
    styles: &HashMap<String, PromptStyle>,
    renderer: &Renderer,
    run_seed: u64,
    threads: usize,
    fingerprint: Option<&str>,
    mut out: W,
) -> Result<usize> {
    check_styles(pool, styles, renderer)?;
    for chunk in pool.chunks(EXPORT_CHUNK) {
        let records = par::try_map_ordered(chunk, threads, |entry| record_for(entry, styles, renderer, run_seed))?;
        for mut record in records {
            record.meta.fingerprint = fingerprint.map(str::to_string);
            serde_json::to_writer(&mut out, &record)?;
            out.write_all(b"\n").map_err(|e| Error::io("<export>", e))?;
        }
    }
    Ok(pool.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_names_round_trip() {
        let names: Vec<String> = PromptVariant::ALL.iter().map(|v| v.name()).collect();
        assert_eq!(
            names,
            ["nolex", "lp0", "lp-ri", "lp-rw-", "lp-rw", "lp-i", "lp-i-ri", "lp-i-rw-", "lp-i-rw"]
        );
        for v in PromptVariant::ALL {
            assert_eq!(v.name().parse::<PromptVariant>().unwrap(), v);
        }
        assert!("lp-x".parse::<PromptVariant>().is_err());
        assert_eq!(serde_json::to_string(&PromptVariant::LP_I_RW).unwrap(), "\"lp-i-rw\"");
    }

    #[test]
    fn lexicon_variants_cover_the_grid() {
        let mut seen = std::collections::HashSet::new();
        for v in PromptVariant::LEXICON_VARIANTS {
            assert!(v.uses_lexicon);
            assert!(seen.insert((v.uses_instructions, v.randomization)));
        }
        assert_eq!(seen.len(), 8);
    }

    #[test]
    fn rendering_requires_two_classes_and_text() {
        let style = PromptStyle::new("s", vec!["a".into()], None);
        assert!(render_prompt(TemplateId::T2, PromptVariant::NO_LEXICON, &style, "x", 0, 0, &WordList::bundled()).is_err());
        assert!(render_no_lexicon(TemplateId::T2, &["a".into(), "b".into()], "  ").is_err());
    }

    #[test]
    fn lexicon_variant_needs_lexicon() {
        let style = PromptStyle::new("s", vec!["a".into(), "b".into()], None);
        let err = render_prompt(TemplateId::T1, PromptVariant::LP_I, &style, "x", 2, 0, &WordList::bundled()).unwrap_err();
        assert!(matches!(err, Error::MissingLexicon(_)));
    }

    #[test]
    fn character_cap_cuts_the_sentence() {
        let mut r = Renderer::new(TemplateId::T4, PromptVariant::NO_LEXICON, 0, WordList::bundled());
        let style = PromptStyle::new("s", vec!["a".into(), "b".into()], None);
        let long = "word ".repeat(200);
        let full = r.render(&style, &long, 0, 0).unwrap();
        r.max_chars = Some(300);
        let cut = r.render(&style, &long, 0, 0).unwrap();
        assert!(cut.truncated && !full.truncated);
        assert_eq!(cut.text.chars().count(), 300);
    }
}
