//! Per-class style lexicons, seeded word sampling, derived lexicon sources
//! and the bundled LLM elicitation prompts.
//!
//! Lexicon files are JSON:
//!
//! ```json
//! {"style": "Formality", "source": "nlp",
//!  "classes": {"formal": ["admittedly", "albeit"], "informal": ["dude", "kinda"]}}
//! ```

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::corpus::age_target;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LexiconSource {
    Nlp,
    Chatgpt,
    Dict,
    Human,
    Classname,
}

impl LexiconSource {
    pub fn as_str(self) -> &'static str {
        match self {
            LexiconSource::Nlp => "nlp",
            LexiconSource::Chatgpt => "chatgpt",
            LexiconSource::Dict => "dict",
            LexiconSource::Human => "human",
            LexiconSource::Classname => "classname",
        }
    }
}

impl fmt::Display for LexiconSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LexiconSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "nlp" => LexiconSource::Nlp,
            "chatgpt" => LexiconSource::Chatgpt,
            "dict" => LexiconSource::Dict,
            "human" => LexiconSource::Human,
            "classname" => LexiconSource::Classname,
            _ => {
                return Err(Error::Parse {
                    kind: "lexicon source",
                    value: s.to_string(),
                })
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    pub style: String,
    pub source: LexiconSource,
    /// Class name → entries, in file order. Entries may be multi-word phrases.
    #[serde(rename = "classes")]
    pub entries: IndexMap<String, Vec<String>>,
}

impl Lexicon {
    pub fn new(
        style: impl Into<String>,
        source: LexiconSource,
        entries: IndexMap<String, Vec<String>>,
    ) -> Result<Self> {
        let lex = Lexicon {
            style: style.into(),
            source,
            entries,
        };
        lex.validate()?;
        Ok(lex)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let lex: Lexicon = serde_json::from_str(&raw)?;
        lex.validate()?;
        Ok(lex)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let body = serde_json::to_string_pretty(self)?;
        fs::write(path, body + "\n").map_err(|e| Error::io(path, e))
    }

    /// Every class non-empty; no blank entries; no case-insensitive
    /// duplicates within a class.
    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: String| Error::InvalidLexicon {
            style: self.style.clone(),
            reason,
        };
        if self.entries.is_empty() {
            return Err(invalid("no classes".into()));
        }
        for (class, words) in &self.entries {
            if words.is_empty() {
                return Err(invalid(format!("class {class:?} has an empty entry list")));
            }
            let mut seen = HashSet::new();
            for w in words {
                if w.trim().is_empty() {
                    return Err(invalid(format!("class {class:?} has a blank entry")));
                }
                if !seen.insert(w.to_lowercase()) {
                    return Err(invalid(format!("class {class:?} lists {w:?} twice")));
                }
            }
        }
        Ok(())
    }

    pub fn words(&self, class: &str) -> Result<&[String]> {
        self.entries
            .get(class)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownClass {
                style: self.style.clone(),
                class: class.to_string(),
            })
    }

    pub fn covers(&self, classes: &[String]) -> Result<()> {
        for c in classes {
            self.words(c)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconSample {
    pub class: String,
    pub words: Vec<String>,
    pub m_requested: usize,
    pub seed: u64,
}

/// Draw `m` entries of `class` without replacement.
///
/// Seeded partial Fisher–Yates over the stored order. When `m` covers the
/// whole list the list is returned unshuffled. Samples for different `m`
/// under one seed are not guaranteed to nest.
pub fn sample_words(lexicon: &Lexicon, class: &str, m: usize, seed: u64) -> Result<LexiconSample> {
    let list = lexicon.words(class)?;
    let words = if m >= list.len() {
        list.to_vec()
    } else {
        partial_shuffle(list.len(), m, seed)
            .into_iter()
            .map(|i| list[i].clone())
            .collect()
    };
    Ok(LexiconSample {
        class: class.to_string(),
        words,
        m_requested: m,
        seed,
    })
}

/// First `k` positions of a seeded Fisher–Yates shuffle of `0..n`.
pub(crate) fn partial_shuffle(n: usize, k: usize, seed: u64) -> Vec<usize> {
    use rand::Rng;
    let k = k.min(n);
    let mut rng = seed::rng(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx
}

/// Lexicon whose only entry per class is the class name itself.
pub fn classname_lexicon(style: &str, classes: &[String]) -> Result<Lexicon> {
    if classes.is_empty() {
        return Err(Error::InvalidLexicon {
            style: style.to_string(),
            reason: "no classes".into(),
        });
    }
    let entries = classes.iter().map(|c| (c.clone(), vec![c.clone()])).collect();
    Lexicon::new(style, LexiconSource::Classname, entries)
}

/// Merge the eight original age-class lexicons into `youthful` / `mature`,
/// mirroring the dataset remapping. Classes that the remapping drops are
/// ignored; merged lists keep first occurrences.
pub fn remap_age_lexicon(lexicon: &Lexicon) -> Result<Lexicon> {
    let mut merged: IndexMap<String, Vec<String>> = IndexMap::new();
    merged.insert("youthful".into(), Vec::new());
    merged.insert("mature".into(), Vec::new());
    let mut seen: IndexMap<&str, HashSet<String>> = IndexMap::new();
    for (class, words) in &lexicon.entries {
        let Some(target) = age_target(class) else {
            continue;
        };
        let seen = seen.entry(target).or_default();
        let list = merged.get_mut(target).expect("both targets inserted");
        for w in words {
            if seen.insert(w.to_lowercase()) {
                list.push(w.clone());
            }
        }
    }
    Lexicon::new(lexicon.style.clone(), lexicon.source, merged)
}

const BUNDLED_ELICITATION: &str = include_str!("../data/elicitation.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElicitationEntry {
    pub style: String,
    pub class: String,
    pub prompts: Vec<String>,
}

/// Prompt strings for asking an LLM to write a class lexicon. Nothing here
/// talks to a network; operators paste the prompts and ingest the answers
/// as lexicon files.
#[derive(Debug, Clone)]
pub struct ElicitationCatalog {
    entries: Vec<ElicitationEntry>,
}

impl ElicitationCatalog {
    pub fn bundled() -> Self {
        let entries = serde_json::from_str(BUNDLED_ELICITATION)
            .expect("bundled elicitation catalog is valid JSON");
        ElicitationCatalog { entries }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(ElicitationCatalog {
            entries: serde_json::from_str(&raw)?,
        })
    }

    pub fn entries(&self) -> &[ElicitationEntry] {
        &self.entries
    }

    /// Case-insensitive lookup of a (style, class) pair.
    pub fn prompts(&self, style: &str, class: &str) -> Result<Vec<String>> {
        self.entries
            .iter()
            .find(|e| e.style.eq_ignore_ascii_case(style) && e.class.eq_ignore_ascii_case(class))
            .map(|e| e.prompts.clone())
            .ok_or_else(|| Error::UnknownElicitation {
                style: style.to_string(),
                class: class.to_string(),
                known: self
                    .entries
                    .iter()
                    .map(|e| format!("({}, {})", e.style, e.class))
                    .collect::<Vec<_>>()
                    .join(", "),
            })
    }
}

pub fn elicitation_prompts(style: &str, class: &str) -> Result<Vec<String>> {
    ElicitationCatalog::bundled().prompts(style, class)
}
