//! Class-name randomization and the random-name word list.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use indexmap::IndexMap;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::partial_shuffle;
use crate::seed;

/// Environment variable naming a word-list file that replaces the bundled one.
pub const WORDLIST_ENV: &str = "STYLEKIT_WORDLIST";

/// Size of the fixed vocabularies used by index and small-word randomization.
pub const SMALL_VOCAB: usize = 3;

pub const INDEX_VOCAB: [&str; SMALL_VOCAB] = ["1", "2", "3"];

const BUNDLED_WORDS: &str = include_str!("../../data/words.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Randomization {
    None,
    Indices,
    WordsSmall,
    WordsLarge,
}

impl fmt::Display for Randomization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Randomization::None => "none",
            Randomization::Indices => "indices",
            Randomization::WordsSmall => "words_small",
            Randomization::WordsLarge => "words_large",
        })
    }
}

/// Deduplicated, ordered list of candidate class names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordList {
    words: Arc<Vec<String>>,
}

impl WordList {
    /// The bundled 99,171-word public-domain list.
    pub fn bundled() -> Self {
        static BUNDLED: OnceLock<WordList> = OnceLock::new();
        BUNDLED
            .get_or_init(|| WordList::parse(BUNDLED_WORDS))
            .clone()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let list = WordList::parse(&raw);
        if list.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "word list {} is empty",
                path.display()
            )));
        }
        Ok(list)
    }

    /// `$STYLEKIT_WORDLIST` when set, otherwise the bundled list.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(WORDLIST_ENV) {
            Some(p) if !p.is_empty() => WordList::load(p),
            _ => Ok(WordList::bundled()),
        }
    }

    /// One word per line; blank lines dropped, first occurrence kept.
    pub fn parse(text: &str) -> Self {
        WordList::from_words(text.lines().map(str::trim).filter(|w| !w.is_empty()))
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut seen = HashSet::new();
        let words = words
            .into_iter()
            .map(Into::into)
            .filter(|w| seen.insert(w.clone()))
            .collect();
        WordList {
            words: Arc::new(words),
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Vocabulary a policy draws from.
    pub fn vocabulary(&self, policy: Randomization) -> Vec<&str> {
        match policy {
            Randomization::None => Vec::new(),
            Randomization::Indices => INDEX_VOCAB.to_vec(),
            Randomization::WordsSmall => self.words.iter().take(SMALL_VOCAB).map(String::as_str).collect(),
            Randomization::WordsLarge => self.words.iter().map(String::as_str).collect(),
        }
    }

    pub fn vocab_size(&self, policy: Randomization) -> Option<usize> {
        match policy {
            Randomization::None => None,
            Randomization::Indices => Some(SMALL_VOCAB),
            Randomization::WordsSmall => Some(self.len().min(SMALL_VOCAB)),
            Randomization::WordsLarge => Some(self.len()),
        }
    }
}

/// Rendered name → true class, in class declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NameMap(IndexMap<String, String>);

impl NameMap {
    pub fn identity(classes: &[String]) -> Self {
        NameMap(classes.iter().map(|c| (c.clone(), c.clone())).collect())
    }

    /// Build from `(rendered, true)` pairs; fails unless both sides are
    /// pairwise distinct.
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut map = IndexMap::new();
        let mut targets = HashSet::new();
        for (rendered, class) in pairs {
            if !targets.insert(class.clone()) {
                return Err(Error::InvalidArgument(format!("class {class:?} mapped twice")));
            }
            if map.insert(rendered.clone(), class).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "rendered name {rendered:?} used twice"
                )));
            }
        }
        Ok(NameMap(map))
    }

    pub fn rendered_names(&self) -> Vec<String> {
        self.0.keys().cloned().collect()
    }

    pub fn true_class(&self, rendered: &str) -> Option<&str> {
        self.0.get(rendered).map(String::as_str)
    }

    pub fn rendered_for(&self, class: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(_, c)| c.as_str() == class)
            .map(|(r, _)| r.as_str())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(r, c)| (r.as_str(), c.as_str()))
    }
}

/// `k` distinct indices from `0..n` under `seed`. Small vocabularies use a
/// partial shuffle; large ones use rejection sampling so a draw costs O(k).
fn distinct_indices(n: usize, k: usize, seed: u64) -> Vec<usize> {
    if n <= 64 || k * 4 >= n {
        return partial_shuffle(n, k, seed);
    }
    let mut rng = seed::rng(seed);
    let mut seen = HashSet::with_capacity(k);
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let i = rng.random_range(0..n);
        if seen.insert(i) {
            out.push(i);
        }
    }
    out
}

/// Assign each class a distinct name drawn without replacement from the
/// policy's vocabulary. `Randomization::None` is the identity map.
pub fn randomize_class_names(
    classes: &[String],
    policy: Randomization,
    words: &WordList,
    seed: u64,
) -> Result<NameMap> {
    if policy == Randomization::None {
        return Ok(NameMap::identity(classes));
    }
    let size = words.vocab_size(policy).unwrap_or(0);
    if classes.len() > size {
        return Err(Error::VocabTooSmall {
            classes: classes.len(),
            vocab: size,
        });
    }
    let name = |i: usize| match policy {
        Randomization::Indices => INDEX_VOCAB[i].to_string(),
        _ => words.words()[i].clone(),
    };
    let picks = distinct_indices(size, classes.len(), seed);
    NameMap::from_pairs(picks.into_iter().zip(classes).map(|(i, c)| (name(i), c.clone())))
}

impl FromStr for Randomization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Randomization::None),
            "indices" => Ok(Randomization::Indices),
            "words_small" => Ok(Randomization::WordsSmall),
            "words_large" => Ok(Randomization::WordsLarge),
            _ => Err(Error::Parse {
                kind: "randomization",
                value: s.to_string(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classes(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn bundled_list_size() {
        assert_eq!(WordList::bundled().len(), 99_171);
    }

    #[test]
    fn identity_policy() {
        let m = randomize_class_names(&classes(&["polite", "impolite"]), Randomization::None, &WordList::bundled(), 3)
            .unwrap();
        assert_eq!(m.true_class("polite"), Some("polite"));
        assert_eq!(m.true_class("impolite"), Some("impolite"));
    }

    #[test]
    fn vocab_exhaustion_is_an_error() {
        let four = classes(&["a", "b", "c", "d"]);
        assert!(matches!(
            randomize_class_names(&four, Randomization::Indices, &WordList::bundled(), 0),
            Err(Error::VocabTooSmall { classes: 4, vocab: 3 })
        ));
        let tiny = WordList::from_words(["x"]);
        assert!(randomize_class_names(&classes(&["a", "b"]), Randomization::WordsLarge, &tiny, 0).is_err());
    }

    #[test]
    fn small_words_are_list_prefix() {
        let list = WordList::from_words(["alpha", "beta", "gamma", "delta"]);
        assert_eq!(list.vocabulary(Randomization::WordsSmall), ["alpha", "beta", "gamma"]);
        for seed in 0..50 {
            let m = randomize_class_names(&classes(&["p", "q", "r"]), Randomization::WordsSmall, &list, seed).unwrap();
            assert!(m.rendered_names().iter().all(|n| n != "delta"));
        }
    }

    #[test]
    fn word_list_dedups() {
        let l = WordList::parse("a\n\nb\na\n  c \n");
        assert_eq!(l.words(), ["a", "b", "c"]);
    }

    #[test]
    fn name_map_rejects_collisions() {
        assert!(NameMap::from_pairs([("x".to_string(), "a".to_string()), ("x".to_string(), "b".to_string())]).is_err());
        assert!(NameMap::from_pairs([("x".to_string(), "a".to_string()), ("y".to_string(), "a".to_string())]).is_err());
    }
}
