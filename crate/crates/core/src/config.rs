//! Run configuration and the resources it names.
//!
//! A run is described by a TOML file whose keys mirror the command-line
//! flags; flags given on the command line win. Relative paths in the file
//! are resolved against the file's directory.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::{remap_age, StyleDataset, AGE_CLASSES};
use crate::error::{Error, Result};
use crate::fewshot::{LabelPolicy, DEFAULT_K};
use crate::lexicon::{classname_lexicon, remap_age_lexicon, Lexicon, LexiconSource};
use crate::prompting::{PromptStyle, PromptVariant, Renderer, TemplateId, WordList};
use crate::scoring::{OverlapScorer, RemoteOptions, RemoteScorer, Scorer};
use crate::seed::text_hash;

pub const DEFAULT_M: usize = 5;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_MAX_INFLIGHT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Overlap,
    Http,
}

impl FromStr for ScorerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "overlap" => Ok(ScorerKind::Overlap),
            "http" => Ok(ScorerKind::Http),
            _ => Err(Error::Parse {
                kind: "scorer",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FewShotMode {
    Metaicl,
    MetaiclLex,
    LexptK,
}

impl FromStr for FewShotMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "metaicl" => Ok(FewShotMode::Metaicl),
            "metaicl-lex" => Ok(FewShotMode::MetaiclLex),
            "lexpt-k" => Ok(FewShotMode::LexptK),
            _ => Err(Error::Parse {
                kind: "few-shot mode",
                value: s.to_string(),
            }),
        }
    }
}

impl fmt::Display for FewShotMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FewShotMode::Metaicl => "metaicl",
            FewShotMode::MetaiclLex => "metaicl-lex",
            FewShotMode::LexptK => "lexpt-k",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Dataset manifests, one per style.
    pub datasets: Vec<PathBuf>,
    /// Lexicon files; a style may have one per source.
    pub lexicons: Vec<PathBuf>,
    pub source: Vec<String>,
    /// Styles to render, classify or evaluate. Empty means every dataset
    /// not listed as a source.
    pub target: Vec<String>,
    pub template: TemplateId,
    pub variant: PromptVariant,
    pub m: usize,
    pub k: usize,
    pub labels: LabelPolicy,
    /// Which lexicon to use when a style has several.
    pub lexicon_source: Option<LexiconSource>,
    pub scorer: ScorerKind,
    pub endpoint: Option<String>,
    pub bearer_token: Option<String>,
    pub seed: u64,
    pub out: PathBuf,
    pub max_inflight: usize,
    pub timeout_secs: u64,
    pub length_normalize: bool,
    pub max_chars: Option<usize>,
    /// Use at most this many test examples per target style.
    pub limit: Option<usize>,
    pub resample_per_example: bool,
    pub fewshot_mode: FewShotMode,
    pub redraw_demos: bool,
    pub resample_headers: bool,
    /// Collapse an eight-class age dataset to youthful / mature on load.
    pub remap_age: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            datasets: Vec::new(),
            lexicons: Vec::new(),
            source: Vec::new(),
            target: Vec::new(),
            template: TemplateId::T2,
            variant: PromptVariant::LP_I,
            m: DEFAULT_M,
            k: DEFAULT_K,
            labels: LabelPolicy::Gold,
            lexicon_source: None,
            scorer: ScorerKind::Overlap,
            endpoint: None,
            bearer_token: None,
            seed: DEFAULT_SEED,
            out: PathBuf::from("out"),
            max_inflight: DEFAULT_MAX_INFLIGHT,
            timeout_secs: 30,
            length_normalize: false,
            max_chars: None,
            limit: None,
            resample_per_example: true,
            fewshot_mode: FewShotMode::Metaicl,
            redraw_demos: false,
            resample_headers: false,
            remap_age: true,
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig =
            toml::from_str(&raw).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.datasets.iter_mut().for_each(resolve);
        cfg.lexicons.iter_mut().for_each(resolve);
        resolve(&mut cfg.out);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_inflight == 0 {
            return Err(Error::Config("max_inflight must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.scorer == ScorerKind::Http && self.endpoint.as_deref().unwrap_or("").is_empty() {
            return Err(Error::Config("the http scorer needs an endpoint".into()));
        }
        if self.datasets.is_empty() {
            return Err(Error::Config("no datasets configured".into()));
        }
        if let Some(overlap) = self.source.iter().find(|s| self.target.contains(s)) {
            return Err(Error::Config(format!("style {overlap:?} is both source and target")));
        }
        Ok(())
    }

    /// Digest of every setting that can change an output, combined with a
    /// digest of the loaded inputs (see [`Resources::content_digest`]). The
    /// output directory, concurrency, timeouts and credentials are excluded.
    pub fn fingerprint(&self, content_digest: &str) -> String {
        self.digest(content_digest, true)
    }

    /// Like [`RunConfig::fingerprint`] but ignoring the seed, so reports of
    /// one configuration under several seeds can be aggregated.
    pub fn fingerprint_without_seed(&self, content_digest: &str) -> String {
        self.digest(content_digest, false)
    }

    fn digest(&self, content_digest: &str, with_seed: bool) -> String {
        let mut view = self.clone();
        view.out = PathBuf::new();
        view.max_inflight = 0;
        view.timeout_secs = 0;
        view.bearer_token = None;
        if !with_seed {
            view.seed = 0;
        }
        let body = serde_json::to_string(&view).expect("config serializes");
        text_hash(&format!("{body}\n{content_digest}"))[..16].to_string()
    }

    pub fn renderer(&self, words: &WordList) -> Renderer {
        let mut r = Renderer::new(self.template, self.variant, self.m, words.clone());
        r.resample_per_example = self.resample_per_example;
        r.max_chars = self.max_chars;
        r
    }

    pub fn build_scorer(&self) -> Result<Box<dyn Scorer>> {
        match self.scorer {
            ScorerKind::Overlap => Ok(Box::new(OverlapScorer)),
            ScorerKind::Http => {
                let endpoint = self
                    .endpoint
                    .as_deref()
                    .ok_or_else(|| Error::Config("the http scorer needs an endpoint".into()))?;
                let options = RemoteOptions {
                    timeout: Duration::from_secs(self.timeout_secs.max(1)),
                    max_inflight: self.max_inflight,
                    length_normalize: self.length_normalize,
                    bearer_token: self.bearer_token.clone(),
                    ..RemoteOptions::default()
                };
                Ok(Box::new(RemoteScorer::new(endpoint, options)?))
            }
        }
    }
}

fn is_age(classes: &[String]) -> bool {
    AGE_CLASSES
        .iter()
        .all(|a| classes.iter().any(|c| c.eq_ignore_ascii_case(a)))
}

/// Datasets and lexicons named by a config, loaded and validated.
#[derive(Debug, Clone)]
pub struct Resources {
    pub datasets: Vec<StyleDataset>,
    pub lexicons: HashMap<String, Vec<Lexicon>>,
    pub words: WordList,
}

impl Resources {
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        let mut datasets = Vec::with_capacity(cfg.datasets.len());
        let mut remapped = Vec::new();
        for path in &cfg.datasets {
            let mut ds = StyleDataset::load(path)?;
            if cfg.remap_age && is_age(&ds.classes) {
                ds = remap_age(&ds)?;
                remapped.push(ds.name.clone());
            }
            if datasets.iter().any(|d: &StyleDataset| d.name == ds.name) {
                return Err(Error::Config(format!("dataset {:?} listed twice", ds.name)));
            }
            datasets.push(ds);
        }
        let mut lexicons: HashMap<String, Vec<Lexicon>> = HashMap::new();
        for path in &cfg.lexicons {
            let mut lex = Lexicon::load(path)?;
            if remapped.contains(&lex.style) && is_age(&lex.entries.keys().cloned().collect::<Vec<_>>()) {
                lex = remap_age_lexicon(&lex)?;
            }
            let list = lexicons.entry(lex.style.clone()).or_default();
            if list.iter().any(|l| l.source == lex.source) {
                return Err(Error::Config(format!(
                    "two {} lexicons for style {:?}",
                    lex.source.as_str(),
                    lex.style
                )));
            }
            list.push(lex);
        }
        if let Some(n) = cfg.limit {
            for ds in &mut datasets {
                ds.test.truncate(n);
            }
        }
        Ok(Resources {
            datasets,
            lexicons,
            words: WordList::from_env()?,
        })
    }

    /// Hash of the loaded datasets, lexicons and word list.
    pub fn content_digest(&self) -> String {
        let mut lexicons: Vec<&Lexicon> = self.lexicons.values().flatten().collect();
        lexicons.sort_by(|a, b| (&a.style, a.source.as_str()).cmp(&(&b.style, b.source.as_str())));
        let body = serde_json::to_string(&(&self.datasets, lexicons)).expect("inputs serialize");
        text_hash(&format!("{}\n{}", text_hash(&body), text_hash(&self.words.words().join("\n"))))
    }

    pub fn dataset(&self, name: &str) -> Result<&StyleDataset> {
        self.datasets
            .iter()
            .find(|d| d.name == name)
            .ok_or_else(|| Error::UnknownStyle(name.to_string()))
    }

    pub fn targets(&self, cfg: &RunConfig) -> Result<Vec<String>> {
        let names: Vec<String> = if cfg.target.is_empty() {
            self.datasets
                .iter()
                .map(|d| d.name.clone())
                .filter(|n| !cfg.source.contains(n))
                .collect()
        } else {
            cfg.target.clone()
        };
        for n in &names {
            self.dataset(n)?;
        }
        if names.is_empty() {
            return Err(Error::Config("no target styles".into()));
        }
        Ok(names)
    }

    pub fn sources(&self, cfg: &RunConfig) -> Result<Vec<String>> {
        let names: Vec<String> = if cfg.source.is_empty() {
            self.datasets
                .iter()
                .map(|d| d.name.clone())
                .filter(|n| !cfg.target.contains(n))
                .collect()
        } else {
            cfg.source.clone()
        };
        if names.is_empty() {
            return Err(Error::Config("no source styles".into()));
        }
        Ok(names)
    }

    /// The lexicon of `style` from `source`; with no source given, the
    /// style's only lexicon. Class-name lexicons are built on demand.
    pub fn lexicon(&self, style: &str, source: Option<LexiconSource>) -> Result<Lexicon> {
        if source == Some(LexiconSource::Classname) {
            return classname_lexicon(style, &self.dataset(style)?.classes);
        }
        let available = self.lexicons.get(style).map(Vec::as_slice).unwrap_or(&[]);
        match source {
            Some(src) => available
                .iter()
                .find(|l| l.source == src)
                .cloned()
                .ok_or_else(|| Error::MissingLexicon(format!("{style} ({})", src.as_str()))),
            None => match available {
                [] => Err(Error::MissingLexicon(style.to_string())),
                [one] => Ok(one.clone()),
                _ => Err(Error::Config(format!(
                    "style {style:?} has several lexicons; choose one with --lexicon-source"
                ))),
            },
        }
    }

    pub fn prompt_style(&self, style: &str, variant: PromptVariant, source: Option<LexiconSource>) -> Result<PromptStyle> {
        let ds = self.dataset(style)?;
        let lexicon = if variant.uses_lexicon {
            let lex = self.lexicon(style, source)?;
            lex.covers(&ds.classes)?;
            Some(lex)
        } else {
            None
        };
        Ok(PromptStyle::new(style, ds.classes.clone(), lexicon))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!((c.template, c.m, c.k, c.seed, c.max_inflight), (TemplateId::T2, 5, 4, 42, 8));
    }

    #[test]
    fn fingerprint_ignores_plumbing() {
        let words = "inputs";
        let a = RunConfig::default();
        let mut b = a.clone();
        b.max_inflight = 1;
        b.out = "elsewhere".into();
        assert_eq!(a.fingerprint(words), b.fingerprint(words));
        b.m = 6;
        assert_ne!(a.fingerprint(words), b.fingerprint(words));
        let mut c = a.clone();
        c.seed = 7;
        assert_ne!(a.fingerprint(words), c.fingerprint(words));
        assert_eq!(a.fingerprint_without_seed(words), c.fingerprint_without_seed(words));
        assert_ne!(a.fingerprint(words), a.fingerprint("other inputs"));
    }

    #[test]
    fn toml_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(
            &path,
            "datasets = [\"d/x.toml\"]\ntemplate = \"t3\"\nvariant = \"lp-i-rw\"\nm = 10\nlabels = \"random\"\n",
        )
        .unwrap();
        let c = RunConfig::load(&path).unwrap();
        assert_eq!(c.template, TemplateId::T3);
        assert_eq!(c.variant, PromptVariant::LP_I_RW);
        assert_eq!(c.labels, LabelPolicy::Random);
        assert_eq!(c.datasets[0], dir.path().join("d/x.toml"));
        fs::write(&path, "bogus = 1\n").unwrap();
        assert!(RunConfig::load(&path).is_err());
    }
}
