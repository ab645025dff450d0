//! Template layouts.
//!
//! Each layout is a token sequence built from the rendered class names.
//! Rendering substitutes the word lists and the sentence; parsing matches the
//! same sequence back against a prompt, which is how the overlap oracle
//! recovers the sentence and per-class words from prompt text alone.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateId {
    T1,
    T2,
    T3,
    T4,
}

impl TemplateId {
    pub const ALL: [TemplateId; 4] = [TemplateId::T1, TemplateId::T2, TemplateId::T3, TemplateId::T4];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::T1 => "t1",
            TemplateId::T2 => "t2",
            TemplateId::T3 => "t3",
            TemplateId::T4 => "t4",
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "t1" => Ok(TemplateId::T1),
            "t2" => Ok(TemplateId::T2),
            "t3" => Ok(TemplateId::T3),
            "t4" => Ok(TemplateId::T4),
            _ => Err(Error::Parse {
                kind: "template",
                value: s.to_string(),
            }),
        }
    }
}

/// Which token sequence to use: one of the four instruction templates, or
/// the bare layout shared by every variant without instructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Instructed(TemplateId),
    Bare,
}

impl Layout {
    pub const ALL: [Layout; 5] = [
        Layout::Instructed(TemplateId::T1),
        Layout::Instructed(TemplateId::T2),
        Layout::Instructed(TemplateId::T3),
        Layout::Instructed(TemplateId::T4),
        Layout::Bare,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Lit(String),
    Words(usize),
    Sentence,
}

fn tokens(layout: Layout, names: &[String]) -> Vec<Tok> {
    let lit = |s: String| Tok::Lit(s);
    let mut t = Vec::new();
    match layout {
        Layout::Instructed(TemplateId::T1) => {
            t.push(lit("Which style best describes the sentence \u{201c}".into()));
            t.push(Tok::Sentence);
            t.push(lit("\u{201d}?\nstyles:".into()));
            for (i, n) in names.iter().enumerate() {
                t.push(lit(format!("\n- {n}: ")));
                t.push(Tok::Words(i));
            }
        }
        Layout::Instructed(TemplateId::T2) => {
            t.push(lit(
                "In this task, you are given sentences. The task is to classify a sentence as ".into(),
            ));
            for (i, n) in names.iter().enumerate() {
                if i > 0 {
                    t.push(lit(" or as ".into()));
                }
                t.push(lit(format!(
                    "\"{n}\" if the style of the sentence is similar to the words \""
                )));
                t.push(Tok::Words(i));
                t.push(lit("\"".into()));
            }
            t.push(lit(". Here is the sentence: \"".into()));
            t.push(Tok::Sentence);
            t.push(lit("\".".into()));
        }
        Layout::Instructed(TemplateId::T3) => {
            t.push(lit(
                "The task is to classify styles of sentences. We define the following styles: ".into(),
            ));
            for (i, n) in names.iter().enumerate() {
                if i > 0 {
                    t.push(lit("; ".into()));
                }
                t.push(lit(format!("\"{n}\" is defined by \"")));
                t.push(Tok::Words(i));
                t.push(lit("\"".into()));
            }
            t.push(lit(". Here is the sentence: \"".into()));
            t.push(Tok::Sentence);
            t.push(lit("\", which is more like".into()));
        }
        Layout::Instructed(TemplateId::T4) => {
            t.push(lit("Context: ".into()));
            for (i, n) in names.iter().enumerate() {
                if i > 0 {
                    t.push(lit(", ".into()));
                }
                t.push(lit(format!("\"{n}\" is defined by \"")));
                t.push(Tok::Words(i));
                t.push(lit("\"".into()));
            }
            t.push(lit(" Sentence: ".into()));
            t.push(Tok::Sentence);
            t.push(lit(
                " Question: which is the correct style of the sentence? Answer:".into(),
            ));
        }
        Layout::Bare => {
            for (i, n) in names.iter().enumerate() {
                if i > 0 {
                    t.push(lit("\n".into()));
                }
                t.push(lit(format!("{n}: ")));
                t.push(Tok::Words(i));
            }
            t.push(lit("\n".into()));
            t.push(Tok::Sentence);
        }
    }
    merge_literals(t)
}

fn merge_literals(tokens: Vec<Tok>) -> Vec<Tok> {
    let mut out: Vec<Tok> = Vec::with_capacity(tokens.len());
    for tok in tokens {
        match (out.last_mut(), tok) {
            (Some(Tok::Lit(prev)), Tok::Lit(next)) => prev.push_str(&next),
            (_, tok) => out.push(tok),
        }
    }
    out
}

/// Fill a layout. `words[i]` is the already-joined word text for class `i`.
pub fn fill(layout: Layout, names: &[String], words: &[String], sentence: &str) -> String {
    debug_assert_eq!(names.len(), words.len());
    let mut out = String::new();
    for tok in tokens(layout, names) {
        match tok {
            Tok::Lit(s) => out.push_str(&s),
            Tok::Words(i) => out.push_str(&words[i]),
            Tok::Sentence => out.push_str(sentence),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedPrompt {
    pub layout: Layout,
    pub sentence: String,
    /// Joined word text per rendered name, in the order of `names`.
    pub words: Vec<String>,
}

/// Match `text` against every layout built from `names` (in prompt order).
///
/// Wildcards end at the first occurrence of the following literal, except
/// before the final literal, which must be a suffix of the text. Sentences
/// may therefore contain quotes freely in t2/t3/t4.
pub fn parse(text: &str, names: &[String]) -> Option<ParsedPrompt> {
    Layout::ALL
        .iter()
        .find_map(|&layout| parse_layout(text, layout, names))
}

fn parse_layout(text: &str, layout: Layout, names: &[String]) -> Option<ParsedPrompt> {
    let toks = tokens(layout, names);
    let mut pos = 0;
    let mut sentence = None;
    let mut words = vec![None; names.len()];
    let mut i = 0;
    while i < toks.len() {
        match &toks[i] {
            Tok::Lit(s) => {
                if !text[pos..].starts_with(s.as_str()) {
                    return None;
                }
                pos += s.len();
            }
            wild => {
                let end = match toks.get(i + 1) {
                    None => text.len(),
                    Some(Tok::Lit(next)) if i + 2 == toks.len() => {
                        if !text.ends_with(next.as_str()) || text.len() - next.len() < pos {
                            return None;
                        }
                        text.len() - next.len()
                    }
                    Some(Tok::Lit(next)) => pos + text[pos..].find(next.as_str())?,
                    Some(_) => return None,
                };
                let value = text[pos..end].to_string();
                match wild {
                    Tok::Sentence => sentence = Some(value),
                    Tok::Words(k) => words[*k] = Some(value),
                    Tok::Lit(_) => unreachable!(),
                }
                pos = end;
            }
        }
        i += 1;
    }
    if pos != text.len() {
        return None;
    }
    Some(ParsedPrompt {
        layout,
        sentence: sentence?,
        words: words.into_iter().collect::<Option<Vec<_>>>()?,
    })
}
