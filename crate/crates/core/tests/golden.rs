//! Snapshot tests for every template × variant rendering.
//!
//! Run with `STYLEKIT_BLESS=1` to rewrite the snapshots after an intended
//! layout change.

use std::fs;
use std::path::PathBuf;

use indexmap::IndexMap;
use stylekit::lexicon::{Lexicon, LexiconSource};
use stylekit::prompting::{render_no_lexicon, PromptStyle, PromptVariant, Renderer, TemplateId, WordList};

const POLITENESS_NO_LEXICON: &str = "In this task, you are given sentences. The task is to classify a sentence as \"polite\" if the style of the sentence is similar to the words \"polite\" or as \"impolite\" if the style of the sentence is similar to the words \"impolite\". Here is the sentence: \"I've just noticed I wrote... and smooth out the text?\".";

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn politeness() -> PromptStyle {
    let entries: IndexMap<String, Vec<String>> = [
        ("polite", ["please", "thank you", "appreciate", "kindly", "grateful"]),
        ("impolite", ["shut up", "stupid", "whatever", "idiot", "damn"]),
    ]
    .into_iter()
    .map(|(c, ws)| (c.to_string(), ws.iter().map(|w| w.to_string()).collect()))
    .collect();
    let lexicon = Lexicon::new("politeness", LexiconSource::Human, entries).unwrap();
    PromptStyle::new("politeness", vec!["polite".into(), "impolite".into()], Some(lexicon))
}

#[test]
fn no_lexicon_politeness_matches_reference() {
    let classes = vec!["polite".to_string(), "impolite".to_string()];
    let p = render_no_lexicon(TemplateId::T2, &classes, "I've just noticed I wrote... and smooth out the text?").unwrap();
    assert_eq!(p.text, POLITENESS_NO_LEXICON);
    let snap = fs::read_to_string(golden_dir().join("politeness.t2.nolex.txt")).unwrap();
    assert_eq!(p.text, snap);
}

#[test]
fn snapshots() {
    let bless = std::env::var_os("STYLEKIT_BLESS").is_some();
    let style = politeness();
    let sentence = "Could you please take a look at this, you idiot?";
    let mut mismatches = Vec::new();
    for template in TemplateId::ALL {
        for variant in PromptVariant::ALL {
            let renderer = Renderer::new(template, variant, 3, WordList::bundled());
            let text = renderer.render(&style, sentence, 7, 11).unwrap().text;
            let path = golden_dir().join(format!("{template}.{variant}.txt"));
            if bless {
                fs::write(&path, &text).unwrap();
            } else if fs::read_to_string(&path).ok().as_deref() != Some(text.as_str()) {
                mismatches.push(path.display().to_string());
            }
        }
    }
    assert!(mismatches.is_empty(), "snapshot mismatch: {mismatches:?}");
}
