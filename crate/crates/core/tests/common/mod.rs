#![allow(dead_code)]

use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use stylekit::corpus::{Example, StyleDataset};
use stylekit::lexicon::{Lexicon, LexiconSource};

const FILLER: [&str; 8] = ["the", "report", "arrived", "late", "again", "today", "we", "noted"];

/// A style whose every sentence carries one or two entries of its class's
/// lexicon and none of any other class. Entries are unique per style.
pub fn separable_style(name: &str, classes: &[&str], train_per_class: usize, test_per_class: usize) -> (StyleDataset, Lexicon) {
    let classes: Vec<String> = classes.iter().map(|c| c.to_string()).collect();
    let words = |ci: usize| -> Vec<String> { (0..4).map(|j| format!("{name}q{ci}z{j}")).collect() };
    let sentence = |ci: usize, i: usize| -> String {
        let w = words(ci);
        let mut parts: Vec<String> = FILLER.iter().cycle().skip(i % 8).take(3 + i % 4).map(|s| s.to_string()).collect();
        parts.insert(i % parts.len(), w[i % 4].clone());
        if i.is_multiple_of(3) {
            parts.push(w[(i + 1) % 4].clone());
        }
        format!("{} ({name} {i}).", parts.join(" "))
    };
    let split = |tag: &str, per: usize, offset: usize| -> Vec<Example> {
        (0..per)
            .flat_map(|i| {
                classes.iter().enumerate().map(move |(ci, c)| (i, ci, c.clone()))
            })
            .map(|(i, ci, c)| Example {
                id: format!("{tag}:{ci}:{i}"),
                text: sentence(ci, offset + i),
                label: c,
            })
            .collect()
    };
    let ds = StyleDataset {
        name: name.to_string(),
        classes: classes.clone(),
        train: split("train", train_per_class, 0),
        val: split("val", 2, 1000),
        test: split("test", test_per_class, 2000),
        balanced: true,
    };
    let entries: IndexMap<String, Vec<String>> =
        classes.iter().enumerate().map(|(ci, c)| (c.clone(), words(ci))).collect();
    let lex = Lexicon::new(name, LexiconSource::Human, entries).unwrap();
    (ds, lex)
}

pub struct World {
    pub datasets: Vec<PathBuf>,
    pub lexicons: Vec<PathBuf>,
}

pub fn write_world(dir: &Path, styles: &[(StyleDataset, Lexicon)]) -> World {
    let mut datasets = Vec::new();
    let mut lexicons = Vec::new();
    for (ds, lex) in styles {
        datasets.push(ds.save(dir.join("data")).unwrap());
        std::fs::create_dir_all(dir.join("lex")).unwrap();
        let p = dir.join("lex").join(format!("{}.human.json", ds.name));
        lex.save(&p).unwrap();
        lexicons.push(p);
    }
    World { datasets, lexicons }
}

pub fn standard_world(dir: &Path) -> World {
    write_world(
        dir,
        &[
            separable_style("alpha", &["formal", "informal"], 8, 6),
            separable_style("beta", &["positive", "negative", "neutral"], 8, 5),
            separable_style("gamma", &["sarcastic", "literal"], 8, 4),
        ],
    )
}

/// Macro-F1 × 100 from an explicit confusion matrix.
pub fn brute_macro_f1(classes: &[String], pairs: &[(String, String)]) -> f64 {
    let k = classes.len();
    let idx = |c: &str| classes.iter().position(|x| x == c).unwrap();
    let mut cm = vec![vec![0u64; k]; k];
    for (g, p) in pairs {
        cm[idx(g)][idx(p)] += 1;
    }
    let mut total = 0.0;
    #[allow(clippy::needless_range_loop)]
    for c in 0..k {
        let tp = cm[c][c] as f64;
        let predicted: u64 = (0..k).map(|r| cm[r][c]).sum();
        let actual: u64 = cm[c].iter().sum();
        let p = if predicted == 0 { 0.0 } else { tp / predicted as f64 };
        let r = if actual == 0 { 0.0 } else { tp / actual as f64 };
        total += if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    }
    100.0 * total / k as f64
}
