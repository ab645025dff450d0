mod common;

use std::collections::HashSet;
use std::sync::OnceLock;

use indexmap::IndexMap;
use proptest::prelude::*;
use stylekit::eval::macro_f1;
use stylekit::lexicon::{sample_words, Lexicon, LexiconSource};
use stylekit::prompting::{parse, fill, randomize_class_names, Layout, Randomization, WordList};
use stylekit::scoring::{argmax, overlap_score, OverlapScorer, ScoreRequest, Scorer};

fn bundled_set() -> &'static HashSet<String> {
    static SET: OnceLock<HashSet<String>> = OnceLock::new();
    SET.get_or_init(|| WordList::bundled().words().iter().cloned().collect())
}

fn class_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("class{i}")).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn name_maps_are_bijections(n in 1usize..4, seed in any::<u64>(), policy in 0usize..4) {
        let policy = [Randomization::None, Randomization::Indices, Randomization::WordsSmall, Randomization::WordsLarge][policy];
        let words = WordList::bundled();
        let classes = class_names(n);
        let map = randomize_class_names(&classes, policy, &words, seed).unwrap();
        let rendered: HashSet<String> = map.rendered_names().into_iter().collect();
        prop_assert_eq!(rendered.len(), n);
        for (r, c) in map.iter() {
            prop_assert_eq!(map.rendered_for(c), Some(r));
            match policy {
                Randomization::None => prop_assert_eq!(r, c),
                Randomization::WordsLarge => prop_assert!(bundled_set().contains(r)),
                _ => prop_assert!(words.vocabulary(policy).contains(&r)),
            }
        }
        let targets: HashSet<&str> = map.iter().map(|(_, c)| c).collect();
        prop_assert_eq!(targets.len(), n);
    }

    #[test]
    fn samples_are_distinct_subsets(len in 1usize..40, m in 0usize..50, seed in any::<u64>()) {
        let words: Vec<String> = (0..len).map(|i| format!("w{i}")).collect();
        let mut entries = IndexMap::new();
        entries.insert("c".to_string(), words.clone());
        let lex = Lexicon::new("s", LexiconSource::Dict, entries).unwrap();
        let s = sample_words(&lex, "c", m, seed).unwrap();
        prop_assert_eq!(s.words.len(), m.min(len));
        let set: HashSet<&String> = s.words.iter().collect();
        prop_assert_eq!(set.len(), s.words.len());
        prop_assert!(s.words.iter().all(|w| words.contains(w)));
        prop_assert_eq!(sample_words(&lex, "c", m, seed).unwrap(), s);
    }

    #[test]
    fn argmax_survives_monotone_transforms(
        scores in prop::collection::vec(-50.0f64..0.0, 1..6),
        shift in -100.0f64..100.0,
        scale in 0.01f64..10.0,
    ) {
        let base = argmax(&scores);
        let shifted: Vec<f64> = scores.iter().map(|s| s + shift).collect();
        let scaled: Vec<f64> = scores.iter().map(|s| s * scale).collect();
        let exp: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
        prop_assert_eq!(argmax(&shifted), base);
        prop_assert_eq!(argmax(&scaled), base);
        prop_assert_eq!(argmax(&exp), base);
    }

    #[test]
    fn templates_round_trip(sentence in "[a-zA-Z0-9 ,.!?'\"]{1,60}", layout in 0usize..5) {
        let layout = Layout::ALL[layout];
        let names = class_names(3);
        let words = vec!["a, b".to_string(), "c".to_string(), "d e, f".to_string()];
        let text = fill(layout, &names, &words, &sentence);
        let parsed = parse(&text, &names).unwrap();
        prop_assert_eq!(parsed.sentence, sentence);
        prop_assert_eq!(parsed.words, words);
    }

    #[test]
    fn overlap_is_permutation_equivariant(seed in any::<u64>(), hits in prop::collection::vec(0usize..3, 3)) {
        let lex: Vec<Vec<String>> = (0..3).map(|c| (0..3).map(|j| format!("k{c}x{j}")).collect()).collect();
        let mut sentence = String::from("start");
        for (c, h) in hits.iter().enumerate() {
            for j in 0..*h {
                sentence.push_str(&format!(" k{c}x{j}"));
            }
        }
        let names = class_names(3);
        let slots: Vec<String> = lex.iter().map(|l| l.join(", ")).collect();
        let text = fill(Layout::Instructed(stylekit::prompting::TemplateId::T2), &names, &slots, &sentence);
        let scores = OverlapScorer.score(&ScoreRequest::new(text, names.clone())).unwrap().log_likelihoods;
        for c in 0..3 {
            prop_assert!((scores[c] - overlap_score(&sentence, &lex[c])).abs() < 1e-15);
            prop_assert!((scores[c] - (hits[c] as f64).ln_1p()).abs() < 1e-12);
        }
        let mut order: Vec<usize> = (0..3).collect();
        let r = (seed % 6) as usize;
        order.rotate_left(r % 3);
        if r >= 3 { order.swap(0, 1); }
        let pnames: Vec<String> = order.iter().map(|&i| names[i].clone()).collect();
        let pslots: Vec<String> = order.iter().map(|&i| slots[i].clone()).collect();
        let ptext = fill(Layout::Instructed(stylekit::prompting::TemplateId::T2), &pnames, &pslots, &sentence);
        let pscores = OverlapScorer.score(&ScoreRequest::new(ptext, pnames)).unwrap().log_likelihoods;
        for (k, &i) in order.iter().enumerate() {
            prop_assert_eq!(pscores[k], scores[i]);
        }
    }

    #[test]
    fn macro_f1_matches_confusion_matrix(
        k in 1usize..4,
        raw in prop::collection::vec((0usize..3, 0usize..3), 1..21),
    ) {
        let classes = class_names(k);
        let pairs: Vec<(String, String)> = raw.iter().map(|(g, p)| (classes[g % k].clone(), classes[p % k].clone())).collect();
        let got = macro_f1(&classes, &pairs).unwrap().macro_f1;
        let want = common::brute_macro_f1(&classes, &pairs);
        prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
    }

    #[test]
    fn macro_f1_is_order_and_relabel_invariant(
        raw in prop::collection::vec((0usize..3, 0usize..3), 1..21),
        rot in 0usize..3,
    ) {
        let classes = class_names(3);
        let pairs: Vec<(String, String)> = raw.iter().map(|(g, p)| (classes[*g].clone(), classes[*p].clone())).collect();
        let base = macro_f1(&classes, &pairs).unwrap().macro_f1;
        let mut rev = pairs.clone();
        rev.reverse();
        prop_assert!((macro_f1(&classes, &rev).unwrap().macro_f1 - base).abs() < 1e-9);
        let relabel = |c: &String| format!("other{}", (classes.iter().position(|x| x == c).unwrap() + rot) % 3);
        let renamed: Vec<String> = (0..3).map(|i| format!("other{i}")).collect();
        let mapped: Vec<(String, String)> = pairs.iter().map(|(g, p)| (relabel(g), relabel(p))).collect();
        prop_assert!((macro_f1(&renamed, &mapped).unwrap().macro_f1 - base).abs() < 1e-9);
    }
}
