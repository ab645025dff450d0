//! Style datasets: loading, the Age remapping, source/target split
//! construction and the majority-label baseline.
//!
//! A dataset is described by a TOML manifest next to its record files:
//!
//! ```toml
//! name = "politeness"
//! classes = ["polite", "impolite"]
//! balanced = true
//! # format = "jsonl"   # or "tsv"; inferred from each file's extension otherwise
//!
//! [splits]
//! train = "politeness.train.jsonl"
//! val = "politeness.val.jsonl"
//! test = "politeness.test.jsonl"
//! ```

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{self, EvalReport};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub text: String,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordFormat {
    Jsonl,
    Tsv,
}

impl RecordFormat {
    fn from_extension(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "jsonl" | "json" => Some(RecordFormat::Jsonl),
            "tsv" | "tab" => Some(RecordFormat::Tsv),
            _ => None,
        }
    }
}

impl FromStr for RecordFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(RecordFormat::Jsonl),
            "tsv" => Ok(RecordFormat::Tsv),
            other => Err(Error::Parse {
                kind: "record format",
                value: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StyleDataset {
    pub name: String,
    /// Declaration order from the manifest; used for every tie-break.
    pub classes: Vec<String>,
    pub train: Vec<Example>,
    pub val: Vec<Example>,
    pub test: Vec<Example>,
    pub balanced: bool,
}

#[derive(Debug, Deserialize, Serialize)]
struct Manifest {
    name: String,
    classes: Vec<String>,
    #[serde(default)]
    balanced: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    format: Option<RecordFormat>,
    splits: BTreeMap<Split, PathBuf>,
}

#[derive(Deserialize)]
struct JsonRecord {
    text: String,
    label: String,
    #[serde(default)]
    id: Option<String>,
}

#[derive(Serialize)]
struct JsonRecordOut<'a> {
    id: &'a str,
    text: &'a str,
    label: &'a str,
}

impl StyleDataset {
    /// Load a dataset from its manifest. Split files are resolved relative to
    /// the manifest's directory.
    pub fn load(manifest_path: impl AsRef<Path>) -> Result<Self> {
        let manifest_path = manifest_path.as_ref();
        let raw = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
        let manifest: Manifest = toml::from_str(&raw).map_err(|e| Error::Manifest {
            path: manifest_path.to_path_buf(),
            reason: e.to_string(),
        })?;
        validate_classes(&manifest.name, &manifest.classes).map_err(|reason| Error::Manifest {
            path: manifest_path.to_path_buf(),
            reason,
        })?;
        let base = manifest_path.parent().unwrap_or(Path::new("."));

        let mut ds = StyleDataset {
            name: manifest.name,
            classes: manifest.classes,
            train: Vec::new(),
            val: Vec::new(),
            test: Vec::new(),
            balanced: manifest.balanced,
        };
        for (split, rel) in &manifest.splits {
            let path = base.join(rel);
            let format = match manifest.format {
                Some(f) => f,
                None => RecordFormat::from_extension(&path).ok_or_else(|| Error::Manifest {
                    path: manifest_path.to_path_buf(),
                    reason: format!("cannot infer record format of {}", path.display()),
                })?,
            };
            let records = read_records(&path, format, *split, &ds.classes)?;
            if records.is_empty() {
                return Err(Error::EmptySplit {
                    dataset: ds.name.clone(),
                    split: split.to_string(),
                });
            }
            *ds.split_mut(*split) = records;
        }
        ds.validate()?;
        Ok(ds)
    }

    /// Write the dataset as a manifest plus one JSONL file per non-empty
    /// split into `dir`. Returns the manifest path.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let stem = file_stem(&self.name);
        let mut splits = BTreeMap::new();
        for split in Split::ALL {
            let examples = self.split(split);
            if examples.is_empty() {
                continue;
            }
            let file = format!("{stem}.{split}.jsonl");
            let mut body = String::new();
            for ex in examples {
                body.push_str(&serde_json::to_string(&JsonRecordOut {
                    id: &ex.id,
                    text: &ex.text,
                    label: &ex.label,
                })?);
                body.push('\n');
            }
            let path = dir.join(&file);
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            splits.insert(split, PathBuf::from(file));
        }
        let manifest = Manifest {
            name: self.name.clone(),
            classes: self.classes.clone(),
            balanced: self.balanced,
            format: Some(RecordFormat::Jsonl),
            splits,
        };
        let path = dir.join(format!("{stem}.toml"));
        let text = toml::to_string(&manifest).map_err(|e| Error::Manifest {
            path: path.clone(),
            reason: e.to_string(),
        })?;
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn split(&self, split: Split) -> &[Example] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    fn split_mut(&mut self, split: Split) -> &mut Vec<Example> {
        match split {
            Split::Train => &mut self.train,
            Split::Val => &mut self.val,
            Split::Test => &mut self.test,
        }
    }

    /// Check labels, non-empty text and id uniqueness across splits.
    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: String| Error::InvalidDataset {
            dataset: self.name.clone(),
            reason,
        };
        validate_classes(&self.name, &self.classes).map_err(invalid)?;
        let classes: HashSet<&str> = self.classes.iter().map(String::as_str).collect();
        let mut ids = HashSet::new();
        for split in Split::ALL {
            for ex in self.split(split) {
                if !classes.contains(ex.label.as_str()) {
                    return Err(invalid(format!(
                        "example {:?} has undeclared label {:?}",
                        ex.id, ex.label
                    )));
                }
                if ex.text.trim().is_empty() {
                    return Err(invalid(format!("example {:?} has empty text", ex.id)));
                }
                if !ids.insert(ex.id.as_str()) {
                    return Err(invalid(format!("duplicate example id {:?}", ex.id)));
                }
            }
        }
        Ok(())
    }

    /// Label counts over a split, in class declaration order.
    pub fn label_counts(&self, split: Split) -> Vec<(String, usize)> {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for ex in self.split(split) {
            *counts.entry(ex.label.as_str()).or_default() += 1;
        }
        self.classes
            .iter()
            .map(|c| (c.clone(), counts.get(c.as_str()).copied().unwrap_or(0)))
            .collect()
    }
}

fn validate_classes(name: &str, classes: &[String]) -> std::result::Result<(), String> {
    if name.trim().is_empty() {
        return Err("dataset name is empty".into());
    }
    if classes.is_empty() {
        return Err("no classes declared".into());
    }
    let mut seen = HashSet::new();
    for c in classes {
        if c.trim().is_empty() {
            return Err("empty class name".into());
        }
        if !seen.insert(c.as_str()) {
            return Err(format!("class {c:?} declared twice"));
        }
    }
    Ok(())
}

pub(crate) fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Parse one split file. Ids default to `"{split}:{line}"` (1-based).
pub fn read_records(
    path: &Path,
    format: RecordFormat,
    split: Split,
    classes: &[String],
) -> Result<Vec<Example>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in raw.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| Error::MalformedRecord {
            path: path.to_path_buf(),
            line: line_no,
            reason,
        };
        let (id, text, label) = match format {
            RecordFormat::Jsonl => {
                let rec: JsonRecord =
                    serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
                (rec.id, rec.text, rec.label)
            }
            RecordFormat::Tsv => {
                let fields: Vec<&str> = line.split('\t').collect();
                if fields.len() != 2 {
                    return Err(malformed(format!(
                        "expected 2 tab-separated columns, found {}",
                        fields.len()
                    )));
                }
                (None, fields[0].to_string(), fields[1].to_string())
            }
        };
        if text.trim().is_empty() {
            return Err(malformed("text is empty".into()));
        }
        if !classes.iter().any(|c| c == &label) {
            return Err(Error::UnknownLabel {
                path: path.to_path_buf(),
                line: line_no,
                label,
                classes: classes.to_vec(),
            });
        }
        out.push(Example {
            id: id.unwrap_or_else(|| format!("{split}:{line_no}")),
            text,
            label,
        });
    }
    Ok(out)
}

pub const AGE_CLASSES: [&str; 8] = [
    "Under12",
    "12-17",
    "18-24",
    "25-34",
    "35-44",
    "45-54",
    "55-74",
    "75YearsOrOlder",
];

/// Target of an original age class under the binary remapping, `None` for
/// the two excluded middle bands.
pub fn age_target(class: &str) -> Option<&'static str> {
    let lower = class.to_ascii_lowercase();
    match lower.as_str() {
        "under12" | "12-17" | "18-24" => Some("youthful"),
        "45-54" | "55-74" | "75yearsorolder" => Some("mature"),
        _ => None,
    }
}

/// Collapse the eight-class Age dataset into `youthful` / `mature`.
/// Examples labeled 25-34 or 35-44 are dropped; text and ids are kept.
pub fn remap_age(dataset: &StyleDataset) -> Result<StyleDataset> {
    let present: HashSet<String> = dataset
        .classes
        .iter()
        .map(|c| c.to_ascii_lowercase())
        .collect();
    let missing: Vec<String> = AGE_CLASSES
        .iter()
        .filter(|c| !present.contains(&c.to_ascii_lowercase()))
        .map(|c| c.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingAgeClasses { missing });
    }
    let remap = |examples: &[Example]| -> Vec<Example> {
        examples
            .iter()
            .filter_map(|ex| {
                age_target(&ex.label).map(|target| Example {
                    id: ex.id.clone(),
                    text: ex.text.clone(),
                    label: target.to_string(),
                })
            })
            .collect()
    };
    Ok(StyleDataset {
        name: dataset.name.clone(),
        classes: vec!["youthful".into(), "mature".into()],
        train: remap(&dataset.train),
        val: remap(&dataset.val),
        test: remap(&dataset.test),
        balanced: false,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub dataset: String,
    pub example: Example,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub source_styles: Vec<String>,
    pub target_styles: Vec<String>,
    /// All source train examples, pooled and shuffled.
    pub shuffled_source_pool: Vec<PoolEntry>,
    /// All source validation examples, pooled and shuffled.
    pub validation_pool: Vec<PoolEntry>,
    pub seed: u64,
}

/// Pool and shuffle the source styles' train and validation sets.
///
/// Pools are assembled in sorted style order before shuffling, so the result
/// does not depend on the order of `datasets`. Target test sets are checked
/// for exact-text overlap with the source pools.
pub fn build_split(
    datasets: &[StyleDataset],
    source: &[String],
    target: &[String],
    seed: u64,
) -> Result<SplitPlan> {
    let by_name: HashMap<&str, &StyleDataset> =
        datasets.iter().map(|d| (d.name.as_str(), d)).collect();
    let targets: HashSet<&str> = target.iter().map(String::as_str).collect();
    let mut overlap: Vec<String> = source
        .iter()
        .filter(|s| targets.contains(s.as_str()))
        .cloned()
        .collect();
    if !overlap.is_empty() {
        overlap.sort();
        overlap.dedup();
        return Err(Error::OverlappingStyles(overlap));
    }
    for name in source.iter().chain(target) {
        if !by_name.contains_key(name.as_str()) {
            return Err(Error::UnknownStyle(name.clone()));
        }
    }

    let mut sorted_sources: Vec<&str> = source.iter().map(String::as_str).collect();
    sorted_sources.sort_unstable();
    sorted_sources.dedup();

    let pool_of = |split: Split| -> Vec<PoolEntry> {
        sorted_sources
            .iter()
            .flat_map(|name| {
                by_name[name].split(split).iter().map(move |ex| PoolEntry {
                    dataset: name.to_string(),
                    example: ex.clone(),
                })
            })
            .collect()
    };
    let mut train_pool = pool_of(Split::Train);
    let mut val_pool = pool_of(Split::Val);

    let mut source_texts: HashMap<&str, &str> = HashMap::new();
    for entry in train_pool.iter().chain(&val_pool) {
        source_texts
            .entry(entry.example.text.as_str())
            .or_insert(entry.dataset.as_str());
    }
    for name in target {
        for ex in by_name[name.as_str()].split(Split::Test) {
            if let Some(src) = source_texts.get(ex.text.as_str()) {
                return Err(Error::SharedExample {
                    target: name.clone(),
                    id: ex.id.clone(),
                    source_style: src.to_string(),
                });
            }
        }
    }

    train_pool.shuffle(&mut seed::rng(seed::stable_hash(seed, &["split", "train"])));
    val_pool.shuffle(&mut seed::rng(seed::stable_hash(seed, &["split", "val"])));

    Ok(SplitPlan {
        source_styles: source.to_vec(),
        target_styles: target.to_vec(),
        shuffled_source_pool: train_pool,
        validation_pool: val_pool,
        seed,
    })
}

/// Predict the most frequent train label for every test example.
/// Count ties go to the earliest declared class and are recorded in the
/// report notes.
pub fn majority_baseline(dataset: &StyleDataset) -> Result<EvalReport> {
    if dataset.train.is_empty() {
        return Err(Error::EmptySplit {
            dataset: dataset.name.clone(),
            split: Split::Train.to_string(),
        });
    }
    if dataset.test.is_empty() {
        return Err(Error::EmptySplit {
            dataset: dataset.name.clone(),
            split: Split::Test.to_string(),
        });
    }
    let counts = dataset.label_counts(Split::Train);
    let best = counts.iter().map(|(_, n)| *n).max().unwrap_or(0);
    let tied: Vec<&str> = counts
        .iter()
        .filter(|(_, n)| *n == best)
        .map(|(c, _)| c.as_str())
        .collect();
    let majority = tied[0].to_string();

    let pairs: Vec<(&str, &str)> = dataset
        .test
        .iter()
        .map(|ex| (ex.label.as_str(), majority.as_str()))
        .collect();
    let mut report = eval::macro_f1(&dataset.classes, &pairs)?.note("majority_class", &majority);
    if tied.len() > 1 {
        report = report.note("majority_tie", tied.join(","));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(id: &str, text: &str, label: &str) -> Example {
        Example {
            id: id.into(),
            text: text.into(),
            label: label.into(),
        }
    }

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn loads_three_line_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "p.jsonl",
            "{\"text\":\"Could you please help?\",\"label\":\"polite\"}\n\
             {\"text\":\"Do it now.\",\"label\":\"impolite\",\"id\":\"x7\"}\n\
             {\"text\":\"Thanks so much!\",\"label\":\"polite\"}\n",
        );
        let m = write(
            dir.path(),
            "p.toml",
            "name = \"politeness\"\nclasses = [\"polite\", \"impolite\"]\n[splits]\ntrain = \"p.jsonl\"\n",
        );
        let ds = StyleDataset::load(&m).unwrap();
        assert_eq!(ds.classes.len(), 2);
        assert_eq!(ds.train.len(), 3);
        assert_eq!(ds.train[0].id, "train:1");
        assert_eq!(ds.train[1].id, "x7");
        assert!(ds.test.is_empty());
    }

    #[test]
    fn unknown_label_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "p.jsonl",
            "{\"text\":\"a\",\"label\":\"polite\"}\n{\"text\":\"b\",\"label\":\"neutral\"}\n",
        );
        let m = write(
            dir.path(),
            "p.toml",
            "name = \"p\"\nclasses = [\"polite\", \"impolite\"]\n[splits]\ntrain = \"p.jsonl\"\n",
        );
        let err = StyleDataset::load(&m).unwrap_err();
        match &err {
            Error::UnknownLabel { line, label, .. } => {
                assert_eq!(*line, 2);
                assert_eq!(label, "neutral");
            }
            other => panic!("unexpected {other}"),
        }
        assert!(err.to_string().contains(":2:"));
    }

    #[test]
    fn malformed_and_empty_inputs() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "bad.jsonl", "{\"text\":\"a\",\"label\":\"x\"}\n{not json\n");
        let classes = vec!["x".to_string()];
        let err = read_records(&dir.path().join("bad.jsonl"), RecordFormat::Jsonl, Split::Train, &classes)
            .unwrap_err();
        assert!(matches!(err, Error::MalformedRecord { line: 2, .. }));

        write(dir.path(), "blank.tsv", "   \tx\n");
        let err = read_records(&dir.path().join("blank.tsv"), RecordFormat::Tsv, Split::Test, &classes)
            .unwrap_err();
        assert!(matches!(err, Error::MalformedRecord { line: 1, .. }));

        write(dir.path(), "empty.jsonl", "\n");
        let m = write(
            dir.path(),
            "e.toml",
            "name = \"e\"\nclasses = [\"x\"]\n[splits]\ntest = \"empty.jsonl\"\n",
        );
        assert!(matches!(StyleDataset::load(&m), Err(Error::EmptySplit { .. })));
    }

    #[test]
    fn tsv_two_columns() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "f.tsv", "hello there\tformal\nsup\tinformal\n");
        let classes = vec!["formal".to_string(), "informal".to_string()];
        let rows = read_records(&dir.path().join("f.tsv"), RecordFormat::Tsv, Split::Val, &classes).unwrap();
        assert_eq!(rows[1], ex("val:2", "sup", "informal"));
        write(dir.path(), "g.tsv", "a\tb\tformal\n");
        assert!(read_records(&dir.path().join("g.tsv"), RecordFormat::Tsv, Split::Val, &classes).is_err());
    }

    #[test]
    fn politeness_sized_dataset_round_trips() {
        let classes = vec!["polite".to_string(), "impolite".to_string()];
        let make = |split: &str, n: usize| -> Vec<Example> {
            (0..n)
                .map(|i| ex(&format!("{split}-{i}"), &format!("{split} sentence {i}"), &classes[i % 2]))
                .collect()
        };
        let ds = StyleDataset {
            name: "Politeness".into(),
            classes: classes.clone(),
            train: make("train", 10_000),
            val: make("val", 500),
            test: make("test", 600),
            balanced: true,
        };
        let dir = tempfile::tempdir().unwrap();
        let manifest = ds.save(dir.path()).unwrap();
        let loaded = StyleDataset::load(manifest).unwrap();
        assert_eq!((loaded.train.len(), loaded.val.len(), loaded.test.len()), (10_000, 500, 600));
        assert_eq!(loaded, ds);
    }

    fn age_dataset() -> StyleDataset {
        let classes: Vec<String> = AGE_CLASSES.iter().map(|s| s.to_string()).collect();
        let train = AGE_CLASSES
            .iter()
            .enumerate()
            .map(|(i, c)| ex(&format!("a{i}"), &format!("text {i}"), c))
            .collect();
        StyleDataset {
            name: "Age".into(),
            classes,
            train,
            val: vec![],
            test: vec![],
            balanced: false,
        }
    }

    #[test]
    fn age_remapping() {
        let remapped = remap_age(&age_dataset()).unwrap();
        assert_eq!(remapped.classes, vec!["youthful", "mature"]);
        assert_eq!(remapped.train.len(), 6);
        let teen = remapped.train.iter().find(|e| e.id == "a1").unwrap();
        assert_eq!(teen.label, "youthful");
        assert_eq!(teen.text, "text 1");
        assert!(remapped.train.iter().all(|e| e.id != "a3" && e.id != "a4"));
        assert_eq!(remapped.train.iter().find(|e| e.id == "a7").unwrap().label, "mature");
    }

    #[test]
    fn age_remapping_of_empty_and_incomplete() {
        let mut empty = age_dataset();
        empty.train.clear();
        let r = remap_age(&empty).unwrap();
        assert!(r.train.is_empty());
        assert_eq!(r.classes, vec!["youthful", "mature"]);

        let mut partial = age_dataset();
        partial.classes.retain(|c| c != "55-74");
        match remap_age(&partial).unwrap_err() {
            Error::MissingAgeClasses { missing } => assert_eq!(missing, vec!["55-74"]),
            other => panic!("unexpected {other}"),
        }
    }

    fn tiny(name: &str, n: usize) -> StyleDataset {
        let classes = vec![format!("{name}-a"), format!("{name}-b")];
        let mk = |split: &str| -> Vec<Example> {
            (0..n)
                .map(|i| ex(&format!("{split}:{i}"), &format!("{name} {split} {i}"), &classes[i % 2]))
                .collect()
        };
        StyleDataset {
            name: name.into(),
            classes: classes.clone(),
            train: mk("train"),
            val: mk("val"),
            test: mk("test"),
            balanced: true,
        }
    }

    fn names(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn main_split_plan() {
        let all = [
            "Sentiment", "Formality", "Politeness", "Hate/Offense", "Readability", "Politics",
            "Subjectivity", "Shakespeare", "Romance", "Humor", "Country", "Sarcasm", "Age",
        ];
        let datasets: Vec<StyleDataset> = all.iter().map(|n| tiny(n, 4)).collect();
        let plan = build_split(&datasets, &names(&all[..7]), &names(&all[7..]), 1).unwrap();
        assert_eq!(plan.target_styles.len(), 6);
        assert_eq!(plan.shuffled_source_pool.len(), 28);
        assert_eq!(plan.validation_pool.len(), 28);
        assert!(plan.shuffled_source_pool.iter().all(|e| all[..7].contains(&e.dataset.as_str())));
    }

    #[test]
    fn split_rejects_overlap_and_unknown() {
        let datasets = vec![tiny("A", 2), tiny("B", 2)];
        assert!(matches!(
            build_split(&datasets, &names(&["A"]), &names(&["A"]), 0),
            Err(Error::OverlappingStyles(_))
        ));
        assert!(matches!(
            build_split(&datasets, &names(&["A"]), &names(&["Z"]), 0),
            Err(Error::UnknownStyle(s)) if s == "Z"
        ));
    }

    #[test]
    fn split_detects_shared_text() {
        let a = tiny("A", 2);
        let mut b = tiny("B", 2);
        b.test[0].text = a.train[1].text.clone();
        assert!(matches!(
            build_split(&[a, b], &names(&["A"]), &names(&["B"]), 0),
            Err(Error::SharedExample { .. })
        ));
    }

    #[test]
    fn split_is_deterministic_and_order_invariant() {
        let datasets = vec![tiny("A", 10), tiny("B", 7), tiny("C", 5)];
        let p1 = build_split(&datasets, &names(&["A", "B"]), &names(&["C"]), 5).unwrap();
        let p2 = build_split(&datasets, &names(&["A", "B"]), &names(&["C"]), 5).unwrap();
        assert_eq!(
            serde_json::to_vec(&p1).unwrap(),
            serde_json::to_vec(&p2).unwrap()
        );
        let reversed: Vec<StyleDataset> = datasets.iter().rev().cloned().collect();
        let p3 = build_split(&reversed, &names(&["A", "B"]), &names(&["C"]), 5).unwrap();
        assert_eq!(p1, p3);
        let p4 = build_split(&datasets, &names(&["A", "B"]), &names(&["C"]), 6).unwrap();
        assert_ne!(p1.shuffled_source_pool, p4.shuffled_source_pool);
    }

    #[test]
    fn majority_on_balanced_binary() {
        let mut ds = tiny("S", 10);
        ds.train.push(ex("extra", "extra", "S-b"));
        let r = majority_baseline(&ds).unwrap();
        assert!((r.macro_f1 - 100.0 / 3.0).abs() < 1e-9);
        assert_eq!(r.notes["majority_class"], "S-b");
        assert!(!r.notes.contains_key("majority_tie"));
    }

    #[test]
    fn majority_tie_goes_to_first_declared() {
        let ds = tiny("S", 10);
        let r = majority_baseline(&ds).unwrap();
        assert_eq!(r.notes["majority_class"], "S-a");
        assert_eq!(r.notes["majority_tie"], "S-a,S-b");
    }

    #[test]
    fn majority_when_test_is_all_majority() {
        let mut ds = tiny("S", 10);
        for e in &mut ds.test {
            e.label = "S-a".into();
        }
        let r = majority_baseline(&ds).unwrap();
        assert!((r.macro_f1 - 50.0).abs() < 1e-12);
    }

    #[test]
    fn majority_needs_train() {
        let mut ds = tiny("S", 2);
        ds.train.clear();
        assert!(matches!(majority_baseline(&ds), Err(Error::EmptySplit { .. })));
    }
}
