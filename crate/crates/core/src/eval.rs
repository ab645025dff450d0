//! Macro-F1 reports, multi-seed aggregation and ablation grids.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Display, Write as _};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold occurrences of the class.
    pub support: usize,
    /// How often the class was predicted; a single dominant class here is the
    /// usual cause of scores pinned near 33.33 on balanced binary sets.
    pub predicted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_class: IndexMap<String, ClassMetrics>,
    /// Unweighted mean of per-class F1, scaled to [0, 100].
    pub macro_f1: f64,
    pub n: usize,
    pub seed: u64,
    /// Fingerprint of the run configuration with the seed left out, so runs
    /// that differ only by seed can be aggregated.
    pub fingerprint: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, String>,
}

impl EvalReport {
    pub fn with_run(mut self, seed: u64, fingerprint: impl Into<String>) -> Self {
        self.seed = seed;
        self.fingerprint = fingerprint.into();
        self
    }

    pub fn note(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.notes.insert(key.into(), value.into());
        self
    }

    pub fn to_text(&self) -> String {
        let width = self
            .per_class
            .keys()
            .map(|c| c.chars().count())
            .max()
            .unwrap_or(5)
            .max(5);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>9}  {:>9}  {:>9}  {:>7}  {:>9}",
            "class", "precision", "recall", "f1", "support", "predicted"
        );
        for (class, m) in &self.per_class {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9.2}  {:>9.2}  {:>9.2}  {:>7}  {:>9}",
                class,
                m.precision * 100.0,
                m.recall * 100.0,
                m.f1 * 100.0,
                m.support,
                m.predicted
            );
        }
        let _ = writeln!(out, "macro-F1 {:.2} (n={})", self.macro_f1, self.n);
        out
    }
}

/// Per-class precision/recall/F1 and their unweighted mean over `classes`.
///
/// Zero denominators yield 0, so a class that is neither present nor
/// predicted still contributes F1 = 0 to the mean.
pub fn macro_f1<G, P>(classes: &[String], predictions: &[(G, P)]) -> Result<EvalReport>
where
    G: AsRef<str>,
    P: AsRef<str>,
{
    if predictions.is_empty() {
        return Err(Error::InvalidArgument(
            "macro_f1 needs at least one prediction".into(),
        ));
    }
    if classes.is_empty() {
        return Err(Error::InvalidArgument("empty class set".into()));
    }
    let index: HashMap<&str, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let lookup = |label: &str| {
        index
            .get(label)
            .copied()
            .ok_or_else(|| Error::LabelOutsideClasses(label.to_string()))
    };

    let mut tp = vec![0usize; classes.len()];
    let mut support = vec![0usize; classes.len()];
    let mut predicted = vec![0usize; classes.len()];
    for (gold, pred) in predictions {
        let g = lookup(gold.as_ref())?;
        let p = lookup(pred.as_ref())?;
        support[g] += 1;
        predicted[p] += 1;
        if g == p {
            tp[g] += 1;
        }
    }

    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let mut per_class = IndexMap::with_capacity(classes.len());
    let mut f1_sum = 0.0;
    for (i, class) in classes.iter().enumerate() {
        let precision = ratio(tp[i], predicted[i]);
        let recall = ratio(tp[i], support[i]);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        f1_sum += f1;
        per_class.insert(
            class.clone(),
            ClassMetrics {
                precision,
                recall,
                f1,
                support: support[i],
                predicted: predicted[i],
            },
        );
    }

    Ok(EvalReport {
        per_class,
        macro_f1: 100.0 * f1_sum / classes.len() as f64,
        n: predictions.len(),
        seed: 0,
        fingerprint: String::new(),
        notes: BTreeMap::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAggregate {
    pub mean: f64,
    /// Population standard deviation of the runs' macro-F1.
    pub std: f64,
    pub runs: Vec<EvalReport>,
}

impl Display for RunAggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}±{:.2}", self.mean, self.std)
    }
}

pub fn aggregate_runs(reports: Vec<EvalReport>) -> Result<RunAggregate> {
    let first = reports
        .first()
        .ok_or_else(|| Error::InvalidArgument("aggregate_runs needs at least one report".into()))?;
    if let Some(other) = reports.iter().find(|r| r.fingerprint != first.fingerprint) {
        return Err(Error::FingerprintMismatch(
            first.fingerprint.clone(),
            other.fingerprint.clone(),
        ));
    }
    let scores: Vec<f64> = reports.iter().map(|r| r.macro_f1).collect();
    let (mean, std) = mean_std(&scores);
    Ok(RunAggregate {
        mean,
        std,
        runs: reports,
    })
}

/// Mean and population standard deviation. Empty input gives NaN for both.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// A rows × columns table of scores with marginal averages and standard
/// deviations. Row marginals correspond to averaging across columns and
/// column marginals to averaging down rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridTable {
    pub title: String,
    pub row_axis: String,
    pub column_axis: String,
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    /// `cells[row][col]`; NaN marks a cell whose evaluation failed.
    pub cells: Vec<Vec<f64>>,
    #[serde(default)]
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub row_avg: Vec<f64>,
    pub row_sd: Vec<f64>,
    pub col_avg: Vec<f64>,
    pub col_sd: Vec<f64>,
}

impl GridTable {
    pub fn summary(&self) -> GridSummary {
        let mut row_avg = Vec::with_capacity(self.rows.len());
        let mut row_sd = Vec::with_capacity(self.rows.len());
        for row in &self.cells {
            let (m, s) = mean_std(row);
            row_avg.push(m);
            row_sd.push(s);
        }
        let mut col_avg = Vec::with_capacity(self.columns.len());
        let mut col_sd = Vec::with_capacity(self.columns.len());
        for j in 0..self.columns.len() {
            let column: Vec<f64> = self.cells.iter().map(|row| row[j]).collect();
            let (m, s) = mean_std(&column);
            col_avg.push(m);
            col_sd.push(s);
        }
        GridSummary {
            row_avg,
            row_sd,
            col_avg,
            col_sd,
        }
    }

    pub fn to_csv(&self) -> String {
        let summary = self.summary();
        let mut out = String::new();
        let _ = write!(out, "{}", csv_field(&self.row_axis));
        for col in &self.columns {
            let _ = write!(out, ",{}", csv_field(col));
        }
        out.push_str(",avg,sd\n");
        for (i, row) in self.rows.iter().enumerate() {
            let _ = write!(out, "{}", csv_field(row));
            for v in &self.cells[i] {
                let _ = write!(out, ",{}", fmt_score(*v));
            }
            let _ = writeln!(
                out,
                ",{},{}",
                fmt_score(summary.row_avg[i]),
                fmt_score(summary.row_sd[i])
            );
        }
        for (label, values) in [("avg", &summary.col_avg), ("sd", &summary.col_sd)] {
            out.push_str(label);
            for v in values {
                let _ = write!(out, ",{}", fmt_score(*v));
            }
            out.push_str(",,\n");
        }
        out
    }

    pub fn to_text(&self) -> String {
        let summary = self.summary();
        let label_width = self
            .rows
            .iter()
            .map(|r| r.chars().count())
            .chain([self.row_axis.chars().count(), 4])
            .max()
            .unwrap_or(4);
        let col_width = self
            .columns
            .iter()
            .map(|c| c.chars().count())
            .chain([6])
            .max()
            .unwrap_or(6);

        let mut out = String::new();
        if !self.title.is_empty() {
            let _ = writeln!(out, "{}", self.title);
        }
        let _ = write!(out, "{:<label_width$}", self.row_axis);
        for col in &self.columns {
            let _ = write!(out, "  {:>col_width$}", col);
        }
        let _ = writeln!(out, "  | {:>6}  {:>6}", "Avg.", "SD.");
        for (i, row) in self.rows.iter().enumerate() {
            let _ = write!(out, "{:<label_width$}", row);
            for v in &self.cells[i] {
                let _ = write!(out, "  {:>col_width$}", fmt_score(*v));
            }
            let _ = writeln!(
                out,
                "  | {:>6}  {:>6}",
                fmt_score(summary.row_avg[i]),
                fmt_score(summary.row_sd[i])
            );
        }
        for (label, values) in [("Avg.", &summary.col_avg), ("SD.", &summary.col_sd)] {
            let _ = write!(out, "{:<label_width$}", label);
            for v in values {
                let _ = write!(out, "  {:>col_width$}", fmt_score(*v));
            }
            out.push('\n');
        }
        if self.partial {
            out.push_str("(partial: some cells failed)\n");
        }
        out
    }
}

fn fmt_score(v: f64) -> String {
    if v.is_nan() {
        "-".to_string()
    } else {
        format!("{v:.2}")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Evaluate one score per (value, style) cell: rows are the axis values,
/// columns the styles.
///
/// All cells are attempted; if any fails the error carries the partial
/// table with failed cells set to NaN.
pub fn ablation_grid<V, F>(
    axis: &str,
    values: &[V],
    styles: &[String],
    threads: usize,
    eval: F,
) -> Result<GridTable>
where
    V: Display + Sync,
    F: Fn(&V, &str) -> Result<f64> + Sync + Send,
{
    let cells: Vec<(usize, usize)> = (0..values.len())
        .flat_map(|i| (0..styles.len()).map(move |j| (i, j)))
        .collect();
    let results = par::map_ordered(&cells, threads, |&(i, j)| eval(&values[i], &styles[j]));
    assemble_grid(
        axis,
        "style",
        values.iter().map(|v| v.to_string()).collect(),
        styles.to_vec(),
        results,
    )
}

/// Two-axis grid whose cells are the mean score over `styles`, as in a
/// template × lexicon-source table.
pub fn cross_grid<R, C, F>(
    row_axis: &str,
    rows: &[R],
    column_axis: &str,
    columns: &[C],
    styles: &[String],
    threads: usize,
    eval: F,
) -> Result<GridTable>
where
    R: Display + Sync,
    C: Display + Sync,
    F: Fn(&R, &C, &str) -> Result<f64> + Sync + Send,
{
    if styles.is_empty() {
        return Err(Error::InvalidArgument("cross grid needs at least one style".into()));
    }
    let cells: Vec<(usize, usize, usize)> = (0..rows.len())
        .flat_map(|i| {
            (0..columns.len()).flat_map(move |j| (0..styles.len()).map(move |k| (i, j, k)))
        })
        .collect();
    let per_style = par::map_ordered(&cells, threads, |&(i, j, k)| {
        eval(&rows[i], &columns[j], &styles[k])
    });
    let mut results = Vec::with_capacity(rows.len() * columns.len());
    for chunk in per_style.chunks(styles.len()) {
        let mut scores = Vec::with_capacity(styles.len());
        let mut failure = None;
        for r in chunk {
            match r {
                Ok(v) => scores.push(*v),
                Err(e) => {
                    failure.get_or_insert_with(|| e.to_string());
                }
            }
        }
        results.push(match failure {
            Some(reason) => Err(Error::InvalidArgument(reason)),
            None => Ok(mean_std(&scores).0),
        });
    }
    assemble_grid(
        row_axis,
        column_axis,
        rows.iter().map(|r| r.to_string()).collect(),
        columns.iter().map(|c| c.to_string()).collect(),
        results,
    )
}

fn assemble_grid(
    row_axis: &str,
    column_axis: &str,
    rows: Vec<String>,
    columns: Vec<String>,
    results: Vec<Result<f64>>,
) -> Result<GridTable> {
    let width = columns.len();
    let mut cells = vec![vec![f64::NAN; width]; rows.len()];
    let mut first_error = None;
    let mut failed = 0;
    for (idx, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => cells[idx / width][idx % width] = v,
            Err(e) => {
                failed += 1;
                first_error.get_or_insert_with(|| e.to_string());
            }
        }
    }
    let total = rows.len() * width;
    let mut table = GridTable {
        title: String::new(),
        row_axis: row_axis.to_string(),
        column_axis: column_axis.to_string(),
        rows,
        columns,
        cells,
        partial: false,
    };
    match first_error {
        None => Ok(table),
        Some(reason) => {
            table.partial = true;
            Err(Error::AblationAborted {
                failed,
                total,
                reason,
                partial: Box::new(table),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classes(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn hand_computed_confusion() {
        let pairs = [("A", "A"), ("A", "B"), ("B", "B"), ("B", "B")];
        let r = macro_f1(&classes(&["A", "B"]), &pairs).unwrap();
        assert!((r.per_class["A"].f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.per_class["B"].f1 - 0.8).abs() < 1e-12);
        assert!((r.macro_f1 - 100.0 * (2.0 / 3.0 + 0.8) / 2.0).abs() < 1e-9);
        assert_eq!(format!("{:.2}", r.macro_f1), "73.33");
        assert_eq!(r.n, 4);
        assert_eq!(r.per_class.values().map(|m| m.support).sum::<usize>(), 4);
    }

    #[test]
    fn perfect_and_majority() {
        let perfect = [("A", "A"), ("B", "B")];
        assert_eq!(macro_f1(&classes(&["A", "B"]), &perfect).unwrap().macro_f1, 100.0);
        let majority = [("A", "A"), ("A", "A"), ("B", "A"), ("B", "A")];
        let r = macro_f1(&classes(&["A", "B"]), &majority).unwrap();
        assert!((r.macro_f1 - 100.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn absent_class_contributes_zero() {
        let pairs = [("A", "A"), ("B", "B")];
        let r = macro_f1(&classes(&["A", "B", "C"]), &pairs).unwrap();
        assert_eq!(r.per_class["C"].f1, 0.0);
        assert!((r.macro_f1 - 200.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_foreign_labels_and_empty_input() {
        let err = macro_f1(&classes(&["A"]), &[("A", "Z")]).unwrap_err();
        assert!(matches!(err, Error::LabelOutsideClasses(l) if l == "Z"));
        let empty: [(&str, &str); 0] = [];
        assert!(macro_f1(&classes(&["A"]), &empty).is_err());
    }

    fn report(score: f64, seed: u64, fp: &str) -> EvalReport {
        EvalReport {
            per_class: IndexMap::new(),
            macro_f1: score,
            n: 1,
            seed,
            fingerprint: fp.into(),
            notes: BTreeMap::new(),
        }
    }

    #[test]
    fn aggregate_mean_std_and_display() {
        let agg = aggregate_runs(vec![report(40.0, 1, "x"), report(60.0, 2, "x")]).unwrap();
        assert_eq!(agg.mean, 50.0);
        assert_eq!(agg.std, 10.0);
        assert_eq!(agg.to_string(), "50.00±10.00");

        let same = aggregate_runs(vec![report(44.37, 1, "x"); 5]).unwrap();
        assert_eq!(same.std, 0.0);
        assert_eq!(same.to_string(), "44.37±0.00");
    }

    #[test]
    fn aggregate_rejects_mixed_configs() {
        let err = aggregate_runs(vec![report(1.0, 1, "a"), report(1.0, 2, "b")]).unwrap_err();
        assert!(matches!(err, Error::FingerprintMismatch(..)));
        assert!(aggregate_runs(vec![]).is_err());
    }

    #[test]
    fn grid_marginals() {
        let styles = classes(&["x", "y"]);
        let grid = ablation_grid("m", &[0usize, 5], &styles, 2, |m, s| {
            Ok(*m as f64 + if s == "x" { 10.0 } else { 20.0 })
        })
        .unwrap();
        assert_eq!(grid.cells, vec![vec![10.0, 20.0], vec![15.0, 25.0]]);
        let s = grid.summary();
        assert_eq!(s.row_avg, vec![15.0, 20.0]);
        assert_eq!(s.row_sd, vec![5.0, 5.0]);
        assert_eq!(s.col_avg, vec![12.5, 22.5]);
        assert_eq!(s.col_sd, vec![2.5, 2.5]);
        assert!(grid.to_csv().starts_with("m,x,y,avg,sd\n0,10.00,20.00,15.00,5.00\n"));
    }

    #[test]
    fn grid_failure_is_partial() {
        let styles = classes(&["x", "y"]);
        let err = ablation_grid("m", &[1usize], &styles, 1, |_, s| {
            if s == "y" {
                Err(Error::InvalidArgument("boom".into()))
            } else {
                Ok(1.0)
            }
        })
        .unwrap_err();
        match err {
            Error::AblationAborted {
                failed,
                total,
                partial,
                ..
            } => {
                assert_eq!((failed, total), (1, 2));
                assert!(partial.partial);
                assert_eq!(partial.cells[0][0], 1.0);
                assert!(partial.cells[0][1].is_nan());
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn cross_grid_averages_styles() {
        let styles = classes(&["a", "b"]);
        let g = cross_grid("template", &["t1", "t2"], "source", &["s1"], &styles, 1, |t, _, s| {
            Ok(match (*t, s) {
                ("t1", "a") => 10.0,
                ("t1", _) => 20.0,
                (_, "a") => 30.0,
                _ => 50.0,
            })
        })
        .unwrap();
        assert_eq!(g.cells, vec![vec![15.0], vec![40.0]]);
    }
}
