//! The `stylekit` command line.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{FewShotMode, Resources, RunConfig, ScorerKind};
use crate::corpus::{build_split, file_stem, majority_baseline};
use crate::error::{Error, Result};
use crate::eval::{ablation_grid, cross_grid, mean_std, EvalReport, GridTable};
use crate::fewshot::{lexpt_k_records, FewShotBuilder, LabelPolicy};
use crate::lexicon::LexiconSource;
use crate::par;
use crate::pipeline::classify_style;
use crate::prompting::{export_finetune_jsonl, PromptStyle, PromptVariant, Renderer, TemplateId};
use crate::scoring::{serve_until_signal, MockScript, Scorer};
use crate::seed::text_hash;

#[derive(Debug, Parser)]
#[command(name = "stylekit", version, about = "Lexicon-based prompting for style classification")]
pub struct Cli {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. Each overrides the matching key of
/// the `--config` file.
#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Dataset manifests (comma separated or repeated).
    #[arg(long, global = true, value_delimiter = ',')]
    pub datasets: Vec<PathBuf>,
    /// Lexicon files (comma separated or repeated).
    #[arg(long, global = true, value_delimiter = ',')]
    pub lexicons: Vec<PathBuf>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub source: Vec<String>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub target: Vec<String>,
    #[arg(long, global = true)]
    pub template: Option<TemplateId>,
    #[arg(long, global = true)]
    pub variant: Option<PromptVariant>,
    /// Lexicon words per class.
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// Demonstrations per few-shot prompt.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub labels: Option<LabelPolicy>,
    #[arg(long, global = true)]
    pub lexicon_source: Option<LexiconSource>,
    #[arg(long, global = true)]
    pub scorer: Option<ScorerKind>,
    #[arg(long, global = true)]
    pub endpoint: Option<String>,
    #[arg(long, global = true, env = "STYLEKIT_TOKEN", hide_env_values = true)]
    pub bearer_token: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub max_inflight: Option<usize>,
    #[arg(long, global = true)]
    pub timeout_secs: Option<u64>,
    #[arg(long, global = true)]
    pub max_chars: Option<usize>,
    /// Use at most N test examples per target style.
    #[arg(long, global = true)]
    pub limit: Option<usize>,
    #[arg(long, global = true)]
    pub length_normalize: bool,
    /// One lexicon sample per style for the whole run.
    #[arg(long, global = true)]
    pub fixed_lexicon: bool,
    #[arg(long, global = true)]
    pub redraw_demos: bool,
    #[arg(long, global = true)]
    pub resample_headers: bool,
    #[arg(long, global = true)]
    pub no_age_remap: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write one JSONL of rendered prompts per target style.
    Render,
    /// Classify target test sets and report macro-F1.
    Classify,
    /// Write the pooled, shuffled source training data as prompt/target JSONL.
    ExportFinetune,
    /// Write few-shot prompt dumps or LexPT+K records per target style.
    Fewshot {
        #[arg(long)]
        mode: Option<FewShotMode>,
    },
    /// Evaluate a grid over one or two configuration axes.
    Ablate(AblateArgs),
    /// Serve the scoring contract locally until SIGINT or SIGTERM.
    MockServer {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// JSON object mapping prompt SHA-256 hex to log-likelihoods.
        #[arg(long)]
        script: Option<PathBuf>,
    },
    /// Score the most-frequent-train-label predictor on target test sets.
    MajorityBaseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    M,
    Template,
    LexiconSource,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::M => "m",
            Axis::Template => "template",
            Axis::LexiconSource => "lexicon-source",
        })
    }
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub axis: Axis,
    /// Row values; defaults depend on the axis.
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<String>,
    /// Second axis; cells then average over target styles.
    #[arg(long)]
    pub columns_axis: Option<Axis>,
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,
    /// One grid per variant; defaults to the configured variant.
    #[arg(long, value_delimiter = ',')]
    pub variants: Vec<PromptVariant>,
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if !self.datasets.is_empty() {
            c.datasets = self.datasets.clone();
        }
        if !self.lexicons.is_empty() {
            c.lexicons = self.lexicons.clone();
        }
        if !self.source.is_empty() {
            c.source = self.source.clone();
        }
        if !self.target.is_empty() {
            c.target = self.target.clone();
        }
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    c.$field = v.clone();
                }
            )*};
        }
        set!(template, variant, m, k, labels, scorer, seed, out, max_inflight, timeout_secs);
        macro_rules! set_opt {
            ($($field:ident),*) => {$(
                if self.$field.is_some() {
                    c.$field = self.$field.clone();
                }
            )*};
        }
        set_opt!(lexicon_source, endpoint, bearer_token, max_chars, limit);
        c.length_normalize |= self.length_normalize;
        c.redraw_demos |= self.redraw_demos;
        c.resample_headers |= self.resample_headers;
        if self.fixed_lexicon {
            c.resample_per_example = false;
        }
        if self.no_age_remap {
            c.remap_age = false;
        }
        Ok(c)
    }
}

/// Parse arguments, run, and map the outcome to an exit code.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = cli.run.resolve()?;
    if let Command::MockServer { host, port, script } = &cli.command {
        let script = match script {
            Some(p) => MockScript::load(p)?,
            None => MockScript::new(),
        };
        return serve_until_signal(&format!("{host}:{port}"), script, |addr| {
            eprintln!("listening on http://{addr}");
        });
    }
    cfg.validate()?;
    let ctx = Context::new(cfg)?;
    match &cli.command {
        Command::Render => ctx.render(),
        Command::Classify => ctx.classify(),
        Command::ExportFinetune => ctx.export_finetune(),
        Command::Fewshot { mode } => ctx.fewshot(mode.unwrap_or(ctx.cfg.fewshot_mode)),
        Command::Ablate(args) => ctx.ablate(args),
        Command::MajorityBaseline => ctx.majority(),
        Command::MockServer { .. } => unreachable!(),
    }
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    fingerprint: &'a str,
    #[serde(flatten)]
    inner: T,
}

#[derive(Serialize)]
struct RenderLine<'a> {
    style: &'a str,
    example_id: &'a str,
    gold: &'a str,
    prompt: crate::prompting::RenderedPrompt,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<usize> {
    let mut w = create(path)?;
    let mut n = 0;
    for item in items {
        serde_json::to_writer(&mut w, &item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        n += 1;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(n)
}

struct Context {
    cfg: RunConfig,
    res: Resources,
    fingerprint: String,
    seedless_fingerprint: String,
}

/// Per-cell settings an ablation can vary.
#[derive(Debug, Clone, Copy)]
struct Setting {
    template: TemplateId,
    m: usize,
    source: Option<LexiconSource>,
}

#[derive(Debug, Clone, Copy)]
enum AxisValue {
    M(usize),
    Template(TemplateId),
    Source(LexiconSource),
}

impl fmt::Display for AxisValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisValue::M(m) => write!(f, "{m}"),
            AxisValue::Template(t) => write!(f, "{t}"),
            AxisValue::Source(s) => f.write_str(s.as_str()),
        }
    }
}

impl AxisValue {
    fn apply(self, mut s: Setting) -> Setting {
        match self {
            AxisValue::M(m) => s.m = m,
            AxisValue::Template(t) => s.template = t,
            AxisValue::Source(src) => s.source = Some(src),
        }
        s
    }
}

fn axis_values(axis: Axis, raw: &[String]) -> Result<Vec<AxisValue>> {
    let defaults: Vec<String> = match axis {
        Axis::M => ["0", "1", "5", "10", "30"].map(String::from).to_vec(),
        Axis::Template => TemplateId::ALL.iter().map(|t| t.to_string()).collect(),
        Axis::LexiconSource => ["nlp", "chatgpt", "dict", "human", "classname"].map(String::from).to_vec(),
    };
    let raw = if raw.is_empty() { &defaults } else { raw };
    raw.iter()
        .map(|v| {
            let v = v.trim();
            Ok(match axis {
                Axis::M => AxisValue::M(v.parse().map_err(|_| Error::Parse {
                    kind: "m",
                    value: v.to_string(),
                })?),
                Axis::Template => AxisValue::Template(v.parse()?),
                Axis::LexiconSource => AxisValue::Source(v.parse()?),
            })
        })
        .collect()
}

impl Context {
    fn new(cfg: RunConfig) -> Result<Self> {
        let res = Resources::load(&cfg)?;
        let digest = res.content_digest();
        Ok(Context {
            fingerprint: cfg.fingerprint(&digest),
            seedless_fingerprint: cfg.fingerprint_without_seed(&digest),
            cfg,
            res,
        })
    }

    fn out(&self, parts: &[&str]) -> PathBuf {
        parts.iter().fold(self.cfg.out.clone(), |p, s| p.join(s))
    }

    fn header(&self) -> String {
        format!("# fingerprint={}\n", self.fingerprint)
    }

    fn renderer_for(&self, setting: Setting, variant: PromptVariant) -> Renderer {
        let mut r = self.cfg.renderer(&self.res.words);
        r.template = setting.template;
        r.m = setting.m;
        r.variant = variant;
        r
    }

    fn base_setting(&self) -> Setting {
        Setting {
            template: self.cfg.template,
            m: self.cfg.m,
            source: self.cfg.lexicon_source,
        }
    }

    fn render(&self) -> Result<()> {
        let renderer = self.cfg.renderer(&self.res.words);
        let targets = self.res.targets(&self.cfg)?;
        let mut truncated = 0;
        for name in &targets {
            let ds = self.res.dataset(name)?;
            let style = self.res.prompt_style(name, self.cfg.variant, self.cfg.lexicon_source)?;
            let prompts = par::try_map_ordered(&ds.test, self.cfg.max_inflight, |ex| {
                let (s, l) = renderer.example_seeds(self.cfg.seed, name, &ex.id);
                renderer.render(&style, &ex.text, s, l)
            })?;
            truncated += prompts.iter().filter(|p| p.truncated).count();
            let path = self.out(&["render", &format!("{}.jsonl", file_stem(name))]);
            let n = write_jsonl(
                &path,
                ds.test.iter().zip(prompts).map(|(ex, prompt)| Stamped {
                    fingerprint: &self.fingerprint,
                    inner: RenderLine {
                        style: name,
                        example_id: &ex.id,
                        gold: &ex.label,
                        prompt,
                    },
                }),
            )?;
            eprintln!("{name}: {n} prompts -> {}", path.display());
        }
        if truncated > 0 {
            eprintln!("warning: {truncated} prompts exceeded max_chars and were truncated");
        }
        Ok(())
    }

    fn classify(&self) -> Result<()> {
        let renderer = self.cfg.renderer(&self.res.words);
        let scorer = self.cfg.build_scorer()?;
        let targets = self.res.targets(&self.cfg)?;
        let mut summary = Vec::new();
        let mut truncated = 0;
        for name in &targets {
            let ds = self.res.dataset(name)?;
            let style = self.res.prompt_style(name, self.cfg.variant, self.cfg.lexicon_source)?;
            let result = classify_style(ds, &style, &renderer, scorer.as_ref(), self.cfg.seed, self.cfg.max_inflight)?;
            truncated += result.predictions.iter().filter(|p| p.truncated).count();
            let report = result.report.with_run(self.cfg.seed, self.seedless_fingerprint.clone());
            let stem = file_stem(name);
            write_jsonl(
                &self.out(&["classify", &format!("{stem}.predictions.jsonl")]),
                result.predictions.iter().map(|p| Stamped {
                    fingerprint: &self.fingerprint,
                    inner: p,
                }),
            )?;
            let body = serde_json::to_string_pretty(&Stamped {
                fingerprint: &self.fingerprint,
                inner: &report,
            })?;
            write_text(&self.out(&["classify", &format!("{stem}.report.json")]), &(body + "\n"))?;
            summary.push((name.clone(), report));
        }
        if truncated > 0 {
            eprintln!("warning: {truncated} prompts exceeded max_chars and were truncated");
        }
        self.write_summary("classify", &summary)
    }

    fn write_summary(&self, dir: &str, rows: &[(String, EvalReport)]) -> Result<()> {
        let width = rows.iter().map(|(n, _)| n.chars().count()).chain([5]).max().unwrap_or(5);
        let mut text = self.header();
        for (name, report) in rows {
            let _ = writeln!(text, "{name:<width$}  {:>6.2}  (n={})", report.macro_f1, report.n);
        }
        let scores: Vec<f64> = rows.iter().map(|(_, r)| r.macro_f1).collect();
        let (avg, _) = mean_std(&scores);
        let _ = writeln!(text, "{:<width$}  {avg:>6.2}", "Avg.");
        write_text(&self.out(&[dir, "summary.txt"]), &text)?;
        let json: Vec<serde_json::Value> = rows
            .iter()
            .map(|(n, r)| serde_json::json!({"style": n, "macro_f1": r.macro_f1, "n": r.n}))
            .collect();
        let body = serde_json::to_string_pretty(&serde_json::json!({
            "fingerprint": self.fingerprint,
            "styles": json,
            "average": avg,
        }))?;
        write_text(&self.out(&[dir, "summary.json"]), &(body + "\n"))?;
        print!("{text}");
        Ok(())
    }

    fn export_finetune(&self) -> Result<()> {
        let sources = self.res.sources(&self.cfg)?;
        let targets: Vec<String> = self
            .res
            .datasets
            .iter()
            .map(|d| d.name.clone())
            .filter(|n| !sources.contains(n) && (self.cfg.target.is_empty() || self.cfg.target.contains(n)))
            .collect();
        let plan = build_split(&self.res.datasets, &sources, &targets, self.cfg.seed)?;
        let mut styles = HashMap::new();
        for name in &sources {
            styles.insert(
                name.clone(),
                self.res.prompt_style(name, self.cfg.variant, self.cfg.lexicon_source)?,
            );
        }
        let renderer = self.cfg.renderer(&self.res.words);
        for (file, pool) in [("train.jsonl", &plan.shuffled_source_pool), ("val.jsonl", &plan.validation_pool)] {
            let path = self.out(&["finetune", file]);
            let mut w = create(&path)?;
            let n = export_finetune_jsonl(
                pool,
                &styles,
                &renderer,
                self.cfg.seed,
                self.cfg.max_inflight,
                Some(&self.fingerprint),
                &mut w,
            )?;
            w.flush().map_err(|e| Error::io(&path, e))?;
            eprintln!("{n} records -> {}", path.display());
        }
        Ok(())
    }

    fn fewshot(&self, mode: FewShotMode) -> Result<()> {
        let targets = self.res.targets(&self.cfg)?;
        let mut builder = FewShotBuilder::new(self.cfg.k, self.cfg.labels, self.cfg.seed);
        builder.redraw_per_query = self.cfg.redraw_demos;
        builder.resample_headers = self.cfg.resample_headers;
        for name in &targets {
            let ds = self.res.dataset(name)?;
            let path = self.out(&["fewshot", &format!("{}.{mode}.jsonl", file_stem(name))]);
            let n = match mode {
                FewShotMode::Metaicl | FewShotMode::MetaiclLex => {
                    let lexicon = match mode {
                        FewShotMode::MetaiclLex => Some(self.res.lexicon(name, self.cfg.lexicon_source)?),
                        _ => None,
                    };
                    let prompts = par::try_map_ordered(&ds.test, self.cfg.max_inflight, |q| match &lexicon {
                        Some(lex) => builder.metaicl_lex(ds, lex, self.cfg.m, q),
                        None => builder.metaicl(ds, q),
                    })?;
                    write_jsonl(&path, prompts.iter().map(|p| p.record(Some(&self.fingerprint))))?
                }
                FewShotMode::LexptK => {
                    let style: PromptStyle = self.res.prompt_style(name, self.cfg.variant, self.cfg.lexicon_source)?;
                    let renderer = self.cfg.renderer(&self.res.words);
                    let records = lexpt_k_records(ds, &style, &renderer, self.cfg.k, self.cfg.labels, self.cfg.seed)?;
                    write_jsonl(
                        &path,
                        records.into_iter().map(|mut r| {
                            r.meta.fingerprint = Some(self.fingerprint.clone());
                            r
                        }),
                    )?
                }
            };
            eprintln!("{name}: {n} records -> {}", path.display());
        }
        Ok(())
    }

    fn cell(&self, setting: Setting, variant: PromptVariant, scorer: &dyn Scorer, style: &str) -> Result<f64> {
        let ds = self.res.dataset(style)?;
        let prompt_style = self.res.prompt_style(style, variant, setting.source)?;
        let renderer = self.renderer_for(setting, variant);
        Ok(classify_style(ds, &prompt_style, &renderer, scorer, self.cfg.seed, self.cfg.max_inflight)?
            .report
            .macro_f1)
    }

    fn ablate(&self, args: &AblateArgs) -> Result<()> {
        let rows = axis_values(args.axis, &args.values)?;
        let columns = match args.columns_axis {
            Some(axis) if axis == args.axis => {
                return Err(Error::InvalidArgument("row and column axes must differ".into()))
            }
            Some(axis) => Some((axis, axis_values(axis, &args.columns)?)),
            None => None,
        };
        let variants = if args.variants.is_empty() {
            vec![self.cfg.variant]
        } else {
            args.variants.clone()
        };
        let targets = self.res.targets(&self.cfg)?;
        let scorer = self.cfg.build_scorer()?;
        let base = self.base_setting();
        let grid_args = format!("{args:?}");
        let grid_fp = text_hash(&format!("{}\n{grid_args}", self.fingerprint))[..16].to_string();
        let mut failure = None;
        for variant in variants {
            let title = match &columns {
                Some((axis, _)) => format!("{variant}: {} x {axis}", args.axis),
                None => format!("{variant}: {}", args.axis),
            };
            let outcome = match &columns {
                None => ablation_grid(&args.axis.to_string(), &rows, &targets, 1, |v, style| {
                    self.cell(v.apply(base), variant, scorer.as_ref(), style)
                }),
                Some((axis, cols)) => cross_grid(
                    &args.axis.to_string(),
                    &rows,
                    &axis.to_string(),
                    cols,
                    &targets,
                    1,
                    |r, c, style| self.cell(c.apply(r.apply(base)), variant, scorer.as_ref(), style),
                ),
            };
            let (mut table, err) = match outcome {
                Ok(t) => (t, None),
                Err(Error::AblationAborted { failed, total, reason, partial }) => (
                    *partial,
                    Some(Error::InvalidArgument(format!(
                        "{failed} of {total} cells failed in {title}: {reason}"
                    ))),
                ),
                Err(e) => return Err(e),
            };
            table.title = title;
            self.write_grid(&table, &variant, args, &grid_fp)?;
            if let Some(e) = err {
                failure.get_or_insert(e);
            }
        }
        match failure {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    fn write_grid(&self, table: &GridTable, variant: &PromptVariant, args: &AblateArgs, fp: &str) -> Result<()> {
        let stem = match args.columns_axis {
            Some(c) => format!("{variant}.{}-x-{c}", args.axis),
            None => format!("{variant}.{}", args.axis),
        };
        let header = format!("# fingerprint={fp}\n");
        write_text(&self.out(&["ablate", &format!("{stem}.csv")]), &(header.clone() + &table.to_csv()))?;
        let text = header + &table.to_text();
        write_text(&self.out(&["ablate", &format!("{stem}.txt")]), &text)?;
        println!("{text}");
        Ok(())
    }

    fn majority(&self) -> Result<()> {
        let targets = self.res.targets(&self.cfg)?;
        let mut rows = Vec::new();
        for name in &targets {
            let report = majority_baseline(self.res.dataset(name)?)?
                .with_run(self.cfg.seed, self.seedless_fingerprint.clone());
            if let Some(tie) = report.notes.get("majority_tie") {
                eprintln!("warning: {name}: train label counts tie ({tie})");
            }
            let body = serde_json::to_string_pretty(&Stamped {
                fingerprint: &self.fingerprint,
                inner: &report,
            })?;
            write_text(&self.out(&["majority", &format!("{}.json", file_stem(name))]), &(body + "\n"))?;
            rows.push((name.clone(), report));
        }
        self.write_summary("majority", &rows)
    }
}
