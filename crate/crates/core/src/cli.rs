//! The `wheacha` command line. The binary only forwards its arguments to
//! [`run`].
//!
//! Exit codes: 0 when no error was emitted, 1 when some program failed,
//! 2 for bad usage, configuration or I/O, 3 when the model cannot be reached
//! or breaks protocol.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    classify_wheat, coverage, occlusion_attribution, wheat_positions, AttributionScores, CoverageTable, ScoreSource,
    WheatClass, DEFAULT_GRID,
};
use crate::dd::{ddmin_wheat, DdStep};
use crate::error::Error;
use crate::explain::{generate_query_corpus, rank_training, rank_training_baseline, wheat_of, Corpus, Ranked, WheatCache};
use crate::lang::{embed, lexemes, Program};
use crate::model::{load_model, serve, Model, ModelError, ModelHandle, ModelSpec};
use crate::mutate::{extract_wheat_with, ExtractOptions, Wheat, DEFAULT_FIXPOINT_CAP};
use crate::oracle::{brute_force_check, OracleSummary, DEFAULT_TOKEN_LIMIT};
use crate::reduce::DEFAULT_MAX_K;
use crate::verify::{HeaderMode, QueryLedger, Verifier};

#[derive(Debug, Parser)]
#[command(name = "wheacha", version, about = "Find the input features a code model's prediction rests on")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Model config JSON, or `exec:<command>` for an external model.
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Settings file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Largest statement subset Reduce tries [default: 3].
    #[arg(long, global = true)]
    pub max_k: Option<usize>,
    /// Most Mutate passes per fragment [default: 50].
    #[arg(long, global = true)]
    pub fixpoint_cap: Option<usize>,
    /// Wrap sufficiency candidates in the header with the name masked.
    #[arg(long, global = true, conflicts_with = "keep_header")]
    pub mask_name: bool,
    /// Wrap sufficiency candidates in the original header.
    #[arg(long, global = true)]
    pub keep_header: bool,
    /// Programs processed at once; output keeps input order.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Coverage budgets in percent, comma separated [default: 10,30,50,70,90].
    #[arg(long, global = true, value_delimiter = ',')]
    pub top_pct: Option<Vec<u32>>,
    /// Longest body the oracle enumerates, in tokens [default: 14].
    #[arg(long, global = true)]
    pub oracle_token_limit: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract the wheat of a program, or of every `.mini` file in a directory.
    Extract { path: PathBuf },
    /// Delta debugging over the program's tokens, with its trace.
    Dd { path: PathBuf },
    /// Check by enumeration that no shorter candidate passes.
    Oracle { path: PathBuf },
    /// Share of lexical, syntactic and semantic wheat over a corpus.
    Classify { path: PathBuf },
    /// How often the top-scored tokens cover the whole wheat.
    Coverage {
        path: PathBuf,
        /// Directory of `<stem>.json` score arrays; occlusion otherwise.
        #[arg(long)]
        scores: Option<PathBuf>,
    },
    /// Training programs closest to a test program, by wheat and by whole program.
    Explain {
        path: PathBuf,
        /// Directory of `.mini` files plus `labels.json`.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Label to explain; the model's prediction by default.
        #[arg(long)]
        label: Option<String>,
    },
    /// Write every program the extraction queried to a directory.
    GenQueries {
        path: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Answer prediction requests for a built-in model on stdin/stdout.
    ModelServe,
}

/// The settings file. `model` is either a path/`exec:` string or an inline
/// model config.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: Option<ModelRef>,
    pub max_k: Option<usize>,
    pub fixpoint_cap: Option<usize>,
    pub header: Option<HeaderMode>,
    pub oracle_token_limit: Option<usize>,
    pub top_pct: Option<Vec<u32>>,
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Inline(ModelSpec),
    Arg(String),
}

/// Config and flags merged.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub model: Option<String>,
    pub inline_model: Option<ModelSpec>,
    pub options: ExtractOptions,
    pub jobs: usize,
    pub top_pct: Vec<u32>,
    pub oracle_token_limit: usize,
}

impl Settings {
    pub fn resolve(common: &Common) -> anyhow::Result<Settings> {
        let (config, base) = match &common.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let config: Config =
                    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
                (config, path.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (Config::default(), PathBuf::new()),
        };
        let (mut model, mut inline_model) = (None, None);
        match config.model {
            Some(ModelRef::Inline(spec)) => inline_model = Some(spec),
            // a config path inside the settings file is relative to it
            Some(ModelRef::Arg(a)) if a.starts_with("exec:") => model = Some(a),
            Some(ModelRef::Arg(a)) => model = Some(base.join(a).to_string_lossy().into_owned()),
            None => {}
        }
        if common.model.is_some() {
            model = common.model.clone();
            inline_model = None;
        }
        let header = if common.keep_header {
            HeaderMode::KeepHeader
        } else if common.mask_name {
            HeaderMode::MaskName
        } else {
            config.header.unwrap_or_default()
        };
        let top_pct = common.top_pct.clone().or(config.top_pct).unwrap_or_else(|| DEFAULT_GRID.to_vec());
        if top_pct.iter().any(|&p| p == 0 || p > 100) {
            bail!("--top-pct values must lie in 1..=100");
        }
        Ok(Settings {
            model,
            inline_model,
            options: ExtractOptions {
                max_k: common.max_k.or(config.max_k).unwrap_or(DEFAULT_MAX_K),
                fixpoint_cap: common.fixpoint_cap.or(config.fixpoint_cap).unwrap_or(DEFAULT_FIXPOINT_CAP),
                header,
                parallel: false,
            },
            jobs: common.jobs.or(config.jobs).unwrap_or(1).max(1),
            top_pct,
            oracle_token_limit: common.oracle_token_limit.or(config.oracle_token_limit).unwrap_or(DEFAULT_TOKEN_LIMIT),
        })
    }

    pub fn load_model(&self) -> anyhow::Result<ModelHandle> {
        if let Some(spec) = &self.inline_model {
            return Ok(spec.build()?);
        }
        let arg = self.model.as_deref().ok_or_else(|| anyhow!("no model given: pass --model or set it in --config"))?;
        Ok(load_model(arg)?)
    }
}

/// Parse arguments, run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn fatal_model_error(e: &ModelError) -> bool {
    matches!(e, ModelError::Unreachable(_) | ModelError::Protocol(_))
}

/// Whether a per-program failure should stop the whole run.
fn is_fatal(e: &Error) -> bool {
    matches!(e, Error::Model(m) if fatal_model_error(m))
}

fn exit_code(e: &anyhow::Error) -> i32 {
    for cause in e.chain() {
        let fatal = cause.downcast_ref::<ModelError>().is_some_and(fatal_model_error)
            || cause.downcast_ref::<Error>().is_some_and(is_fatal);
        if fatal {
            return 3;
        }
    }
    2
}

pub fn execute(cli: &Cli) -> anyhow::Result<i32> {
    let settings = Settings::resolve(&cli.common)?;
    let mut out: Box<dyn Write> = match &cli.common.out {
        Some(path) => Box::new(io::BufWriter::new(
            fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    let format = cli.common.format;
    let code = match &cli.command {
        Command::ModelServe => {
            if settings.model.as_deref().is_some_and(|m| m.starts_with("exec:")) {
                bail!("model-serve needs a built-in model config");
            }
            let model = settings.load_model()?;
            serve(model.as_ref(), io::stdin().lock(), &mut out)?;
            0
        }
        Command::Extract { path } => cmd_extract(path, &settings, format, &mut out)?,
        Command::Dd { path } => cmd_dd(path, &settings, format, &mut out)?,
        Command::Oracle { path } => cmd_oracle(path, &settings, format, &mut out)?,
        Command::Classify { path } => cmd_classify(path, &settings, format, &mut out)?,
        Command::Coverage { path, scores } => cmd_coverage(path, scores.as_deref(), &settings, format, &mut out)?,
        Command::Explain { path, corpus, k, label } => {
            cmd_explain(path, corpus, *k, label.as_deref(), &settings, format, &mut out)?
        }
        Command::GenQueries { path, out_dir } => cmd_gen_queries(path, out_dir, &settings, format, &mut out)?,
    };
    out.flush()?;
    Ok(code)
}

/// A parsed input program and the name it is reported under.
pub struct Input {
    pub path: String,
    pub program: Program,
}

/// One file, or the `.mini` files of a directory in name order. Files that
/// do not read or parse are reported and skipped.
pub fn read_inputs(path: &Path) -> anyhow::Result<Vec<Input>> {
    let files: Vec<(String, PathBuf)> = if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .with_context(|| format!("reading {}", path.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "mini"))
            .collect();
        files.sort();
        files.into_iter().map(|f| (f.file_name().unwrap_or_default().to_string_lossy().into_owned(), f)).collect()
    } else {
        let source = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let program = Program::parse(&source).with_context(|| format!("parsing {}", path.display()))?;
        return Ok(vec![Input { path: path.display().to_string(), program }]);
    };
    let total = files.len();
    let mut inputs = Vec::new();
    for (name, file) in files {
        let parsed = fs::read_to_string(&file).map_err(|e| e.to_string()).and_then(|s| Program::parse(&s).map_err(|e| e.to_string()));
        match parsed {
            Ok(program) => inputs.push(Input { path: name, program }),
            Err(e) => eprintln!("skipped {name}: {e}"),
        }
    }
    if inputs.len() < total {
        eprintln!("{} of {total} files skipped", total - inputs.len());
    }
    Ok(inputs)
}

/// `f` over every input, `jobs` at a time when the model allows it; results
/// in input order.
fn for_each_input<R: Send>(
    inputs: &[Input],
    model: &dyn Model,
    jobs: usize,
    f: impl Fn(&Input) -> R + Sync + Send,
) -> anyhow::Result<Vec<R>> {
    if jobs <= 1 || !model.concurrency_safe() || inputs.len() <= 1 {
        return Ok(inputs.iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    Ok(pool.install(|| inputs.par_iter().map(f).collect()))
}

/// Print per-program failures; stop at the first fatal one. Returns the
/// successes, each with its input, and whether anything failed.
fn collect<'a, T>(inputs: &'a [Input], results: Vec<Result<T, Error>>) -> anyhow::Result<(Vec<(&'a Input, T)>, bool)> {
    let mut ok = Vec::new();
    let mut failed = false;
    for (input, r) in inputs.iter().zip(results) {
        match r {
            Ok(v) => ok.push((input, v)),
            Err(e) if is_fatal(&e) => return Err(anyhow::Error::new(e).context(input.path.clone())),
            Err(e) => {
                eprintln!("error: {}: {e}", input.path);
                failed = true;
            }
        }
    }
    Ok((ok, failed))
}

fn write_json(out: &mut dyn Write, value: &impl Serialize, pretty: bool) -> anyhow::Result<()> {
    if pretty {
        serde_json::to_writer_pretty(&mut *out, value)?;
    } else {
        serde_json::to_writer(&mut *out, value)?;
    }
    writeln!(out)?;
    Ok(())
}

/// A single result as one JSON object, several as JSON lines.
fn write_records<T: Serialize>(out: &mut dyn Write, records: &[T], single: bool) -> anyhow::Result<()> {
    for r in records {
        write_json(out, r, single)?;
    }
    Ok(())
}

fn extract_one(input: &Input, model: &dyn Model, options: &ExtractOptions) -> Result<(Wheat, u64), Error> {
    let start = Instant::now();
    let ledger = QueryLedger::new();
    let verifier = Verifier::new(model, &input.program, &ledger, options.header)?;
    let wheat = extract_wheat_with(&verifier, options)?;
    Ok((wheat, start.elapsed().as_millis() as u64))
}

fn within_program(settings: &Settings, inputs: &[Input]) -> ExtractOptions {
    ExtractOptions { parallel: settings.jobs > 1 && inputs.len() == 1, ..settings.options }
}

/// The program's source with a `^` under every wheat lexeme.
pub fn underline(program: &Program, wheat: &Wheat) -> String {
    let marked = embed(&lexemes(&wheat.tokens), &program.tokens).unwrap_or_default();
    let source = &program.source;
    let mut spans = Vec::new();
    let mut cursor = 0;
    for (i, t) in program.tokens.iter().enumerate() {
        let Some(at) = source[cursor..].find(&t.text) else { break };
        let start = cursor + at;
        cursor = start + t.text.len();
        if marked.contains(&i) {
            spans.push((start, cursor));
        }
    }
    let mut text = String::new();
    let mut line_start = 0;
    for line in source.split_inclusive('\n') {
        let line_end = line_start + line.len();
        text.push_str(line.trim_end_matches('\n'));
        text.push('\n');
        let mut marks = String::new();
        for &(s, e) in spans.iter().filter(|(s, _)| *s >= line_start && *s < line_end) {
            let col = source[line_start..s].chars().count();
            let width = source[s..e].chars().count();
            while marks.chars().count() < col {
                marks.push(' ');
            }
            marks.push_str(&"^".repeat(width));
        }
        if !marks.is_empty() {
            text.push_str(&marks);
            text.push('\n');
        }
        line_start = line_end;
    }
    text
}

pub fn cmd_extract(path: &Path, settings: &Settings, format: Format, out: &mut dyn Write) -> anyhow::Result<i32> {
    let model = settings.load_model()?;
    let inputs = read_inputs(path)?;
    let options = within_program(settings, &inputs);
    let results = for_each_input(&inputs, model.as_ref(), settings.jobs, |i| extract_one(i, model.as_ref(), &options))?;
    let (done, failed) = collect(&inputs, results)?;
    match format {
        Format::Json => {
            let reports: Vec<_> = done.iter().map(|(i, (w, ms))| w.report(&i.path, *ms)).collect();
            write_records(out, &reports, !path.is_dir())?;
        }
        Format::Text => {
            for (input, (w, ms)) in &done {
                let path = &input.path;
                writeln!(out, "== {path}: {} ({} tokens, k={}, {} queries, {ms} ms)", w.label, w.token_count, w.source_fragment.k, w.queries)?;
                writeln!(out, "{}", w.source())?;
                writeln!(out, "--")?;
                write!(out, "{}", underline(&input.program, w))?;
            }
        }
    }
    Ok(i32::from(failed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdReport {
    pub program_path: String,
    pub label: String,
    pub final_source: String,
    pub final_tokens: Vec<String>,
    pub token_count: usize,
    pub passes: bool,
    pub queries: u64,
    pub steps: Vec<DdStep>,
}

pub fn cmd_dd(path: &Path, settings: &Settings, format: Format, out: &mut dyn Write) -> anyhow::Result<i32> {
    let model = settings.load_model()?;
    let inputs = read_inputs(path)?;
    let results = for_each_input(&inputs, model.as_ref(), settings.jobs, |input| {
        let ledger = QueryLedger::new();
        let verifier = Verifier::new(model.as_ref(), &input.program, &ledger, settings.options.header)?;
        let dd = ddmin_wheat(&verifier)?;
        Ok(DdReport {
            program_path: input.path.clone(),
            label: verifier.label().to_string(),
            final_source: dd.source(),
            final_tokens: dd.trace.final_tokens.clone(),
            token_count: dd.token_count,
            passes: dd.passes,
            queries: ledger.total_queries(),
            steps: dd.trace.steps,
        })
    })?;
    let (done, failed) = collect(&inputs, results)?;
    let reports: Vec<DdReport> = done.into_iter().map(|(_, r)| r).collect();
    match format {
        Format::Json => write_records(out, &reports, !path.is_dir())?,
        Format::Text => {
            for r in &reports {
                writeln!(out, "== {}: {}", r.program_path, r.label)?;
                for s in &r.steps {
                    writeln!(out, "{:>3} {:<4} {:<10} {}", s.granularity, s.partition, format!("{:?}", s.unsatisfied), s.tokens.join(" "))?;
                }
                writeln!(out, "final ({} tokens, passes: {}): {}", r.token_count, r.passes, r.final_tokens.join(" "))?;
            }
        }
    }
    Ok(i32::from(failed))
}

pub fn cmd_oracle(path: &Path, settings: &Settings, format: Format, out: &mut dyn Write) -> anyhow::Result<i32> {
    let model = settings.load_model()?;
    let inputs = read_inputs(path)?;
    let limit = settings.oracle_token_limit;
    let parallel = settings.jobs > 1;
    // over-long programs are skipped, not failed
    let results = for_each_input(&inputs, model.as_ref(), 1, |input| -> Result<Option<OracleSummary>, Error> {
        let ledger = QueryLedger::new();
        let verifier = Verifier::new(model.as_ref(), &input.program, &ledger, settings.options.header)?;
        let wheat = extract_wheat_with(&verifier, &settings.options)?;
        match brute_force_check(&verifier, wheat.token_count, None, limit, parallel) {
            Ok(r) => Ok(Some(r.summary(&input.path, wheat.token_count))),
            Err(Error::TokenLimitExceeded { tokens, limit }) => {
                eprintln!("skipped {}: {tokens} body tokens, over the limit of {limit}", input.path);
                Ok(None)
            }
            Err(e) => Err(e),
        }
    })?;
    let (done, failed) = collect(&inputs, results)?;
    let summaries: Vec<OracleSummary> = done.into_iter().filter_map(|(_, s)| s).collect();
    match format {
        Format::Json => write_records(out, &summaries, !path.is_dir())?,
        Format::Text => {
            for s in &summaries {
                let verdict = match &s.smaller_source {
                    None => "confirmed minimal".to_string(),
                    Some(src) => format!("smaller ({} tokens): {}", s.smaller_tokens.unwrap_or(0), src.replace('\n', " ")),
                };
                writeln!(out, "{}: wheat {} tokens, {verdict}; {} enumerated, {} tested", s.program_path, s.wheat_tokens, s.enumerated, s.tested)?;
            }
            let confirmed = summaries.iter().filter(|s| s.confirmed_minimal).count();
            writeln!(out, "{confirmed} of {} confirmed minimal", summaries.len())?;
        }
    }
    Ok(i32::from(failed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedWheat {
    pub program_path: String,
    pub label: String,
    pub wheat_source: String,
    pub class: WheatClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub model: String,
    pub programs: usize,
    /// Percentage of classified programs per class.
    pub percent: BTreeMap<WheatClass, f64>,
    pub rows: Vec<ClassifiedWheat>,
}

pub fn cmd_classify(path: &Path, settings: &Settings, format: Format, out: &mut dyn Write) -> anyhow::Result<i32> {
    let model = settings.load_model()?;
    let inputs = read_inputs(path)?;
    let results = for_each_input(&inputs, model.as_ref(), settings.jobs, |input| {
        let ledger = QueryLedger::new();
        let verifier = Verifier::new(model.as_ref(), &input.program, &ledger, settings.options.header)?;
        let wheat = extract_wheat_with(&verifier, &settings.options)?;
        let class = classify_wheat(&verifier, &wheat)?;
        Ok(ClassifiedWheat { program_path: input.path.clone(), label: wheat.label.clone(), wheat_source: wheat.source(), class })
    })?;
    let (done, failed) = collect(&inputs, results)?;
    let rows: Vec<ClassifiedWheat> = done.into_iter().map(|(_, r)| r).collect();
    let n = rows.len();
    let percent = [WheatClass::Lexical, WheatClass::Syntactic, WheatClass::Semantic]
        .into_iter()
        .map(|c| {
            let hits = rows.iter().filter(|r| r.class == c).count();
            (c, if n == 0 { 0.0 } else { 100.0 * hits as f64 / n as f64 })
        })
        .collect();
    let report = ClassifyReport { model: model.id().to_string(), programs: n, percent, rows };
    match format {
        Format::Json => write_json(out, &report, true)?,
        Format::Text => {
            writeln!(out, "{} ({} programs)", report.model, report.programs)?;
            for (class, pct) in &report.percent {
                writeln!(out, "{:<10} {pct:>6.1}%", format!("{class:?}"))?;
            }
        }
    }
    Ok(i32::from(failed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub top_pct: u32,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub model: String,
    pub source: ScoreSource,
    pub programs: usize,
    pub rows: Vec<CoverageRow>,
    pub monotone: bool,
}

pub fn cmd_coverage(
    path: &Path,
    scores: Option<&Path>,
    settings: &Settings,
    format: Format,
    out: &mut dyn Write,
) -> anyhow::Result<i32> {
    let model = settings.load_model()?;
    let inputs = read_inputs(path)?;
    let mut grid = settings.top_pct.clone();
    grid.sort_unstable();
    grid.dedup();
    let results = for_each_input(&inputs, model.as_ref(), settings.jobs, |input| -> Result<Option<Vec<_>>, Error> {
        let attribution = match scores {
            Some(dir) => {
                let stem = Path::new(&input.path).file_stem().unwrap_or_default().to_string_lossy().into_owned();
                let file = dir.join(format!("{stem}.json"));
                let parsed = fs::read_to_string(&file)
                    .map_err(|e| e.to_string())
                    .and_then(|text| AttributionScores::from_json(&text, &input.program));
                match parsed {
                    Ok(a) => a,
                    Err(e) => {
                        eprintln!("skipped {}: scores {}: {e}", input.path, file.display());
                        return Ok(None);
                    }
                }
            }
            None => occlusion_attribution(&input.program, model.as_ref())?,
        };
        let ledger = QueryLedger::new();
        let verifier = Verifier::new(model.as_ref(), &input.program, &ledger, settings.options.header)?;
        let wheat = extract_wheat_with(&verifier, &settings.options)?;
        let positions = wheat_positions(&wheat, &input.program).unwrap_or_default();
        Ok(Some(grid.iter().map(|&pct| coverage(&attribution, &positions, pct)).collect()))
    })?;
    let (done, failed) = collect(&inputs, results)?;
    let mut table = CoverageTable::default();
    for (_, results) in done.iter().filter_map(|(p, r)| r.as_ref().map(|r| (p, r))) {
        table.add(results);
    }
    let report = CoverageReport {
        model: model.id().to_string(),
        source: if scores.is_some() { ScoreSource::External } else { ScoreSource::Occlusion },
        programs: table.programs,
        rows: grid.iter().map(|&top_pct| CoverageRow { top_pct, fraction: table.fraction(top_pct) }).collect(),
        monotone: table.is_monotone(),
    };
    match format {
        Format::Json => write_json(out, &report, true)?,
        Format::Text => {
            writeln!(out, "{} ({:?}, {} programs)", report.model, report.source, report.programs)?;
            let head: Vec<String> = report.rows.iter().map(|r| format!("{:>6}", format!("{}%", r.top_pct))).collect();
            let vals: Vec<String> = report.rows.iter().map(|r| format!("{:>6.2}", r.fraction)).collect();
            writeln!(out, "top     {}", head.join(""))?;
            writeln!(out, "covered {}", vals.join(""))?;
        }
    }
    Ok(i32::from(failed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainReport {
    pub program_path: String,
    pub label: String,
    pub wheat_source: String,
    pub wheat: Vec<Ranked>,
    pub baseline: Vec<Ranked>,
}

pub fn cmd_explain(
    path: &Path,
    corpus_dir: &Path,
    k: usize,
    label: Option<&str>,
    settings: &Settings,
    format: Format,
    out: &mut dyn Write,
) -> anyhow::Result<i32> {
    let model = settings.load_model()?;
    let test = read_inputs(path)?.into_iter().next().ok_or_else(|| anyhow!("{} holds no program", path.display()))?;
    let (corpus, skipped) = Corpus::load(corpus_dir).with_context(|| format!("loading {}", corpus_dir.display()))?;
    for s in &skipped {
        eprintln!("skipped {s}: unparsable or unlabelled");
    }
    let cache = WheatCache::from_env();
    let options = ExtractOptions { parallel: settings.jobs > 1, ..settings.options };
    let wheat = wheat_of(&test.program, model.as_ref(), &options, cache.as_ref())?
        .ok_or_else(|| anyhow!("{}: no wheat within max_k = {}", test.path, options.max_k))?;
    let label = match label {
        Some(l) => l.to_string(),
        None => model.predict(&test.program.source)?.label,
    };
    let ranked = rank_training(&wheat.tokens, &corpus, &label, k, model.as_ref(), &options, cache.as_ref())?;
    let baseline = rank_training_baseline(&test.program, &corpus, &label, k)?;
    let report = ExplainReport {
        program_path: test.path,
        label,
        wheat_source: wheat.source,
        wheat: ranked.items,
        baseline: baseline.items,
    };
    match format {
        Format::Json => write_json(out, &report, true)?,
        Format::Text => {
            writeln!(out, "{}: {}  wheat: {}", report.program_path, report.label, report.wheat_source.replace('\n', " "))?;
            for (name, items) in [("by wheat", &report.wheat), ("by program", &report.baseline)] {
                writeln!(out, "{name}:")?;
                for r in items {
                    writeln!(out, "  {:.3}  {:<12} {}", r.distance, r.path, r.wheat_source.replace('\n', " "))?;
                }
            }
        }
    }
    Ok(0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryCorpusReport {
    pub program_path: String,
    pub out_dir: String,
    pub written: usize,
}

pub fn cmd_gen_queries(
    path: &Path,
    out_dir: &Path,
    settings: &Settings,
    format: Format,
    out: &mut dyn Write,
) -> anyhow::Result<i32> {
    let model = settings.load_model()?;
    let input = read_inputs(path)?.into_iter().next().ok_or_else(|| anyhow!("{} holds no program", path.display()))?;
    let programs = generate_query_corpus(&input.program, model.as_ref(), &settings.options)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    for (i, p) in programs.iter().enumerate() {
        fs::write(out_dir.join(format!("q{i:04}.mini")), format!("{}\n", p.source))?;
    }
    let report =
        QueryCorpusReport { program_path: input.path, out_dir: out_dir.display().to_string(), written: programs.len() };
    match format {
        Format::Json => write_json(out, &report, true)?,
        Format::Text => writeln!(out, "{} programs written to {}", report.written, report.out_dir)?,
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::RUNNING_EXAMPLE;
    use crate::mutate::extract_wheat;

    fn common(args: &[&str]) -> Common {
        let mut all = vec!["wheacha"];
        all.extend_from_slice(args);
        all.push("model-serve");
        Cli::try_parse_from(all).unwrap().common
    }

    #[test]
    fn flags_override_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("cfg.json");
        fs::write(&cfg, r#"{"model": "m.json", "max_k": 2, "header": "keep-header", "top_pct": [20, 40]}"#).unwrap();
        let s = Settings::resolve(&common(&["--config", cfg.to_str().unwrap()])).unwrap();
        assert_eq!(s.options.max_k, 2);
        assert_eq!(s.options.header, HeaderMode::KeepHeader);
        assert_eq!(s.top_pct, [20, 40]);
        assert_eq!(s.model.as_deref().map(Path::new), Some(dir.path().join("m.json").as_path()));
        let s = Settings::resolve(&common(&[
            "--config",
            cfg.to_str().unwrap(),
            "--max-k",
            "4",
            "--mask-name",
            "--top-pct",
            "10,90",
            "--model",
            "exec:x",
        ]))
        .unwrap();
        assert_eq!(s.options.max_k, 4);
        assert_eq!(s.options.header, HeaderMode::MaskName);
        assert_eq!(s.top_pct, [10, 90]);
        assert_eq!(s.model.as_deref(), Some("exec:x"));
    }

    #[test]
    fn defaults_without_config() {
        let s = Settings::resolve(&common(&[])).unwrap();
        assert_eq!(s.options, ExtractOptions::default());
        assert_eq!(s.top_pct, DEFAULT_GRID);
        assert_eq!(s.oracle_token_limit, DEFAULT_TOKEN_LIMIT);
        assert_eq!(s.jobs, 1);
        assert!(Settings::resolve(&common(&["--top-pct", "0"])).is_err());
    }

    #[test]
    fn inline_model_in_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("cfg.json");
        let spec = serde_json::to_string(&crate::corpus::monotone_rules()).unwrap();
        fs::write(&cfg, format!(r#"{{"model": {spec}}}"#)).unwrap();
        let s = Settings::resolve(&common(&["--config", cfg.to_str().unwrap()])).unwrap();
        assert_eq!(s.load_model().unwrap().id(), "rules-monotone");
    }

    #[test]
    fn underline_marks_wheat_lexemes() {
        let p = Program::parse(RUNNING_EXAMPLE).unwrap();
        let m = crate::corpus::monotone_rules().build().unwrap();
        let w = extract_wheat(&p, m.as_ref(), &ExtractOptions::default()).unwrap();
        let text = underline(&p, &w);
        let lines: Vec<&str> = text.lines().collect();
        let i = lines.iter().position(|l| l.contains("mItems.add(")).unwrap();
        let marks = lines[i + 1];
        let col = lines[i].find("add").unwrap();
        assert_eq!(&marks[col..col + 3], "^^^");
        assert_eq!(marks.matches('^').count(), 3);
    }

    #[test]
    fn exit_codes() {
        let unreachable = anyhow::Error::new(Error::Model(ModelError::Unreachable("gone".into())));
        assert_eq!(exit_code(&unreachable), 3);
        assert_eq!(exit_code(&anyhow::Error::new(ModelError::Protocol("x".into()))), 3);
        assert_eq!(exit_code(&anyhow!("bad flag")), 2);
    }
}
