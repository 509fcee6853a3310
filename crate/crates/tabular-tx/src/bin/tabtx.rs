//! Command-line front end for the Tabular-TX pipeline.
//!
//! Subcommands mirror the pipeline stages: `preprocess` and `analyze` dump
//! intermediate structures, `generate` runs the two-step prompting loop,
//! `validate` re-checks TX structure on saved results, `evaluate` scores
//! them against references, and `pipeline` chains generate and evaluate.
//!
//! Exit codes: 0 success, 1 data or validation error, 2 backend error,
//! 3 configuration error.

use clap::{Args, Parser, Subcommand};
use std::collections::HashMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use tabular_tx::analysis::{select_analysis_method, type_cells, AnalysisPlan, TypedCell};
use tabular_tx::backend::{Backend, HttpBackend, MockBackend, MockScript};
use tabular_tx::config::{BackendKind, ConfigError, RunConfig, TokenizerChoice};
use tabular_tx::eval::{aggregate, round2, score_pair, DocScore, EvalReport};
use tabular_tx::ingest::{
    load_corpus, load_corpus_lenient, load_results, write_results, Corpus, ResultRecord,
};
use tabular_tx::model::{AnalysisMethod, Locale, TableDocument};
use tabular_tx::pipeline::{run_corpus, CorpusRun, PipelineError, PipelineSettings};
use tabular_tx::preprocess::{
    expand_merged_cells, filter_related, infer_headers, to_key_value_records, PreprocessError,
    RelatedRecord,
};
use tabular_tx::prompt::{PromptOptions, TemplateSet};
use tabular_tx::tx::{parse_tx_summary, validate_tx};

#[derive(Parser)]
#[command(
    name = "tabtx",
    version,
    about = "Theme-Explanation table summarization pipeline"
)]
struct Cli {
    /// TOML configuration file; flags override its settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Corpus file, one table document JSON per line.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,

    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output language: en or ko.
    #[arg(long, global = true)]
    locale: Option<Locale>,

    /// Worker threads for corpus processing.
    #[arg(long, global = true)]
    parallelism: Option<usize>,

    /// Drop invalid corpus records instead of failing.
    #[arg(long, global = true)]
    skip_invalid: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct GenerateArgs {
    /// Generation backend: mock or http.
    #[arg(long)]
    backend: Option<BackendKind>,

    /// Scripted responses for the mock backend.
    #[arg(long)]
    mock_script: Option<PathBuf>,

    /// Chat-completion endpoint for the http backend.
    #[arg(long)]
    endpoint: Option<String>,

    /// Model name sent in http requests.
    #[arg(long)]
    model: Option<String>,

    /// Journalist persona preamble: on or off.
    #[arg(long, value_parser = parse_on_off)]
    persona: Option<bool>,

    /// Drop the theme instruction from step-two prompts.
    #[arg(long)]
    no_theme_instruction: bool,

    /// Regeneration attempts after a failed structure check.
    #[arg(long)]
    max_regeneration: Option<u32>,

    /// Write every prompt sent to the backend, one JSON line each.
    #[arg(long)]
    prompt_log: Option<PathBuf>,

    /// Glossary file injected into step-one prompts.
    #[arg(long)]
    glossary: Option<PathBuf>,

    /// Directory with step1.{locale}.txt and step2.{locale}.txt overrides.
    #[arg(long)]
    template_dir: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct EvaluateArgs {
    /// Results file from a generate or pipeline run.
    #[arg(long)]
    results: PathBuf,

    /// Report format: json or csv.
    #[arg(long, default_value = "json")]
    format: OutputFormat,

    /// Tokenizer: auto, word, or char.
    #[arg(long)]
    tokenizer: Option<TokenizerChoice>,
}

#[derive(Subcommand)]
enum Command {
    /// Dump filtered key-value records per document.
    Preprocess,
    /// Dump cell classifications and the selected analysis method.
    Analyze,
    /// Run the two-step generation pipeline and write result records.
    Generate(GenerateArgs),
    /// Re-check TX structure on saved result records.
    Validate {
        /// Results file from a generate or pipeline run.
        #[arg(long)]
        results: PathBuf,
    },
    /// Score saved results against reference summaries.
    Evaluate(EvaluateArgs),
    /// Generate, then score, in one run.
    Pipeline {
        #[command(flatten)]
        generate: GenerateArgs,
        /// Tokenizer: auto, word, or char.
        #[arg(long)]
        tokenizer: Option<TokenizerChoice>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum OutputFormat {
    Json,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(format!(
                "unknown format {other:?}, expected \"json\" or \"csv\""
            )),
        }
    }
}

fn parse_on_off(s: &str) -> Result<bool, String> {
    match s {
        "on" => Ok(true),
        "off" => Ok(false),
        other => Err(format!("expected \"on\" or \"off\", got {other:?}")),
    }
}

/// A CLI failure carrying its exit code.
enum CliError {
    /// Malformed input data or failed validation: exit 1.
    Data(String),
    /// Generation service failure: exit 2.
    Backend(String),
    /// Bad configuration or usage: exit 3.
    Config(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Data(_) => 1,
            CliError::Backend(_) => 2,
            CliError::Config(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Data(m) | CliError::Backend(m) | CliError::Config(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<tabular_tx::ingest::IngestError> for CliError {
    fn from(e: tabular_tx::ingest::IngestError) -> Self {
        CliError::Data(e.to_string())
    }
}

fn main() {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes, not usage errors.
            let code = if err.use_stderr() { 3 } else { 0 };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {}", err.message());
            std::process::exit(err.exit_code());
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(locale) = cli.locale {
        config.locale = locale;
    }
    if let Some(parallelism) = cli.parallelism {
        config.parallelism = parallelism;
    }
    if cli.skip_invalid {
        config.skip_invalid = true;
    }

    match &cli.command {
        Command::Preprocess => cmd_preprocess(&cli, &config),
        Command::Analyze => cmd_analyze(&cli, &config),
        Command::Generate(args) => {
            apply_generate_args(&mut config, args);
            config.validate()?;
            cmd_generate(&cli, &config, args).map(|_| ())
        }
        Command::Validate { results } => cmd_validate(&cli, &config, results),
        Command::Evaluate(args) => {
            if let Some(tokenizer) = args.tokenizer {
                config.tokenizer = tokenizer;
            }
            cmd_evaluate(&cli, &config, args)
        }
        Command::Pipeline {
            generate,
            tokenizer,
        } => {
            apply_generate_args(&mut config, generate);
            if let Some(tokenizer) = tokenizer {
                config.tokenizer = *tokenizer;
            }
            config.validate()?;
            cmd_pipeline(&cli, &config, generate)
        }
    }
}

fn apply_generate_args(config: &mut RunConfig, args: &GenerateArgs) {
    if let Some(backend) = args.backend {
        config.backend = backend;
    }
    if let Some(path) = &args.mock_script {
        config.mock_script = Some(path.clone());
    }
    if let Some(endpoint) = &args.endpoint {
        config.endpoint = endpoint.clone();
    }
    if let Some(model) = &args.model {
        config.model = model.clone();
    }
    if let Some(persona) = args.persona {
        config.persona = persona;
    }
    if args.no_theme_instruction {
        config.theme_instruction = false;
    }
    if let Some(max) = args.max_regeneration {
        config.max_regeneration = max;
    }
    if let Some(path) = &args.glossary {
        config.glossary = Some(path.clone());
    }
    if let Some(dir) = &args.template_dir {
        config.template_dir = Some(dir.clone());
    }
}

fn corpus_path(cli: &Cli) -> Result<&Path, CliError> {
    cli.corpus
        .as_deref()
        .ok_or_else(|| CliError::Config("--corpus is required for this command".into()))
}

fn load_input_corpus(cli: &Cli, config: &RunConfig) -> Result<Corpus, CliError> {
    let path = corpus_path(cli)?;
    if config.skip_invalid {
        let (corpus, dropped) = load_corpus_lenient(path)?;
        for (line, err) in &dropped {
            log::warn!("dropped record at line {line}: {err}");
        }
        Ok(corpus)
    } else {
        Ok(load_corpus(path)?)
    }
}

/// Write lines to --out, or stdout when no output path was given.
fn write_lines(out: &Option<PathBuf>, lines: &[String]) -> Result<(), CliError> {
    let body = if lines.is_empty() {
        String::new()
    } else {
        format!("{}\n", lines.join("\n"))
    };
    match out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .map_err(|e| CliError::Data(e.to_string()))
        }
    }
}

/// Preprocess one document to its filtered records, treating a table with
/// no usable data cells as an empty record list.
fn preprocess_records(doc: &TableDocument) -> Result<Vec<RelatedRecord>, CliError> {
    let grid = expand_merged_cells(&doc.cells)
        .map_err(|e| CliError::Data(format!("document {:?}: {e}", doc.id)))?;
    let grid = infer_headers(grid);
    let records = to_key_value_records(&grid, &doc.highlighted_cells);
    match filter_related(&records, &grid, &doc.highlighted_cells) {
        Ok(filtered) => Ok(filtered),
        Err(PreprocessError::EmptyResult) => Ok(Vec::new()),
        Err(e) => Err(CliError::Data(format!("document {:?}: {e}", doc.id))),
    }
}

fn cmd_preprocess(cli: &Cli, config: &RunConfig) -> Result<(), CliError> {
    #[derive(serde::Serialize)]
    struct Line<'a> {
        id: &'a str,
        records: &'a [RelatedRecord],
    }

    let corpus = load_input_corpus(cli, config)?;
    let mut lines = Vec::with_capacity(corpus.documents.len());
    for doc in &corpus.documents {
        let records = preprocess_records(doc)?;
        let line = Line {
            id: &doc.id,
            records: &records,
        };
        lines.push(serde_json::to_string(&line).expect("record serialization cannot fail"));
    }
    write_lines(&cli.out, &lines)
}

fn cmd_analyze(cli: &Cli, config: &RunConfig) -> Result<(), CliError> {
    #[derive(serde::Serialize)]
    struct Line<'a> {
        id: &'a str,
        method: Option<AnalysisMethod>,
        axis: Option<&'a str>,
        cells: &'a [TypedCell],
        #[serde(skip_serializing_if = "Option::is_none")]
        note: Option<&'a str>,
    }

    let corpus = load_input_corpus(cli, config)?;
    let mut lines = Vec::with_capacity(corpus.documents.len());
    for doc in &corpus.documents {
        let records = preprocess_records(doc)?;
        let plan: Option<AnalysisPlan> = if records.is_empty() {
            None
        } else {
            Some(select_analysis_method(type_cells(&records)))
        };
        let line = match &plan {
            Some(plan) => Line {
                id: &doc.id,
                method: Some(plan.method),
                axis: plan.axis.as_deref(),
                cells: &plan.ordered_cells,
                note: None,
            },
            None => Line {
                id: &doc.id,
                method: None,
                axis: None,
                cells: &[],
                note: Some("no highlighted data cells"),
            },
        };
        lines.push(serde_json::to_string(&line).expect("record serialization cannot fail"));
    }
    write_lines(&cli.out, &lines)
}

fn build_backend(config: &RunConfig) -> Result<Box<dyn Backend>, CliError> {
    match config.backend {
        BackendKind::Mock => match &config.mock_script {
            Some(path) => {
                let script =
                    MockScript::from_file(path).map_err(|e| CliError::Config(e.to_string()))?;
                Ok(Box::new(MockBackend::new(script)))
            }
            None => Ok(Box::new(MockBackend::echo())),
        },
        BackendKind::Http => {
            let backend = HttpBackend::new(&config.endpoint, &config.model, &config.api_key_env)
                .map_err(|e| CliError::Config(e.to_string()))?;
            Ok(Box::new(backend))
        }
    }
}

fn build_settings(config: &RunConfig) -> Result<PipelineSettings, CliError> {
    let templates = match &config.template_dir {
        Some(dir) => TemplateSet::from_dir(dir, config.locale)
            .map_err(|e| CliError::Config(e.to_string()))?,
        None => TemplateSet::bundled(config.locale),
    };
    let glossary = match &config.glossary {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        None => String::new(),
    };
    Ok(PipelineSettings {
        locale: config.locale,
        options: PromptOptions {
            persona: config.persona,
            theme_instruction: config.theme_instruction,
        },
        max_regeneration: config.max_regeneration,
        params: config.generation_params(),
        templates,
        glossary,
    })
}

/// Run the generation pipeline over the corpus and flush results and the
/// prompt log. Partial results are still written when a backend failure
/// aborts the run, so completed work is never lost.
fn run_generation(
    config: &RunConfig,
    args: &GenerateArgs,
    corpus: &Corpus,
) -> Result<CorpusRun, CliError> {
    let backend = build_backend(config)?;
    let settings = build_settings(config)?;
    let run = run_corpus(
        &corpus.documents,
        backend.as_ref(),
        &settings,
        config.parallelism,
    );

    if let Some(path) = &args.prompt_log {
        let lines: Vec<String> = run
            .outputs
            .iter()
            .flat_map(|o| &o.prompts)
            .map(|p| serde_json::to_string(p).expect("prompt serialization cannot fail"))
            .collect();
        std::fs::write(path, format!("{}\n", lines.join("\n")))
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    }
    Ok(run)
}

fn records_from_run(run: &CorpusRun) -> Vec<ResultRecord> {
    run.outputs
        .iter()
        .map(|o| ResultRecord {
            id: o.record.document_id.clone(),
            step1_output: o.record.step1_output.clone(),
            final_summary: o.record.final_summary.clone(),
            tx_valid: o.record.tx_valid,
            failure_reason: o.record.failure_reason.clone(),
            scores: None,
        })
        .collect()
}

fn flush_results(cli: &Cli, records: &[ResultRecord]) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => write_results(records, path).map_err(CliError::from),
        None => {
            let lines: Vec<String> = records
                .iter()
                .map(|r| serde_json::to_string(r).expect("record serialization cannot fail"))
                .collect();
            write_lines(&None, &lines)
        }
    }
}

fn fatal_to_error(fatal: PipelineError) -> CliError {
    match &fatal {
        PipelineError::Backend { .. } => CliError::Backend(fatal.to_string()),
        _ => CliError::Config(fatal.to_string()),
    }
}

fn cmd_generate(cli: &Cli, config: &RunConfig, args: &GenerateArgs) -> Result<(), CliError> {
    let corpus = load_input_corpus(cli, config)?;
    let run = run_generation(config, args, &corpus)?;
    let records = records_from_run(&run);
    flush_results(cli, &records)?;
    match run.fatal {
        Some(fatal) => Err(fatal_to_error(fatal)),
        None => Ok(()),
    }
}

fn cmd_validate(cli: &Cli, config: &RunConfig, results_path: &Path) -> Result<(), CliError> {
    #[derive(serde::Serialize)]
    struct Line<'a> {
        id: &'a str,
        valid: bool,
        failed_checks: Vec<&'static str>,
    }

    let corpus = load_input_corpus(cli, config)?;
    let titles: HashMap<&str, &str> = corpus
        .documents
        .iter()
        .map(|d| (d.id.as_str(), d.metadata.table_title.as_str()))
        .collect();
    let results = load_results(results_path)?;

    let mut lines = Vec::with_capacity(results.len());
    let mut all_valid = true;
    for record in &results {
        let line = match titles.get(record.id.as_str()) {
            Some(title) => {
                let summary = parse_tx_summary(&record.final_summary, config.locale);
                let report = validate_tx(&summary, title);
                Line {
                    id: &record.id,
                    valid: report.valid,
                    failed_checks: report.failed_checks(),
                }
            }
            None => Line {
                id: &record.id,
                valid: false,
                failed_checks: vec!["unknown_document"],
            },
        };
        all_valid &= line.valid;
        lines.push(serde_json::to_string(&line).expect("line serialization cannot fail"));
    }
    write_lines(&cli.out, &lines)?;
    if all_valid {
        Ok(())
    } else {
        Err(CliError::Data(
            "one or more summaries failed validation".into(),
        ))
    }
}

/// Score results that have both a record and a reference, in corpus order.
fn score_results(
    corpus: &Corpus,
    results: &[ResultRecord],
    config: &RunConfig,
) -> Result<EvalReport, CliError> {
    let by_id: HashMap<&str, &ResultRecord> = results.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut per_document = Vec::new();
    for doc in &corpus.documents {
        let Some(reference) = &doc.reference_summary else {
            continue;
        };
        let Some(record) = by_id.get(doc.id.as_str()) else {
            log::warn!("document {:?} has no result record; skipping", doc.id);
            continue;
        };
        per_document.push(DocScore {
            id: doc.id.clone(),
            scores: score_pair(
                &record.final_summary,
                reference,
                config.tokenizer.mode_override(),
            ),
        });
    }
    aggregate(per_document).map_err(|e| CliError::Data(e.to_string()))
}

fn render_report(report: &EvalReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let mut body =
                serde_json::to_string_pretty(report).expect("report serialization cannot fail");
            body.push('\n');
            body
        }
        OutputFormat::Csv => {
            let mut body = String::from("id,rouge1,rougeL,bleu\n");
            for doc in &report.per_document {
                body.push_str(&format!(
                    "{},{:.2},{:.2},{:.2}\n",
                    doc.id,
                    round2(doc.scores.rouge1),
                    round2(doc.scores.rouge_l),
                    round2(doc.scores.bleu),
                ));
            }
            body.push_str(&format!(
                "corpus_means,{:.2},{:.2},{:.2}\n",
                round2(report.corpus_means.rouge1),
                round2(report.corpus_means.rouge_l),
                round2(report.corpus_means.bleu),
            ));
            body.push_str(&format!(
                "overall_average,{:.2},,\n",
                round2(report.overall_average)
            ));
            body
        }
    }
}

fn print_report_summary(report: &EvalReport) {
    eprintln!(
        "scored {} document(s): ROUGE-1 {:.2}, ROUGE-L {:.2}, BLEU {:.2}, overall {:.2}",
        report.per_document.len(),
        round2(report.corpus_means.rouge1),
        round2(report.corpus_means.rouge_l),
        round2(report.corpus_means.bleu),
        round2(report.overall_average),
    );
}

fn write_text(out: &Option<PathBuf>, body: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .map_err(|e| CliError::Data(e.to_string()))
        }
    }
}

fn cmd_evaluate(cli: &Cli, config: &RunConfig, args: &EvaluateArgs) -> Result<(), CliError> {
    let corpus = load_input_corpus(cli, config)?;
    let results = load_results(&args.results)?;
    let report = score_results(&corpus, &results, config)?;
    print_report_summary(&report);
    write_text(&cli.out, &render_report(&report, args.format))
}

fn cmd_pipeline(cli: &Cli, config: &RunConfig, args: &GenerateArgs) -> Result<(), CliError> {
    let corpus = load_input_corpus(cli, config)?;
    let run = run_generation(config, args, &corpus)?;
    let mut records = records_from_run(&run);

    if run.fatal.is_none() {
        let references: HashMap<&str, &str> = corpus
            .documents
            .iter()
            .filter_map(|d| d.reference_summary.as_deref().map(|r| (d.id.as_str(), r)))
            .collect();
        for record in &mut records {
            if let Some(reference) = references.get(record.id.as_str()) {
                record.scores = Some(score_pair(
                    &record.final_summary,
                    reference,
                    config.tokenizer.mode_override(),
                ));
            }
        }
    }
    flush_results(cli, &records)?;

    if let Some(fatal) = run.fatal {
        return Err(fatal_to_error(fatal));
    }
    let report = score_results(&corpus, &records, config)?;
    print_report_summary(&report);
    Ok(())
}
