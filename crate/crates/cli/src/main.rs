//! `reliance` command-line driver.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use reliance::bundle::ModelBundle;
use reliance::config::RunConfig;
use reliance::corpus::{load_dataset, preprocess, preprocess_all, write_cache, DatasetStats, RawRecord, StopwordList};
use reliance::embed::train_doc2vec;
use reliance::eval::experiment::{evaluate_pipeline, load_corpus, split_corpus, timestamp, train_pipeline, StageTimer};
use reliance::eval::MetricsReport;
use reliance::{Doc2VecModel, Error, Prediction};

#[derive(Parser)]
#[command(name = "reliance", version, about = "Stacked-ensemble news credibility classifier")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenize, normalize and stem a CSV into a cache file.
    Preprocess {
        input: PathBuf,
        output: PathBuf,
        /// Accept records without a label column.
        #[arg(long)]
        unlabeled: bool,
    },
    /// Train Doc2Vec on the configured corpus and write one vector per document.
    Embed {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to `<output_dir>/vectors.csv`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Train Doc2Vec, the five base models and the stack; write a bundle.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to `<output_dir>/model.rlnc`.
        #[arg(long)]
        bundle: Option<PathBuf>,
        /// Threads for parallel stages (0 = sequential, deterministic).
        #[arg(long)]
        threads: Option<usize>,
        /// Train the meta-model on in-sample base predictions.
        #[arg(long)]
        insample: bool,
        /// Embed test documents during Doc2Vec training (labels unused).
        #[arg(long)]
        transductive: bool,
    },
    /// Score the held-out split with a bundle; write CSV, Markdown and JSON reports.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        bundle: PathBuf,
        /// Defaults to the config's output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Score raw text or a CSV of records; one JSON line per document.
    /// A document is labelled fake when its probability is at least 0.5.
    Predict {
        #[arg(long)]
        bundle: PathBuf,
        /// A single document's text.
        #[arg(long, conflicts_with = "input", required_unless_present = "input")]
        text: Option<String>,
        /// CSV with `id,title,author,text` columns.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Re-render a stored JSON report.
    Report {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Markdown,
    Json,
}

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::NumericOverflow(_) => 3,
        Error::Config(_) | Error::InvalidArgument(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load_config(path: &Path) -> CliResult<RunConfig> {
    let mut config = RunConfig::load(path)?;
    config.apply_env()?;
    config.validate()?;
    Ok(config)
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Preprocess { input, output, unlabeled } => cmd_preprocess(&input, &output, !unlabeled),
        Command::Embed { config, output } => cmd_embed(&config, output),
        Command::Train { config, bundle, threads, insample, transductive } => {
            let mut config = load_config(&config)?;
            if let Some(t) = threads {
                config.threads = t;
            }
            config.stack.insample |= insample;
            config.transductive |= transductive;
            cmd_train(&config, bundle)
        }
        Command::Evaluate { config, bundle, output } => cmd_evaluate(&load_config(&config)?, &bundle, output),
        Command::Predict { bundle, text, input } => cmd_predict(&bundle, text, input),
        Command::Report { input, format } => cmd_report(&input, format),
    }
}

fn cmd_preprocess(input: &Path, output: &Path, labelled: bool) -> CliResult {
    let records = load_dataset(input, labelled)?;
    let stats = DatasetStats::of(&records);
    let (docs, dropped) = preprocess_all(&records, &StopwordList::english());
    write_cache(output, &docs)?;
    eprintln!(
        "{} records ({} title, {} author, {} text); {} written, {} dropped without text",
        stats.records,
        stats.title,
        stats.author,
        stats.text,
        docs.len(),
        dropped.len()
    );
    Ok(())
}

fn create_dir(dir: &Path) -> CliResult {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e).into())
}

fn cmd_embed(config: &Path, output: Option<PathBuf>) -> CliResult {
    let config = load_config(config)?;
    let docs = load_corpus(&config)?;
    let model: Doc2VecModel = train_doc2vec(&docs, &config.doc2vec)?;
    let path = output.unwrap_or_else(|| config.output_dir.join("vectors.csv"));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    let mut out = String::from("id,label");
    for j in 0..model.dim() {
        out.push_str(&format!(",v{j}"));
    }
    out.push('\n');
    for d in &docs {
        let v = model.doc_vector(d.id)?;
        let label = d.label.map_or_else(String::new, |l| l.to_string());
        out.push_str(&format!("{},{}", d.id, label));
        for x in v.values {
            out.push_str(&format!(",{x}"));
        }
        out.push('\n');
    }
    std::fs::write(&path, out).map_err(|e| Error::io(&path, e))?;
    eprintln!("wrote {} vectors of dimension {} to {}", docs.len(), model.dim(), path.display());
    Ok(())
}

fn cmd_train(config: &RunConfig, bundle: Option<PathBuf>) -> CliResult {
    let mut timer = StageTimer::default();
    let docs = timer.time("load", || load_corpus(config))?;
    let (train, test) = split_corpus(&docs, config)?;
    let pipeline = train_pipeline(config, &train, &test, &mut timer)?;
    let path = bundle.unwrap_or_else(|| config.output_dir.join("model.rlnc"));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    let b = ModelBundle { config: config.clone(), pipeline };
    timer.time("save", || b.save(&path, &timestamp()))?;
    for (stage, secs) in &timer.stages {
        println!("{stage}\t{secs:.2}s");
    }
    println!("bundle\t{}", path.display());
    Ok(())
}

fn cmd_evaluate(config: &RunConfig, bundle: &Path, output: Option<PathBuf>) -> CliResult {
    let b = ModelBundle::load(bundle)?;
    if b.config.digest()? != config.digest()? {
        log::warn!("bundle was trained with a different configuration");
    }
    let docs = load_corpus(config)?;
    let (train, test) = split_corpus(&docs, config)?;
    let report = evaluate_pipeline(&b.pipeline, config, &test, train.len())?;
    let dir = output.unwrap_or_else(|| config.output_dir.clone());
    report.write_all(&dir)?;
    print!("{}", report.to_markdown());
    Ok(())
}

#[derive(Serialize)]
struct BaseScores {
    bilstm: f64,
    logreg: f64,
    svm: f64,
    random_forest: f64,
    naive_bayes: f64,
}

#[derive(Serialize)]
struct PredictionLine {
    id: i64,
    probability: f64,
    label: u8,
    base_scores: BaseScores,
}

#[derive(Serialize)]
struct ErrorLine {
    id: i64,
    error: String,
}

fn prediction_line(id: i64, p: &Prediction) -> PredictionLine {
    let s = p.base_scores;
    PredictionLine {
        id,
        probability: p.probability,
        label: p.label,
        base_scores: BaseScores { bilstm: s[0], logreg: s[1], svm: s[2], random_forest: s[3], naive_bayes: s[4] },
    }
}

fn cmd_predict(bundle: &Path, text: Option<String>, input: Option<PathBuf>) -> CliResult {
    let b = ModelBundle::load(bundle)?;
    let records = match (text, input) {
        (Some(t), None) => {
            let body = Some(t).filter(|t| !t.trim().is_empty());
            vec![RawRecord { id: 0, title: None, author: None, body, label: None }]
        }
        (None, Some(path)) => load_dataset(&path, false)?,
        _ => return Err(Failure::Usage("give exactly one of --text or --input".into())),
    };
    let stopwords = StopwordList::english();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for r in &records {
        let result = preprocess(r, &stopwords).and_then(|d| {
            if d.tokens.is_empty() {
                return Err(Error::MissingText(d.id));
            }
            b.pipeline.predict(&d)
        });
        let line = match result {
            Ok(p) => serde_json::to_string(&prediction_line(r.id, &p)),
            Err(e) if exit_code(&e) == 3 => return Err(e.into()),
            Err(e) => serde_json::to_string(&ErrorLine { id: r.id, error: e.to_string() }),
        }
        .map_err(Error::from)?;
        writeln!(out, "{line}").map_err(|e| Error::io("<stdout>", e))?;
    }
    Ok(())
}

fn cmd_report(input: &Path, format: Format) -> CliResult {
    let text = std::fs::read_to_string(input).map_err(|e| Error::io(input, e))?;
    let report = MetricsReport::from_json(&text)?;
    let body = match format {
        Format::Csv => report.to_csv(),
        Format::Markdown => report.to_markdown(),
        Format::Json => report.to_json()? + "\n",
    };
    print!("{body}");
    Ok(())
}
