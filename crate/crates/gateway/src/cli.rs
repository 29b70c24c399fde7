//! The `nlu` command line. Exit codes: 0 success, 1 usage error, 2 runtime
//! error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand};
use nlu_core::corpora::{
    load_banking, load_gmb, load_isear, load_sentiment, ClassificationCorpus, LoadOptions,
    SentimentSchema, TaggedCorpus,
};
use nlu_core::engine::{load_bundle, save_bundle, AnalysisRecord, Engine};
use nlu_core::taskmodels::{
    fit, prepare_classification, prepare_tagged, Arch, Evaluation, PreparedTask, Task, TaskConfig,
};
use nlu_core::{Error, Execution};
use serde_json::json;

use crate::service::{self, AppState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

pub const HISTORY_FILE: &str = "history.tsv";
pub const CONFUSION_FILE: &str = "confusion.tsv";

#[derive(Debug, Parser)]
#[command(
    name = "nlu",
    version,
    about = "Train, evaluate and serve the sentiment, emotion, intent and entity models"
)]
pub struct Cli {
    /// Directory with one bundle per task, laid out as `<dir>/<task>/`.
    #[arg(long, env = "NLU_MODEL_DIR", default_value = "models", global = true)]
    pub model_dir: PathBuf,

    /// Run batch work on the calling thread only.
    #[arg(long, global = true)]
    pub sequential: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and split a dataset, then report its statistics.
    Prepare(DataArgs),
    /// Train one task and write its bundle and history.
    Train(TrainArgs),
    /// Score a bundle on a labelled dataset and write its confusion matrix.
    Evaluate(EvaluateArgs),
    /// Analyze one utterance with all four bundles, or one head with --task.
    Predict(PredictArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Read utterances from stdin and print the four analyses for each.
    Chat,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub task: Task,
    /// Dataset file: IMDB or Twitter CSV, ISEAR CSV, banking CSV, or GMB CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Sentiment column layout; detected from the header when omitted.
    #[arg(long)]
    pub schema: Option<SentimentSchema>,
    /// Keep at most this many examples (sentences for ner).
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub arch: Option<Arch>,
    /// Pretrained word-vector file (GloVe text format).
    #[arg(long, conflicts_with = "no_glove")]
    pub glove: Option<PathBuf>,
    /// Train the embedding from scratch even where the task defaults to GloVe.
    #[arg(long)]
    pub no_glove: bool,
    /// Bundle directory; defaults to `<model-dir>/<task>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Bundle directory; defaults to `<model-dir>/<task>`.
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    /// Confusion matrix output; defaults to `<bundle>/confusion.tsv`.
    #[arg(long)]
    pub confusion: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub text: String,
    /// Run only this head, loading only its bundle.
    #[arg(long)]
    pub task: Option<Task>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
}

enum Failure {
    /// Bad invocation; help for `subcommand` is printed after the message.
    Usage {
        message: String,
        subcommand: Option<&'static str>,
    },
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Usage(_) | Error::Validation(_) => Failure::Usage {
                message: e.to_string(),
                subcommand: None,
            },
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn usage(message: impl Into<String>, subcommand: &'static str) -> Failure {
    Failure::Usage {
        message: message.into(),
        subcommand: Some(subcommand),
    }
}

/// Parse `args` (program name first) and run. Never exits the process.
pub fn run<I, T>(
    args: I,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let result = match &cli.command {
        Command::Prepare(a) => prepare(a, stdout),
        Command::Train(a) => train(a, &cli.model_dir, exec, stdout, stderr),
        Command::Evaluate(a) => evaluate(a, &cli.model_dir, exec, stdout),
        Command::Predict(a) => predict(a, &cli.model_dir, stdout),
        Command::Serve(a) => serve(a, &cli.model_dir),
        Command::Chat => chat(&cli.model_dir, stdin, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage {
            message,
            subcommand,
        }) => {
            let _ = writeln!(stderr, "error: {message}");
            if let Some(name) = subcommand {
                if let Some(sub) = Cli::command().find_subcommand_mut(name) {
                    let _ = writeln!(stderr, "\n{}", sub.render_help());
                }
            }
            EXIT_USAGE
        }
        Err(Failure::Runtime(message)) => {
            let _ = writeln!(stderr, "error: {message}");
            EXIT_RUNTIME
        }
    }
}

enum Dataset {
    Classification(ClassificationCorpus),
    Tagged(TaggedCorpus),
}

impl Dataset {
    fn prepare(&self, cfg: &TaskConfig) -> Result<PreparedTask, Error> {
        match self {
            Dataset::Classification(c) => prepare_classification(c, cfg),
            Dataset::Tagged(c) => prepare_tagged(c, cfg),
        }
    }

    fn counts(&self) -> (usize, usize, usize) {
        let r = match self {
            Dataset::Classification(c) => c.report,
            Dataset::Tagged(c) => c.report,
        };
        (r.rows_read, r.rows_kept, r.rows_dropped)
    }
}

fn load_dataset(args: &DataArgs, subcommand: &'static str) -> Result<Dataset, Failure> {
    if !args.data.is_file() {
        return Err(usage(
            format!("dataset file {} does not exist", args.data.display()),
            subcommand,
        ));
    }
    if args.schema.is_some() && args.task != Task::Sentiment {
        return Err(usage(
            "--schema only applies to --task sentiment",
            subcommand,
        ));
    }
    let opts = LoadOptions::limit(args.limit);
    let path = &args.data;
    let data = match args.task {
        Task::Sentiment => Dataset::Classification(match args.schema {
            Some(schema) => load_sentiment(path, schema, opts)?,
            None => match load_sentiment(path, SentimentSchema::Imdb, opts) {
                Err(Error::Parse { line: 1, .. }) => {
                    load_sentiment(path, SentimentSchema::Twitter, opts)?
                }
                other => other?,
            },
        }),
        Task::Emotion => Dataset::Classification(load_isear(path, opts)?),
        Task::Intent => Dataset::Classification(load_banking(path, opts)?),
        Task::Ner => Dataset::Tagged(load_gmb(path, opts)?),
    };
    Ok(data)
}

fn print_json(stdout: &mut dyn Write, value: &impl serde::Serialize) -> Result<(), Failure> {
    let line = serde_json::to_string(value).map_err(|e| Failure::Runtime(e.to_string()))?;
    writeln!(stdout, "{line}")?;
    Ok(())
}

fn prepare(args: &DataArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let data = load_dataset(args, "prepare")?;
    let prepared = data.prepare(&TaskConfig::for_task(args.task))?;
    let (read, kept, dropped) = data.counts();
    print_json(
        stdout,
        &json!({
            "task": args.task,
            "rows_read": read,
            "rows_kept": kept,
            "rows_dropped": dropped,
            "labels": prepared.label_names.len(),
            "train": prepared.train.len(),
            "validation": prepared.validation.len(),
            "test": prepared.test.len(),
            "vocab_size": prepared.vocab.len(),
            "max_len": prepared.preprocess.max_len,
        }),
    )
}

fn train_config(args: &TrainArgs) -> Result<TaskConfig, Failure> {
    let task = args.data.task;
    let mut cfg = TaskConfig::with_arch(task, args.arch.unwrap_or(task.default_arch()));
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(epochs) = args.epochs {
        cfg.epochs = epochs;
    }
    if let Some(batch) = args.batch {
        cfg.batch_size = batch;
    }
    if args.no_glove {
        cfg.use_glove = false;
    }
    if args.glove.is_some() {
        cfg.use_glove = true;
    }
    if let Some(glove) = &args.glove {
        if !glove.is_file() {
            return Err(usage(
                format!("vector file {} does not exist", glove.display()),
                "train",
            ));
        }
    }
    cfg.validate().map_err(|e| usage(e.to_string(), "train"))?;
    Ok(cfg)
}

fn train(
    args: &TrainArgs,
    model_dir: &Path,
    exec: Execution,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), Failure> {
    let cfg = train_config(args)?;
    let data = load_dataset(&args.data, "train")?;
    let prepared = data.prepare(&cfg)?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| model_dir.join(cfg.task.name()));
    let trained = fit(&prepared, args.glove.as_deref(), exec, |r| {
        let _ = writeln!(
            stderr,
            "epoch {:>3}  loss {:.4}  acc {:.4}  val_loss {:.4}  val_acc {:.4}",
            r.epoch, r.train_loss, r.train_accuracy, r.val_loss, r.val_accuracy
        );
    })?;
    save_bundle(&trained.bundle, &out)?;
    trained.outcome.history.write(out.join(HISTORY_FILE))?;
    let best = trained.outcome.history.best();
    print_json(
        stdout,
        &json!({
            "task": cfg.task,
            "arch": cfg.arch,
            "bundle": out,
            "fingerprint": trained.bundle.fingerprint(),
            "best_epoch": best.epoch,
            "val_loss": best.val_loss,
            "val_accuracy": best.val_accuracy,
            "train_accuracy": best.train_accuracy,
            "test_accuracy": trained.test.as_ref().map(|t| t.accuracy),
            "glove_coverage": trained.glove_coverage,
        }),
    )
}

/// Tab-separated matrix, rows are true labels, columns predictions.
pub fn confusion_tsv(labels: &[String], eval: &Evaluation) -> String {
    let mut out = String::from("true\\pred");
    for l in labels {
        let _ = write!(out, "\t{l}");
    }
    out.push('\n');
    for (l, row) in labels.iter().zip(&eval.confusion) {
        out.push_str(l);
        for n in row {
            let _ = write!(out, "\t{n}");
        }
        out.push('\n');
    }
    out
}

fn evaluate(
    args: &EvaluateArgs,
    model_dir: &Path,
    exec: Execution,
    stdout: &mut dyn Write,
) -> Result<(), Failure> {
    let task = args.data.task;
    let dir = args
        .bundle
        .clone()
        .unwrap_or_else(|| model_dir.join(task.name()));
    let bundle = load_bundle(&dir)?;
    if bundle.task() != task {
        return Err(usage(
            format!(
                "{} holds a {} bundle, not {task}",
                dir.display(),
                bundle.task()
            ),
            "evaluate",
        ));
    }
    let eval = match load_dataset(&args.data, "evaluate")? {
        Dataset::Classification(c) => bundle.evaluate_classification(&c, exec)?,
        Dataset::Tagged(c) => bundle.evaluate_tagged(&c, exec)?,
    };
    let path = args
        .confusion
        .clone()
        .unwrap_or_else(|| dir.join(CONFUSION_FILE));
    fs::write(&path, confusion_tsv(&bundle.label_names, &eval))?;
    print_json(
        stdout,
        &json!({
            "task": task,
            "loss": eval.loss,
            "accuracy": eval.accuracy,
            "count": eval.count,
            "confusion": path,
        }),
    )
}

fn predict(args: &PredictArgs, model_dir: &Path, stdout: &mut dyn Write) -> Result<(), Failure> {
    if args.text.trim().is_empty() {
        return Err(usage("--text must not be empty", "predict"));
    }
    let Some(task) = args.task else {
        let engine = Engine::load(model_dir)?;
        return print_json(stdout, &engine.analyze(&args.text)?);
    };
    let bundle = load_bundle(model_dir.join(task.name()))?;
    let text = &args.text;
    match task {
        Task::Sentiment => print_json(stdout, &bundle.predict_sentiment(text)?),
        Task::Emotion => print_json(stdout, &bundle.predict_emotion(text)?),
        Task::Intent => print_json(stdout, &bundle.get_intent(text, bundle.label_names.len())?),
        Task::Ner => print_json(stdout, &bundle.tag_entities(text)?),
    }
}

fn serve(args: &ServeArgs, model_dir: &Path) -> Result<(), Failure> {
    let runtime = tokio::runtime::Runtime::new()?;
    let state = AppState::default();
    let loader = state.clone();
    let dir = model_dir.to_path_buf();
    runtime.block_on(async move {
        tokio::task::spawn_blocking(move || match Engine::load(&dir) {
            Ok(engine) => {
                eprintln!("loaded bundles from {}", dir.display());
                loader.install(engine);
            }
            Err(Error::NotReady { missing }) => {
                eprintln!(
                    "bundles missing under {}: {}",
                    dir.display(),
                    missing.join(", ")
                );
                loader.mark_missing(missing);
            }
            Err(e) => eprintln!("failed to load bundles from {}: {e}", dir.display()),
        });
        service::serve(state, SocketAddr::new(args.host, args.port)).await
    })?;
    Ok(())
}

/// Four-line text rendering of a record, as printed by `chat`.
pub fn render_record(r: &AnalysisRecord) -> String {
    let intents: Vec<String> = r
        .intent
        .iter()
        .map(|i| format!("{} ({:.3})", i.name, i.p))
        .collect();
    let entities: Vec<String> = r
        .entities
        .iter()
        .map(|e| format!("{}/{}", e.token, e.tag))
        .collect();
    let emotion_p = r
        .emotion
        .scores
        .iter()
        .find(|(l, _)| *l == r.emotion.label)
        .map_or(0.0, |(_, p)| *p);
    format!(
        "sentiment: {} ({:.3})\nemotion:   {} ({:.3})\nintent:    {}\nentities:  {}\n",
        r.sentiment.label,
        r.sentiment.score,
        r.emotion.label,
        emotion_p,
        intents.join(", "),
        if entities.is_empty() {
            "-".to_owned()
        } else {
            entities.join(" ")
        },
    )
}

fn chat(model_dir: &Path, stdin: &mut dyn BufRead, stdout: &mut dyn Write) -> Result<(), Failure> {
    let engine = Engine::load(model_dir)?;
    let mut line = String::new();
    loop {
        line.clear();
        if stdin.read_line(&mut line)? == 0 {
            return Ok(());
        }
        let text = line.trim();
        match text {
            "" => continue,
            "quit" | "exit" => return Ok(()),
            _ => {}
        }
        writeln!(stdout, "{}", render_record(&engine.analyze(text)?))?;
        stdout.flush()?;
    }
}
