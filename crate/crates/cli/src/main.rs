//! `annogold`: the annotation pipeline from the command line.
//!
//! Exit status: 0 on success, 1 when input fails validation (or a check such
//! as `lint --strict` or `qualify` does not pass), 2 on usage errors.

use std::path::PathBuf;
use std::process::ExitCode;

use annogold::corpus_io::CorpusFormat;
use annogold::stats::KappaMode;
use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "annogold", version, about = "Build and analyse gold-standard error annotations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Split a text into tokens, or write it out as a corpus document.
    Tokenize(TokenizeArgs),
    /// Report suspicious annotations without changing anything.
    Lint(LintArgs),
    /// Apply the guideline rules, cluster and vote; write the gold standard.
    Adjudicate(AdjudicateArgs),
    /// Fleiss' kappa over the annotation clusters.
    Kappa(KappaArgs),
    /// Majority label against minority labels, per cluster.
    Confusion(ConfusionArgs),
    /// Mean gold errors per story for each generating system.
    Profile(ProfileArgs),
    /// Recall and precision of a metric's reported errors against gold.
    ValidateMetric(ValidateMetricArgs),
    /// Score a candidate annotator on a reference document.
    Qualify(QualifyArgs),
    /// Run the annotation service.
    Serve(ServeArgs),
    /// Submit an annotation set to a running service.
    Submit(SubmitArgs),
    /// Show per-document progress from a running service.
    Status(StatusArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Native,
    ReleasedCorpus,
}

impl From<Format> for CorpusFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Native => CorpusFormat::Native,
            Format::ReleasedCorpus => CorpusFormat::ReleasedCorpus,
        }
    }
}

#[derive(Args, Debug)]
struct CorpusArgs {
    /// Corpus directory.
    #[arg(long = "in", value_name = "DIR")]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "native")]
    format: Format,
}

#[derive(Args, Debug)]
struct TokenizeArgs {
    /// Plain text file, or `-` for stdin.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Write a corpus document into this corpus directory instead of listing tokens.
    #[arg(long, value_name = "DIR", requires = "doc_id")]
    out: Option<PathBuf>,
    #[arg(long)]
    doc_id: Option<String>,
    #[arg(long, default_value = "")]
    system: String,
}

#[derive(Args, Debug)]
struct LintArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Exit 1 when there are warnings.
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Debug)]
struct AdjudicateArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Gold output: a `.json` file, or a directory that receives `gold.json`.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Fail when a guideline rule had to be skipped.
    #[arg(long)]
    strict: bool,
    /// Print the breakdown as CSV.
    #[arg(long)]
    csv: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    IncludeMisses,
    ExcludeMisses,
    Both,
}

impl Mode {
    fn modes(self) -> Vec<KappaMode> {
        match self {
            Mode::IncludeMisses => vec![KappaMode::IncludeMisses],
            Mode::ExcludeMisses => vec![KappaMode::ExcludeMisses],
            Mode::Both => KappaMode::ALL.to_vec(),
        }
    }
}

#[derive(Args, Debug)]
struct KappaArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, value_enum, default_value = "both")]
    mode: Mode,
    #[arg(long)]
    csv: bool,
}

#[derive(Args, Debug)]
struct ConfusionArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    csv: bool,
}

#[derive(Args, Debug)]
struct ProfileArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Gold file or directory written by `adjudicate`. Adjudicates the corpus when absent.
    #[arg(long, value_name = "PATH")]
    gold: Option<PathBuf>,
    #[arg(long)]
    csv: bool,
}

#[derive(Args, Debug)]
struct ValidateMetricArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, value_name = "PATH")]
    gold: PathBuf,
    /// Metric report (JSON).
    #[arg(long, value_name = "FILE")]
    metric: PathBuf,
    /// Token distance allowed between a tuple's entity and the gold span.
    #[arg(long, default_value_t = 10)]
    window: usize,
    #[arg(long, conflicts_with = "json")]
    csv: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct QualifyArgs {
    /// Candidate annotation set (JSON).
    #[arg(long, value_name = "FILE")]
    candidate: PathBuf,
    /// Score through a running service instead of locally.
    #[arg(long, value_name = "URL", conflicts_with_all = ["input", "gold", "reference_doc"])]
    server: Option<String>,
    #[arg(long, env = "ANNOGOLD_TOKEN", requires = "server")]
    token: Option<String>,
    /// Corpus holding the reference document.
    #[arg(long = "in", value_name = "DIR", required_unless_present = "server")]
    input: Option<PathBuf>,
    #[arg(long, default_value = "native")]
    format: Format,
    #[arg(long)]
    reference_doc: Option<String>,
    /// Reference gold; by default the reference document is adjudicated from the corpus.
    #[arg(long, value_name = "PATH")]
    gold: Option<PathBuf>,
    #[arg(long, default_value_t = annogold::qualification::DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Credit a found span even when its category is wrong.
    #[arg(long)]
    span_only: bool,
}

#[derive(Args, Debug)]
struct ServeArgs {
    /// Service config (TOML).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Corpus directory; overrides the config file.
    #[arg(long = "in", value_name = "DIR")]
    input: Option<PathBuf>,
    /// Annotation sets wanted per document.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    port: Option<u16>,
    #[arg(long)]
    host: Option<String>,
}

#[derive(Args, Debug)]
struct SubmitArgs {
    #[arg(long, value_name = "URL")]
    server: String,
    #[arg(long, env = "ANNOGOLD_TOKEN")]
    token: Option<String>,
    /// Annotation set to submit (JSON).
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
}

#[derive(Args, Debug)]
struct StatusArgs {
    #[arg(long, value_name = "URL")]
    server: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
