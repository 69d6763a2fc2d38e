//! The `xlchat` command line: one subcommand per pipeline stage plus the
//! chat service. Every successful run prints a one-line JSON summary on
//! stdout; failures exit with 1 (validation), 2 (I/O) or 3 (backend/model).

mod commands;
mod error;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use xlchat_core::labeling::AggregationRule;
use xlchat_core::CtxPolicy;

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "xlchat", version, about = "Erroneous chat-translation detection toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Keep the chats most often rated coherent.
    FilterChats(FilterChats),
    /// Translate every utterance with each configured backend.
    TranslateCorpus(TranslateCorpus),
    /// Aggregate crowd ratings into candidate verdicts.
    AggregateLabels(AggregateLabels),
    /// Build labeled detector examples from chats and verdicted candidates.
    BuildDataset(BuildDataset),
    /// Train the error detector.
    TrainDetector(TrainDetector),
    /// Score predictions against labels.
    Evaluate(Evaluate),
    /// List erroneous translations that nonetheless score high BLEU.
    ReportBleu(ReportBleu),
    /// Run the chat service.
    Serve(Serve),
}

#[derive(Debug, Args)]
pub struct FilterChats {
    /// Coherence ratings (JSONL).
    #[arg(long)]
    pub ratings: PathBuf,
    /// Selection summary (JSON).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub top: usize,
    #[arg(long, default_value_t = xlchat_core::coherence::DEFAULT_MIN_VOTES)]
    pub min_coherent: usize,
    /// Expected raters per chat; chats rated by a different number are reported.
    #[arg(long, default_value_t = xlchat_core::coherence::DEFAULT_RATERS)]
    pub raters: usize,
    /// Chats to subset (JSONL); requires --chats-out.
    #[arg(long, requires = "chats_out")]
    pub chats: Option<PathBuf>,
    #[arg(long, requires = "chats")]
    pub chats_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TranslateCorpus {
    #[arg(long)]
    pub chats: PathBuf,
    /// Candidates (JSONL).
    #[arg(long)]
    pub out: PathBuf,
    /// TOML file with `[backend.<name>]` tables.
    #[arg(long)]
    pub config: PathBuf,
    /// Backend names to use; all configured backends when omitted.
    #[arg(long = "backend")]
    pub backends: Vec<String>,
    /// Overrides the seed of every mock backend.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct AggregateLabels {
    #[arg(long)]
    pub chats: PathBuf,
    #[arg(long)]
    pub candidates: PathBuf,
    /// Translation ratings (JSONL).
    #[arg(long)]
    pub ratings: PathBuf,
    /// Candidates with verdicts (JSONL).
    #[arg(long)]
    pub out: PathBuf,
    /// Dataset statistics (JSON).
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// majority, majority-ties-correct or any-bad.
    #[arg(long, default_value = "majority", value_parser = parse_rule)]
    pub rule: AggregationRule,
}

#[derive(Debug, Args)]
pub struct BuildDataset {
    #[arg(long)]
    pub chats: PathBuf,
    /// Candidates with verdicts (JSONL).
    #[arg(long)]
    pub candidates: PathBuf,
    /// Labeled examples (JSONL).
    #[arg(long)]
    pub out: PathBuf,
    /// human, first-correct, or first-correct:<origin>,...
    #[arg(long, default_value = "first-correct", value_parser = parse_policy)]
    pub ctx_policy: CtxPolicy,
}

#[derive(Debug, Args)]
pub struct TrainDetector {
    /// Labeled examples (JSONL).
    #[arg(long)]
    pub examples: PathBuf,
    /// Model directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Detector TOML; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct Evaluate {
    /// Labeled examples (JSONL).
    #[arg(long)]
    pub examples: PathBuf,
    /// Existing predictions (JSONL).
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    pub predictions: Option<PathBuf>,
    /// Model directory; predictions are computed when given.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Where to save computed predictions (JSONL).
    #[arg(long, requires = "model")]
    pub predictions_out: Option<PathBuf>,
    /// Report (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Text tables.
    #[arg(long)]
    pub text: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportBleu {
    #[arg(long)]
    pub examples: PathBuf,
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Report (JSON).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub text: Option<PathBuf>,
    #[arg(long, default_value_t = 70.0)]
    pub threshold: f64,
    /// whitespace or whitespace-punct.
    #[arg(long, default_value = "whitespace-punct")]
    pub tokenizer: xlchat_core::evaluation::BleuTokenizer,
    /// none, add-one, epsilon or epsilon:<value>.
    #[arg(long, default_value = "add-one")]
    pub smoothing: xlchat_core::evaluation::Smoothing,
    #[arg(long, default_value_t = 4)]
    pub max_ngram: usize,
}

#[derive(Debug, Args)]
pub struct Serve {
    /// Service TOML.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub host: Option<String>,
    #[arg(long)]
    pub port: Option<u16>,
    /// Detector model directory.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub storage: Option<PathBuf>,
}

fn parse_rule(s: &str) -> Result<AggregationRule, String> {
    s.parse()
}

fn parse_policy(s: &str) -> Result<CtxPolicy, String> {
    s.parse()
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::execute(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
