//! `camp`: build pinyin-keyed fragment databases and synthesize pseudo-speech.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 validation failures
//! found (`validate` only). Logs go to stderr, results to stdout.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, CommandFactory, Parser, Subcommand};
use tracing::Level;

use config::Config;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Data(e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "camp", version, about = "Pinyin-keyed fragment databases and pseudo-speech synthesis")]
struct Cli {
    /// TOML file of default flag values (keys are flag names without dashes).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Slice aligned recordings into a fragment database.
    BuildDb(BuildDbArgs),
    /// Generate pseudo-utterances and a training manifest from text.
    Synth(SynthArgs),
    /// Summarize a database.
    Stats(StatsArgs),
    /// Check every fragment of a database against its audio file.
    Validate(ValidateArgs),
    /// Report which keys a text corpus needs that a database lacks.
    Coverage(CoverageArgs),
    /// Combine two databases into a new one.
    Merge(MergeArgs),
    /// Write a small synthetic corpus to try the other commands on.
    DemoCorpus(DemoCorpusArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::BuildDb(_) => "build-db",
            Command::Synth(_) => "synth",
            Command::Stats(_) => "stats",
            Command::Validate(_) => "validate",
            Command::Coverage(_) => "coverage",
            Command::Merge(_) => "merge",
            Command::DemoCorpus(_) => "demo-corpus",
        }
    }
}

#[derive(Debug, Args)]
pub struct BuildDbArgs {
    /// Alignment file: `<utt_id> <start_sec> <dur_sec> <char>` per line.
    #[arg(long, value_name = "FILE")]
    pub align: Option<PathBuf>,
    /// Directory holding `<utt_id>.wav` recordings.
    #[arg(long, value_name = "DIR")]
    pub audio_dir: Option<PathBuf>,
    /// Character to pinyin table (`<char>\t<reading>[,<reading>...]`).
    #[arg(long, value_name = "FILE")]
    pub pinyin_table: Option<PathBuf>,
    /// Output database directory; must be empty unless --force.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Aligned characters missing from the table: error or skip.
    #[arg(long, value_name = "POLICY")]
    pub on_unmapped: Option<String>,
    /// Alignment entries whose recording is absent: error or skip.
    #[arg(long, value_name = "POLICY")]
    pub on_missing_audio: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
    /// Delete the contents of --out first.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Fragment database built by build-db.
    #[arg(long, value_name = "DIR")]
    pub db: Option<PathBuf>,
    /// Text corpus: `<utt_id>\t<text>` per line.
    #[arg(long, value_name = "FILE")]
    pub text: Option<PathBuf>,
    /// Output directory for wav/, manifest.tsv and report.json.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Random seed; required, there is no default.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Outputs per text line [default: 1].
    #[arg(long, value_name = "K")]
    pub variants: Option<u32>,
    /// Silence between fragments in milliseconds [default: 0].
    #[arg(long, value_name = "MS")]
    pub gap_ms: Option<f64>,
    /// Lines needing keys the database lacks: error (write nothing) or skip.
    #[arg(long, value_name = "POLICY")]
    pub on_missing: Option<String>,
    /// Characters missing from the table: error, skip or silence [default: skip].
    #[arg(long, value_name = "POLICY")]
    pub on_unmapped: Option<String>,
    /// Look up punctuation and other non-CJK characters instead of dropping them.
    #[arg(long)]
    pub keep_non_cjk: bool,
    /// Pinyin table [default: the copy stored in the database].
    #[arg(long, value_name = "FILE")]
    pub pinyin_table: Option<PathBuf>,
    /// Worker threads (0 = all cores); output does not depend on it.
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
    /// Delete the contents of --out first.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Database directory.
    #[arg(long, value_name = "DIR")]
    pub db: Option<PathBuf>,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Database directory.
    #[arg(long, value_name = "DIR")]
    pub db: Option<PathBuf>,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    /// Database directory.
    #[arg(long, value_name = "DIR")]
    pub db: Option<PathBuf>,
    /// Text corpus: `<utt_id>\t<text>` per line.
    #[arg(long, value_name = "FILE")]
    pub text: Option<PathBuf>,
    /// Pinyin table [default: the copy stored in the database].
    #[arg(long, value_name = "FILE")]
    pub pinyin_table: Option<PathBuf>,
    /// Look up punctuation and other non-CJK characters instead of dropping them.
    #[arg(long)]
    pub keep_non_cjk: bool,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct MergeArgs {
    /// Database whose fragments come first in each key.
    #[arg(long, value_name = "DIR")]
    pub first: Option<PathBuf>,
    /// Second database.
    #[arg(long, value_name = "DIR")]
    pub second: Option<PathBuf>,
    /// Output directory; must be empty unless --force.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Delete the contents of --out first.
    #[arg(long)]
    pub force: bool,
    /// Print JSON instead of a summary line.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct DemoCorpusArgs {
    /// Directory to write the corpus into.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Delete the contents of --out first.
    #[arg(long)]
    pub force: bool,
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => Level::WARN,
        1 => Level::INFO,
        _ => Level::DEBUG,
    };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_max_level(level)
        .with_target(false)
        .init();
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    match cli.command {
        Command::BuildDb(args) => commands::build_db(args, &cfg),
        Command::Synth(args) => commands::synth(args, &cfg),
        Command::Stats(args) => commands::stats(args, &cfg),
        Command::Validate(args) => commands::validate(args, &cfg),
        Command::Coverage(args) => commands::coverage(args, &cfg),
        Command::Merge(args) => commands::merge(args, &cfg),
        Command::DemoCorpus(args) => commands::demo_corpus(args, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_logging(cli.verbose);
    let name = cli.command.name();

    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Usage(msg)) => {
            let mut cmd = Cli::command();
            cmd.build();
            let usage = cmd
                .find_subcommand_mut(name)
                .map(|sub| sub.render_usage().to_string())
                .unwrap_or_default();
            eprintln!("error: {msg}\n\n{usage}\n\nFor more information, try 'camp {name} --help'.");
            ExitCode::from(1)
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
