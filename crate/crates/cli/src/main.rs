//! `phytomine`: ingest, extract, relate, index, then serve or query.
//!
//! Exit status: 0 success, 1 partial (some records failed), 2 usage error,
//! 3 fatal.

mod cmd;

use std::net::IpAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "phytomine",
    version,
    about = "Plant-health bulletin extraction and search"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Segment plaintext bulletins or validate a JSONL corpus.
    Ingest(IngestArgs),
    /// Tag every document with dictionary and grammar mentions.
    Extract(ExtractArgs),
    /// Derive crop relations from documents and their mentions.
    Relate(RelateArgs),
    /// Build a search index directory from the stage outputs.
    Index(IndexArgs),
    /// Serve the HTTP JSON API over an index.
    Serve(ServeArgs),
    /// Run one portal query against an index.
    Query(QueryArgs),
    /// List the partners of a species within a region.
    Partners(PartnersArgs),
    /// List the evidence snippets of a relation.
    Citations(CitationsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Text,
    Jsonl,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// A file, or a directory whose `.txt` (text) or `.jsonl` files are read
    /// in name order.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    pub format: InputFormat,
    #[arg(long)]
    pub out: PathBuf,
    /// Longest leading line run still read as a header.
    #[arg(long, default_value_t = 5)]
    pub header_lines: usize,
    #[arg(long, default_value_t = 60)]
    pub title_max_len: usize,
    /// Minimum uppercase share among letters for a title line.
    #[arg(long, default_value_t = 0.8)]
    pub title_upper_ratio: f64,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Thesaurus TSV: canonical_id, concept, surface.
    #[arg(long)]
    pub lexicon: PathBuf,
    /// Local-grammar rule file.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker count; defaults to the number of cores.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RelateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub mentions: PathBuf,
    /// relation.json; built-in defaults when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Also write pair counts and PMI as JSONL.
    #[arg(long)]
    pub cooc: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub mentions: PathBuf,
    #[arg(long)]
    pub relations: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// One region name per line; the 22 pre-2016 French regions by default.
    #[arg(long)]
    pub regions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: IpAddr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Sort {
    DateDesc,
    DateAsc,
}

#[derive(Debug, Args)]
pub struct OutputFormat {
    /// Print JSON.
    #[arg(long, conflicts_with = "table")]
    pub json: bool,
    /// Print an aligned table (default).
    #[arg(long)]
    pub table: bool,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub crop: Option<String>,
    #[arg(long)]
    pub disease: Option<String>,
    #[arg(long)]
    pub pest: Option<String>,
    /// Inclusive lower date bound, YYYY-MM-DD.
    #[arg(long)]
    pub from: Option<NaiveDate>,
    /// Inclusive upper date bound, YYYY-MM-DD.
    #[arg(long)]
    pub to: Option<NaiveDate>,
    /// Free words; every word must occur in the document.
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long)]
    pub region: Option<String>,
    #[arg(long, value_enum, default_value = "date-desc")]
    pub sort: Sort,
    #[command(flatten)]
    pub output: OutputFormat,
}

#[derive(Debug, Args)]
pub struct PartnersArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub region: String,
    /// Canonical id, e.g. `crop:colza`.
    #[arg(long)]
    pub species: String,
    #[command(flatten)]
    pub output: OutputFormat,
}

#[derive(Debug, Args)]
pub struct CitationsArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub subject: String,
    #[arg(long)]
    pub object: String,
    #[arg(long)]
    pub region: Option<String>,
    #[command(flatten)]
    pub output: OutputFormat,
}

/// Why a command did not fully succeed.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Fatal(String),
}

/// Whether every record made it through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Complete,
    Partial,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => cmd::ingest(&a),
        Command::Extract(a) => cmd::extract(&a),
        Command::Relate(a) => cmd::relate(&a),
        Command::Index(a) => cmd::index(&a),
        Command::Serve(a) => cmd::serve(&a),
        Command::Query(a) => cmd::query(&a),
        Command::Partners(a) => cmd::partners(&a),
        Command::Citations(a) => cmd::citations(&a),
    };
    match result {
        Ok(Outcome::Complete) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            let mut command = Cli::command();
            let err = command.error(clap::error::ErrorKind::ArgumentConflict, msg);
            let _ = err.print();
            ExitCode::from(2)
        }
        Err(Failure::Fatal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
