mod backends;
mod commands;
mod error;

use citeval::model::{CompressionMode, DatasetKind, InstructionVariant, Strategy};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

/// Retrieval, citation-aware generation and evaluation runs.
#[derive(Debug, Parser)]
#[command(name = "citeval", version)]
struct Cli {
    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Attach the top-k passages from a corpus to every question.
    Retrieve(RetrieveArgs),
    /// Generate answers with one prompting strategy.
    Generate(GenerateArgs),
    /// Score generation files against their dataset.
    Eval(EvalArgs),
    /// Generate the three sub-claims for ELI5 records that lack them.
    Claims(ClaimsArgs),
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Question records (JSON array or JSON lines).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// bm25, dense (remote embeddings) or hash (local hashed embeddings).
    #[arg(long, default_value = "bm25")]
    pub retriever: String,
    #[arg(short, long, default_value_t = 100)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Demonstration pool: JSON list of {question, docs, answer}.
    #[arg(long)]
    pub demos: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<DatasetKind>,
    #[arg(long)]
    pub strategy: Option<Strategy>,
    #[arg(long)]
    pub ndoc: Option<usize>,
    #[arg(long)]
    pub shot: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub rerank: bool,
    #[arg(long)]
    pub rerank_samples: Option<usize>,
    #[arg(long)]
    pub post_cite: bool,
    #[arg(long)]
    pub instruction: Option<InstructionVariant>,
    #[arg(long)]
    pub compression: Option<CompressionMode>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_actions: Option<usize>,
    #[arg(long)]
    pub model: Option<String>,
    /// remote or scripted:PATH
    #[arg(long, default_value = "remote")]
    pub llm: String,
    /// Oracle used for reranking: remote, substring or table:PATH.
    #[arg(long, default_value = "remote")]
    pub oracle: String,
    /// Embedder for inline search and post-hoc citation: hash or remote.
    #[arg(long, default_value = "hash")]
    pub embedder: String,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Dataset with gold annotations.
    #[arg(long)]
    pub input: PathBuf,
    /// One generation file, or several seeds with --aggregate.
    #[arg(long, num_args = 1.., required = true)]
    pub generation: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// remote, substring or table:PATH
    #[arg(long, default_value = "remote")]
    pub oracle: String,
    /// auto, none, remote or constant:VALUE
    #[arg(long, default_value = "auto")]
    pub fluency: String,
    /// Combine the per-seed reports into mean (std).
    #[arg(long)]
    pub aggregate: bool,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct ClaimsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// remote or scripted:PATH
    #[arg(long, default_value = "remote")]
    pub llm: String,
    #[arg(long)]
    pub model: Option<String>,
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Retrieve(a) => commands::retrieve(&a),
        Command::Generate(a) => commands::generate(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Claims(a) => commands::claims(&a),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
