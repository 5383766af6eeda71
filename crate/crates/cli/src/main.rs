//! `checkworthy` command-line interface.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::CommonFlags;

#[derive(Debug, Parser)]
#[command(
    name = "checkworthy",
    version,
    about = "Rank debate sentences by check-worthiness"
)]
struct Cli {
    #[command(flatten)]
    common: CommonFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Report duplicate lines, empty texts and label counts.
    Validate {
        /// Transcript directories.
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Fit extractor state and the ranker; write a model bundle.
    Train {
        /// Labeled training transcripts (overrides `train_dir`).
        #[arg(long)]
        train_dir: Option<PathBuf>,
        /// Output bundle path.
        #[arg(long, short)]
        model: PathBuf,
    },
    /// Score transcripts and write one run file per debate.
    Rank {
        #[arg(long, short)]
        model: PathBuf,
        /// Transcripts to rank (overrides `test_dir`).
        #[arg(long)]
        input_dir: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Demotion rules, e.g. `short,no-info` (overrides the config).
        #[arg(long)]
        rules: Option<String>,
    },
    /// Score run files against gold labels.
    Evaluate {
        /// Labeled transcripts.
        #[arg(long)]
        gold_dir: PathBuf,
        /// Run files named after the transcripts they rank.
        #[arg(long)]
        run_dir: PathBuf,
        /// Write the full report (per-query values included) as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Train and evaluate one model per feature-block subset.
    Ablate {
        #[arg(long)]
        train_dir: Option<PathBuf>,
        #[arg(long)]
        test_dir: Option<PathBuf>,
        /// Subsets separated by `;`, baseline first, e.g. `sf;sbert;sbert,sf`.
        #[arg(long)]
        subsets: String,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Write training transcripts extended with synonym-substituted copies.
    Augment {
        #[arg(long)]
        train_dir: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Word vector file (overrides `augment.word_vectors`).
        #[arg(long)]
        word_vectors: Option<PathBuf>,
        /// POS sidecar file (overrides `augment.pos_sidecar`).
        #[arg(long)]
        pos_sidecar: Option<PathBuf>,
        #[arg(long)]
        min_sim: Option<f64>,
        #[arg(long)]
        max_copies: Option<usize>,
    },
    /// Topic model inspection.
    Topics {
        #[command(subcommand)]
        action: TopicsCommand,
    },
    /// Embedding cache management.
    Embed {
        #[command(subcommand)]
        action: EmbedCommand,
    },
    /// Generate a labeled synthetic corpus.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 5)]
        debates: usize,
        #[arg(long, default_value_t = 100)]
        sentences: usize,
        #[arg(long, default_value_t = 0.2)]
        positive_rate: f64,
    },
}

#[derive(Debug, Subcommand)]
enum TopicsCommand {
    /// Print the top words of every topic in a bundle.
    Show {
        #[arg(long, short)]
        model: PathBuf,
        #[arg(long, default_value_t = 10)]
        top_n: usize,
    },
}

#[derive(Debug, Subcommand)]
enum EmbedCommand {
    /// Embed every sentence of the given directories into a vector file.
    Cache {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
