//! Command-line workbench: dataset generation, tokenization, validation,
//! SVG rendering, training, sampling, evaluation, and dataset statistics.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation/grammar failure,
//! 3 runtime failure. `PATTERNLM_THREADS` caps internal parallelism.

mod commands;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "patternlm", version, about = "Sewing-pattern tokenization workbench")]
struct Cli {
    /// Cap worker threads (overrides PATTERNLM_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Verbosity (-v, -vv).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Generate a procedural multimodal dataset.
    Gen {
        /// Number of base samples.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode a pattern file to its token stream.
    Tokenize {
        pattern_file: PathBuf,
        /// Vocabulary file (with embedded normalization stats).
        #[arg(long)]
        vocab: PathBuf,
        /// Override normalization stats from a separate JSON file.
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Write the full JSONL record (tokens + payloads) here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode a token-stream JSONL record back into a pattern file.
    Detokenize {
        stream_file: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        stats: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a pattern file against every structural invariant.
    Validate { pattern_file: PathBuf },
    /// Render panels (and stitch pairing) to an SVG.
    Render {
        pattern_file: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the model on an emitted dataset.
    Train {
        /// Dataset directory (with manifest.json).
        dataset: PathBuf,
        /// JSON run configuration; flags override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Regression-loss weight.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Sample a pattern from a prompt.
    Sample {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        /// Prompt words, whitespace separated.
        #[arg(long)]
        prompt: String,
        /// Greedy decoding (default).
        #[arg(long)]
        greedy: bool,
        /// Temperature sampling.
        #[arg(long)]
        temperature: Option<f64>,
        #[arg(long, default_value_t = 1024)]
        max_len: usize,
        /// Disable grammar-constrained decoding.
        #[arg(long)]
        no_grammar_constraint: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Pattern file to write.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare predicted pattern files against ground truth by filename.
    Eval {
        pred_dir: PathBuf,
        gt_dir: PathBuf,
        /// Directory for the report and the per-pair JSONL breakdown.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dataset statistics: token lengths, families, edge types.
    Stats { dataset: PathBuf },
}

/// Failure with an exit-code category.
#[derive(Debug)]
pub enum AppError {
    Usage(String),
    Validation(String),
    Runtime(anyhow::Error),
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            Self::Usage(_) => 1,
            Self::Validation(_) => 2,
            Self::Runtime(_) => 3,
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for AppError {
    fn from(e: E) -> Self {
        Self::Runtime(e.into())
    }
}

fn init_threads(flag: Option<usize>) {
    let from_env = std::env::var("PATTERNLM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    if let Some(n) = flag.or(from_env) {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    init_threads(cli.threads);
    match cli.cmd {
        Cmd::Gen { n, seed, out } => commands::gen::run(n, seed, &out),
        Cmd::Tokenize {
            pattern_file,
            vocab,
            stats,
            out,
        } => commands::tokenize::tokenize(&pattern_file, &vocab, stats.as_deref(), out.as_deref()),
        Cmd::Detokenize {
            stream_file,
            vocab,
            stats,
            out,
        } => commands::tokenize::detokenize(&stream_file, &vocab, stats.as_deref(), out.as_deref()),
        Cmd::Validate { pattern_file } => commands::validate::run(&pattern_file),
        Cmd::Render { pattern_file, out } => commands::render::run(&pattern_file, &out),
        Cmd::Train {
            dataset,
            config,
            out,
            seed,
            lambda,
            steps,
        } => commands::train::run(&dataset, config.as_deref(), &out, seed, lambda, steps),
        Cmd::Sample {
            checkpoint,
            vocab,
            prompt,
            greedy,
            temperature,
            max_len,
            no_grammar_constraint,
            seed,
            out,
        } => commands::sample::run(commands::sample::Args {
            checkpoint,
            vocab,
            prompt,
            greedy,
            temperature,
            max_len,
            no_grammar_constraint,
            seed,
            out,
        }),
        Cmd::Eval {
            pred_dir,
            gt_dir,
            out,
        } => commands::eval::run(&pred_dir, &gt_dir, out.as_deref()),
        Cmd::Stats { dataset } => commands::stats::run(&dataset),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are success, anything else is usage
            use clap::error::ErrorKind;
            let _ = e.print();
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            match &err {
                AppError::Usage(m) => eprintln!("usage error: {m}"),
                AppError::Validation(m) => eprintln!("{m}"),
                AppError::Runtime(e) => eprintln!("error: {e}"),
            }
            ExitCode::from(err.code())
        }
    }
}
