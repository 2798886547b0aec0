use clap::{Parser, Subcommand};
use grounding::cli::{
    cmd_eval_bless, cmd_eval_cat, cmd_eval_sim, cmd_extract, cmd_neighbors, cmd_train,
    EvalBlessArgs, EvalCatArgs, EvalSimArgs, ExtractArgs, NeighborsArgs, TrainArgs,
};
use std::path::PathBuf;
use std::process::ExitCode;

/// Visually grounded multilingual word embeddings: train the alignment,
/// extract grounded tables, and run the evaluation battery.
#[derive(Parser)]
#[command(name = "grounding", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the grounding model from a TOML run configuration.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Override the master seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the language set, e.g. --languages en,de,ar.
        #[arg(long, value_delimiter = ',')]
        languages: Option<Vec<String>>,
    },
    /// Ground a full embedding table with a trained checkpoint.
    Extract {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Input embedding file (textual space).
        #[arg(long)]
        embeddings: PathBuf,
        /// Output embedding file (grounded space).
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "en")]
        language: String,
    },
    /// Spearman similarity/relatedness over one or more embedding tables.
    EvalSim {
        /// Embedding file(s), repeatable, as name=path or a bare path.
        #[arg(long = "embeddings", required = true)]
        embeddings: Vec<String>,
        /// Benchmark file(s), repeatable, as name=path or a bare path.
        #[arg(long = "benchmark", required = true)]
        benchmarks: Vec<String>,
        #[arg(long, default_value = "en")]
        language: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// k-means + purity categorization benchmarks.
    EvalCat {
        #[arg(long = "embeddings", required = true)]
        embeddings: Vec<String>,
        #[arg(long = "categories", required = true)]
        categories: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        restarts: usize,
        #[arg(long, default_value = "en")]
        language: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-relation cosine profile over concept/relation/relatum tuples.
    EvalBless {
        #[arg(long = "embeddings", required = true)]
        embeddings: Vec<String>,
        #[arg(long)]
        bless: PathBuf,
        #[arg(long, default_value = "en")]
        language: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diff a word's nearest neighbors between two spaces.
    Neighbors {
        #[arg(long)]
        textual: PathBuf,
        #[arg(long)]
        grounded: PathBuf,
        /// Query words, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        words: Vec<String>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value = "en")]
        language: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> grounding::Result<()> {
    match cli.command {
        Command::Train {
            config,
            seed,
            out,
            languages,
        } => cmd_train(&TrainArgs {
            config,
            seed,
            out,
            languages,
        }),
        Command::Extract {
            checkpoint,
            embeddings,
            out,
            language,
        } => cmd_extract(&ExtractArgs {
            checkpoint,
            embeddings,
            out,
            language,
        }),
        Command::EvalSim {
            embeddings,
            benchmarks,
            language,
            out,
        } => cmd_eval_sim(&EvalSimArgs {
            embeddings,
            benchmarks,
            language,
            out,
        }),
        Command::EvalCat {
            embeddings,
            categories,
            seed,
            restarts,
            language,
            out,
        } => cmd_eval_cat(&EvalCatArgs {
            embeddings,
            categories,
            seed,
            restarts,
            language,
            out,
        }),
        Command::EvalBless {
            embeddings,
            bless,
            language,
            out,
        } => cmd_eval_bless(&EvalBlessArgs {
            embeddings,
            bless,
            language,
            out,
        }),
        Command::Neighbors {
            textual,
            grounded,
            words,
            k,
            language,
            out,
        } => cmd_neighbors(&NeighborsArgs {
            textual,
            grounded,
            words,
            k,
            language,
            out,
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error: category={} message=\"{}\"", e.category(), message);
            ExitCode::from(2)
        }
    }
}
