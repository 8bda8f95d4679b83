//! `lexmorph` — estimate form/meaning mappings over n-gram form spaces and
//! run the productivity analyses built on them.
//!
//! Exit codes: 0 success, 1 runtime failure (stage named on stderr), 2 usage
//! error.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

mod cmd;

/// Output directory resolution: flag, then LEXMORPH_OUT, then ".".
fn resolve_out(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("LEXMORPH_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

#[derive(Parser)]
#[command(name = "lexmorph", version, about = "Form-meaning mappings and morphological productivity analytics", propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config file (flat key = value lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: $LEXMORPH_OUT or the working directory).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Join a lexicon with embeddings and report coverage losses.
    Ingest(ConfigArgs),
    /// Draw the configured train/test split with cue and tag coverage repair.
    Split {
        #[command(flatten)]
        common: ConfigArgs,
        /// Override the experiment seed (random splits).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train the configured mappings and save their containers.
    Train {
        #[command(flatten)]
        common: ConfigArgs,
        /// Train only this method (eol, fil, deep).
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Apply a saved mapping to a dataset subset and write predicted vectors.
    Predict {
        #[command(flatten)]
        common: ConfigArgs,
        /// Mapping container written by `train` or `run`.
        #[arg(long)]
        mapping: PathBuf,
        /// Cue index JSON written alongside the mapping.
        #[arg(long)]
        cues: PathBuf,
        /// Which words to predict: train, test, or all.
        #[arg(long, default_value = "all")]
        subset: String,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score predicted vectors against gold embeddings.
    Eval {
        /// Predictions TSV: word, then the vector components.
        #[arg(long)]
        pred: PathBuf,
        /// Gold embeddings in word2vec text format.
        #[arg(long)]
        gold: PathBuf,
        /// Comma-separated accuracy cutoffs.
        #[arg(long, value_delimiter = ',', default_value = "1,10")]
        k: Vec<usize>,
        /// Ranking similarity: pearson or cosine.
        #[arg(long, default_value = "pearson")]
        similarity: String,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Category centroids, cue/centroid correlation ranks, transparency.
    Centroids {
        #[command(flatten)]
        common: ConfigArgs,
        /// Also correlate centroids with the columns of a production mapping.
        #[arg(long)]
        production: bool,
    },
    /// Compound analyses.
    #[command(subcommand)]
    Compounds(CompoundsCmd),
    /// Corpus productivity statistics.
    #[command(subcommand)]
    Productivity(ProductivityCmd),
    /// Run the full configured pipeline and write a manifest.
    Run {
        #[command(flatten)]
        common: ConfigArgs,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train and evaluate one model per slice year over a dated corpus.
    Slices {
        #[command(flatten)]
        common: ConfigArgs,
        /// Comma-separated slice years (each trains on years <= slice).
        #[arg(long, value_delimiter = ',', required = true)]
        years: Vec<i32>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Subcommand)]
enum CompoundsCmd {
    /// Per-compound proportions of cues siding with the compound meaning.
    Boundary(ConfigArgs),
    /// Fit the constituent-composition blocks and compare with addition.
    Caoss {
        /// Embeddings in word2vec text format.
        #[arg(long)]
        embeddings: PathBuf,
        /// Parse TSV with columns compound, left, right.
        #[arg(long)]
        parses: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long, value_delimiter = ',', default_value = "1,10")]
        k: Vec<usize>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Island of reliability for one or more pivots.
    Pivots {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        parses: PathBuf,
        /// Comma-separated pivot words.
        #[arg(long, value_delimiter = ',', required = true)]
        pivot: Vec<String>,
        /// left or right.
        #[arg(long, default_value = "left")]
        position: String,
        /// Optional lexicon TSV supplying compound token frequencies
        /// (columns form, frequency); defaults to one token per type.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Optional file of candidate intruder compounds, one per line.
        #[arg(long)]
        candidates: Option<PathBuf>,
        /// Interval method: percentile or normal.
        #[arg(long, default_value = "percentile")]
        interval: String,
        /// Include the centroid vector in the JSON report.
        #[arg(long)]
        include_centroid: bool,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ProductivityCmd {
    /// Cumulative type growth per year.
    Growth(ConfigArgs),
    /// The per-pattern-per-year predictor table (plus pooled statistics).
    Table(ConfigArgs),
    /// Spearman rank correlation between two series.
    Spearman {
        /// CSV (or single-column) file holding the first series.
        #[arg(long)]
        x: PathBuf,
        /// CSV (or single-column) file holding the second series.
        #[arg(long)]
        y: PathBuf,
        /// Column name when --x is a CSV with headers.
        #[arg(long)]
        x_col: Option<String>,
        /// Column name when --y is a CSV with headers.
        #[arg(long)]
        y_col: Option<String>,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(c) => cmd::ingest(&c.config, resolve_out(c.out)),
        Command::Split { common, seed } => cmd::split(&common.config, resolve_out(common.out), seed),
        Command::Train { common, method, seed } => {
            cmd::train(&common.config, resolve_out(common.out), method.as_deref(), seed)
        }
        Command::Predict { common, mapping, cues, subset, seed } => cmd::predict(
            &common.config,
            resolve_out(common.out),
            &mapping,
            &cues,
            &subset,
            seed,
        ),
        Command::Eval { pred, gold, k, similarity, out } => {
            cmd::eval(&pred, &gold, &k, &similarity, resolve_out(out))
        }
        Command::Centroids { common, production } => {
            cmd::centroids(&common.config, resolve_out(common.out), production)
        }
        Command::Compounds(sub) => match sub {
            CompoundsCmd::Boundary(c) => cmd::compounds_boundary(&c.config, resolve_out(c.out)),
            CompoundsCmd::Caoss { embeddings, parses, lambda, k, out } => {
                cmd::compounds_caoss(&embeddings, &parses, lambda, &k, resolve_out(out))
            }
            CompoundsCmd::Pivots {
                embeddings,
                parses,
                pivot,
                position,
                lexicon,
                candidates,
                interval,
                include_centroid,
                out,
            } => cmd::compounds_pivots(cmd::PivotsArgs {
                embeddings,
                parses,
                pivots: pivot,
                position,
                lexicon,
                candidates,
                interval,
                include_centroid,
                out: resolve_out(out),
            }),
        },
        Command::Productivity(sub) => match sub {
            ProductivityCmd::Growth(c) => cmd::productivity_growth(&c.config, resolve_out(c.out)),
            ProductivityCmd::Table(c) => cmd::productivity_table(&c.config, resolve_out(c.out)),
            ProductivityCmd::Spearman { x, y, x_col, y_col } => {
                cmd::productivity_spearman(&x, &y, x_col.as_deref(), y_col.as_deref())
            }
        },
        Command::Run { common, seed } => cmd::run(&common.config, resolve_out(common.out), seed),
        Command::Slices { common, years, seed } => {
            cmd::slices(&common.config, resolve_out(common.out), &years, seed)
        }
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
