//! `classinet` command-line driver.
//!
//! Every flag can also be set through a `CLASSINET_<FLAG>` environment
//! variable. Each run's configuration is written into the header of every
//! artifact it produces.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "classinet", version, about = "Build predictor networks and expand sparse text instances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
enum Command {
    /// Train feature predictors on unlabeled text and build the network.
    BuildNet(BuildNetArgs),
    /// Expand labeled instances with one of the expansion methods.
    Expand(ExpandArgs),
    /// Train a downstream classifier on expanded instances.
    Train(TrainArgs),
    /// Cross-validate (or score a trained model) and report accuracy.
    Eval(EvalArgs),
    /// Dump the mutual-neighbour subgraph around some terms as DOT.
    Inspect(InspectArgs),
    /// Corpus and network statistics.
    Stats(StatsArgs),
    /// Cross-validated accuracy of global expansion over damping values.
    SweepGamma(SweepArgs),
}

#[derive(Debug, Args, Serialize)]
struct Common {
    /// Seed for every random choice of the run.
    #[arg(long, env = "CLASSINET_SEED", default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, env = "CLASSINET_WORKERS")]
    workers: Option<usize>,
}

impl Common {
    fn workers(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
            .max(1)
    }
}

#[derive(Debug, Args, Serialize)]
struct BuildNetArgs {
    /// Unlabeled corpus (JSON lines with a `text` field).
    #[arg(long, env = "CLASSINET_INPUT")]
    input: PathBuf,
    /// Output directory for vocabulary, predictors and network.
    #[serde(skip)]
    #[arg(long, env = "CLASSINET_OUTPUT")]
    output: PathBuf,
    #[arg(long, env = "CLASSINET_MIN_COUNT", default_value_t = 2)]
    min_count: u64,
    /// Strip a trailing plural "s" when tokenizing.
    #[arg(long, env = "CLASSINET_LEMMA")]
    lemma: bool,
    /// Cap on the number of vertices: the most frequent terms get
    /// predictors. Every term is a candidate when absent.
    #[arg(long, env = "CLASSINET_VERTICES")]
    vertices: Option<usize>,
    /// Instances held out of predictor training for measuring edge weights.
    #[arg(long, env = "CLASSINET_POOL_SIZE", default_value_t = 10_000)]
    pool_size: usize,
    #[arg(long, env = "CLASSINET_MIN_POSITIVE", default_value_t = 5)]
    min_positive: usize,
    /// Cap on positive training instances per predictor.
    #[arg(long, env = "CLASSINET_MAX_POSITIVES")]
    max_positives: Option<usize>,
    #[arg(long, env = "CLASSINET_LAMBDA_GRID", value_delimiter = ',', default_value = "0.001,0.01,0.1,1,10")]
    lambda_grid: Vec<f64>,
    /// Neighbours kept per vertex.
    #[arg(short, long, env = "CLASSINET_K", default_value_t = 10)]
    k: usize,
    #[arg(long, env = "CLASSINET_PERMUTATIONS", default_value_t = 24)]
    permutations: usize,
    #[arg(long, env = "CLASSINET_BEAM", default_value_t = 8)]
    beam: usize,
    /// Per-pair evaluation set size.
    #[arg(long, env = "CLASSINET_EVAL_CAP", default_value_t = 300)]
    eval_cap: usize,
    #[arg(long, env = "CLASSINET_SIGNATURE_SIZE", default_value_t = 2048)]
    signature_size: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum MethodFlag {
    None,
    Independent,
    LocalPath,
    AllNn,
    MutualNn,
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum PriorFlag {
    Uniform,
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum WeightingFlag {
    Binary,
    Tf,
    Tfidf,
}

#[derive(Debug, Args, Serialize)]
struct MethodArgs {
    #[arg(long, env = "CLASSINET_METHOD", value_enum, default_value = "global")]
    method: MethodFlag,
    /// Damping factor of global expansion.
    #[arg(long, env = "CLASSINET_GAMMA", default_value_t = 0.85)]
    gamma: f64,
    /// Number of propagation hops of global expansion.
    #[arg(short, long, env = "CLASSINET_Q", default_value_t = 4)]
    q: usize,
    #[arg(long, env = "CLASSINET_EPS_SCORE", default_value_t = 1e-4)]
    eps_score: f64,
    #[arg(long, env = "CLASSINET_PRIOR", value_enum, default_value = "uniform")]
    prior: PriorFlag,
    /// Start propagation from feature values instead of 1.
    #[arg(long, env = "CLASSINET_WEIGHTED")]
    weighted: bool,
    /// Neighbourhood size of the mutual k-NN graph.
    #[arg(long = "nn-k", env = "CLASSINET_NN_K", default_value_t = 4)]
    nn_k: usize,
    #[arg(long, env = "CLASSINET_MAX_HOPS", default_value_t = 3)]
    max_hops: usize,
    /// Use firing probabilities instead of 1 for predictor-based methods.
    #[arg(long, env = "CLASSINET_POSTERIOR")]
    posterior: bool,
}

#[derive(Debug, Args, Serialize)]
struct ExpandArgs {
    /// Directory written by `build-net`.
    #[arg(long, env = "CLASSINET_NET")]
    net: PathBuf,
    /// Labeled or unlabeled instances (JSON lines).
    #[arg(long, env = "CLASSINET_INPUT")]
    input: PathBuf,
    #[serde(skip)]
    #[arg(long, env = "CLASSINET_OUTPUT")]
    output: PathBuf,
    #[arg(long, env = "CLASSINET_WEIGHTING", value_enum, default_value = "tfidf")]
    weighting: WeightingFlag,
    #[command(flatten)]
    method: MethodArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct TrainArgs {
    #[arg(long, env = "CLASSINET_NET")]
    net: PathBuf,
    /// Expanded instances written by `expand`.
    #[arg(long, env = "CLASSINET_INPUT")]
    input: PathBuf,
    /// Model file (JSON).
    #[serde(skip)]
    #[arg(long, env = "CLASSINET_OUTPUT")]
    output: PathBuf,
    #[arg(long, env = "CLASSINET_LAMBDA_GRID", value_delimiter = ',', default_value = "0.001,0.01,0.1,1,10")]
    lambda_grid: Vec<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct EvalArgs {
    #[arg(long, env = "CLASSINET_NET")]
    net: PathBuf,
    /// Expanded instances, or a labeled corpus with `--no-expansion`.
    #[arg(long, env = "CLASSINET_INPUT")]
    input: PathBuf,
    /// Treat the input as a raw labeled corpus and evaluate it unexpanded.
    #[arg(long, env = "CLASSINET_NO_EXPANSION")]
    no_expansion: bool,
    #[arg(long, env = "CLASSINET_WEIGHTING", value_enum, default_value = "tfidf")]
    weighting: WeightingFlag,
    /// Score this trained model instead of cross-validating.
    #[arg(long, env = "CLASSINET_MODEL")]
    model: Option<PathBuf>,
    #[arg(long, env = "CLASSINET_FOLDS", default_value_t = 5)]
    folds: usize,
    /// Second expanded set (same instances, same order) for a paired t-test.
    #[arg(long, env = "CLASSINET_COMPARE")]
    compare: Option<PathBuf>,
    #[arg(long, env = "CLASSINET_LAMBDA_GRID", value_delimiter = ',', default_value = "0.001,0.01,0.1,1,10")]
    lambda_grid: Vec<f64>,
    /// Report file (JSON); stdout when absent.
    #[serde(skip)]
    #[arg(long, env = "CLASSINET_OUTPUT")]
    output: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct InspectArgs {
    #[arg(long, env = "CLASSINET_NET")]
    net: PathBuf,
    /// Seed terms.
    #[arg(long, env = "CLASSINET_TERMS", value_delimiter = ',', required = true)]
    terms: Vec<String>,
    /// Neighbourhood size of the mutual k-NN graph.
    #[arg(short, long, env = "CLASSINET_K", default_value_t = 4)]
    k: usize,
    /// Hops to follow from the seed terms.
    #[arg(long, env = "CLASSINET_HOPS", default_value_t = 1)]
    hops: usize,
    /// DOT file; stdout when absent.
    #[serde(skip)]
    #[arg(long, env = "CLASSINET_OUTPUT")]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct StatsArgs {
    /// Corpus to describe (needs `--net` for its vocabulary).
    #[arg(long, env = "CLASSINET_INPUT")]
    input: Option<PathBuf>,
    #[arg(long, env = "CLASSINET_NET")]
    net: Option<PathBuf>,
    #[arg(long, env = "CLASSINET_WEIGHTING", value_enum, default_value = "binary")]
    weighting: WeightingFlag,
}

#[derive(Debug, Args, Serialize)]
struct SweepArgs {
    #[arg(long, env = "CLASSINET_NET")]
    net: PathBuf,
    /// Labeled corpus used as validation data.
    #[arg(long, env = "CLASSINET_INPUT")]
    input: PathBuf,
    #[arg(
        long,
        env = "CLASSINET_GAMMAS",
        value_delimiter = ',',
        default_value = "0.05,0.15,0.25,0.35,0.45,0.55,0.65,0.75,0.85,0.95"
    )]
    gammas: Vec<f64>,
    #[arg(short, long, env = "CLASSINET_Q", default_value_t = 4)]
    q: usize,
    #[arg(long, env = "CLASSINET_FOLDS", default_value_t = 5)]
    folds: usize,
    #[arg(long, env = "CLASSINET_WEIGHTING", value_enum, default_value = "tfidf")]
    weighting: WeightingFlag,
    #[arg(long, env = "CLASSINET_LAMBDA_GRID", value_delimiter = ',', default_value = "0.001,0.01,0.1,1,10")]
    lambda_grid: Vec<f64>,
    /// TSV file; stdout when absent.
    #[serde(skip)]
    #[arg(long, env = "CLASSINET_OUTPUT")]
    output: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match commands::run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
