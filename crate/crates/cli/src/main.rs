//! `curriculum`: score corpora, preview competence schedules, stream
//! curriculum batches, run toy experiments and benchmark scoring.
//!
//! Exit codes: 0 success, 1 validation error, 2 I/O error.

mod bench;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use curriculum::memory::CountingAllocator;
use curriculum::{
    DEFAULT_INITIAL_COMPETENCE, DEFAULT_MAX_LENGTH, DEFAULT_MIN_COUNT, DEFAULT_TOKEN_BUDGET,
    DEFAULT_VOCAB_SIZE,
};

#[global_allocator]
static ALLOC: CountingAllocator = CountingAllocator::new();

/// Environment variable that fixes the worker thread count.
const THREADS_ENV: &str = "CURRICULUM_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "curriculum",
    version,
    about = "Competence-based curriculum data pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score a parallel corpus and write `id<TAB>raw_score<TAB>cdf<TAB>tokens` records.
    Score(ScoreArgs),
    /// Emit competence curves as CSV.
    Schedule(ScheduleArgs),
    /// Stream curriculum batches from a scored corpus.
    Sample(SampleArgs),
    /// Run the synthetic translation experiment.
    Train(TrainArgs),
    /// Measure scoring throughput and peak memory on a synthetic corpus.
    Bench(BenchArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    Length,
    Rarity,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    /// Source-side file, one sentence per line.
    #[arg(long, requires = "target", conflicts_with = "tsv")]
    source: Option<PathBuf>,
    /// Target-side file aligned with --source.
    #[arg(long, requires = "source")]
    target: Option<PathBuf>,
    /// Single `source<TAB>target` file.
    #[arg(long)]
    tsv: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "length")]
    metric: MetricArg,
    #[arg(long, default_value_t = DEFAULT_MAX_LENGTH)]
    max_length: usize,
    #[arg(long, default_value_t = DEFAULT_VOCAB_SIZE)]
    vocab_size: usize,
    #[arg(long, default_value_t = DEFAULT_MIN_COUNT)]
    min_count: u64,
    /// Scored-corpus output path.
    #[arg(short, long)]
    output: PathBuf,
    /// Also write the source vocabulary as `token<TAB>count`.
    #[arg(long)]
    vocab_out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct ScheduleParams {
    /// Initial competence c0.
    #[arg(long, default_value_t = DEFAULT_INITIAL_COMPETENCE)]
    c0: f64,
    /// Curriculum length: steps until full competence.
    #[arg(long = "T", default_value_t = 1000)]
    duration: u64,
    /// Exponent for `root` schedules.
    #[arg(long, default_value_t = 2.0)]
    p: f64,
}

#[derive(Args, Debug)]
struct ScheduleArgs {
    /// Comma-separated schedules: linear, sqrt, root (uses --p) or root-<p>.
    #[arg(long, value_delimiter = ',', default_value = "linear,sqrt")]
    kind: Vec<String>,
    #[command(flatten)]
    params: ScheduleParams,
    /// Emit only the row for this step.
    #[arg(long = "t")]
    at: Option<u64>,
    /// Last step on the axis; defaults to T.
    #[arg(long)]
    t_max: Option<u64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum StreamFormat {
    Jsonl,
    Binary,
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// Scored corpus written by `score`.
    #[arg(long)]
    scored: PathBuf,
    /// linear, sqrt, root (uses --p) or root-<p>.
    #[arg(long, default_value = "sqrt")]
    kind: String,
    #[command(flatten)]
    params: ScheduleParams,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_TOKEN_BUDGET)]
    token_budget: u32,
    #[arg(long, default_value_t = 1)]
    min_pool: usize,
    #[arg(long, default_value_t = 1000)]
    steps: u64,
    #[arg(long, value_enum, default_value = "jsonl")]
    format: StreamFormat,
    /// Batch stream destination; standard output when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Run-log CSV destination.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "plain,sl-linear,sl-sqrt,sr-linear,sr-sqrt"
    )]
    variants: Vec<String>,
    /// Number of training seeds.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    /// First training seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20_000)]
    steps: u64,
    #[arg(long, default_value_t = 100)]
    eval_every: u64,
    /// Fixed curriculum length; chosen from the plain curve when omitted.
    #[arg(long = "T")]
    duration: Option<u64>,
    /// Fraction of the plain run's final accuracy that defines T.
    #[arg(long, default_value_t = 0.9)]
    fraction: f64,
    #[arg(long, default_value_t = DEFAULT_INITIAL_COMPETENCE)]
    c0: f64,
    #[arg(long, default_value_t = DEFAULT_TOKEN_BUDGET)]
    token_budget: u32,
    #[arg(long, default_value_t = 1.0)]
    lr: f64,
    /// Use the warm-up schedule with this many warm-up steps, scaled by --lr.
    #[arg(long)]
    noam_warmup: Option<u64>,
    /// Embedding size for the warm-up schedule.
    #[arg(long, default_value_t = 512)]
    noam_d: u64,
    #[arg(long, default_value_t = 1.0)]
    init_scale: f64,
    #[arg(long, default_value_t = 100)]
    vocab: usize,
    #[arg(long, default_value_t = 1.0)]
    zipf: f64,
    #[arg(long, default_value_t = 10_000)]
    train_size: usize,
    #[arg(long, default_value_t = 1_000)]
    heldout_size: usize,
    #[arg(long, default_value_t = 0)]
    task_seed: u64,
    /// Record zero wall time so output is byte-reproducible.
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    curves: PathBuf,
    #[arg(long)]
    summary: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum BenchMetric {
    Length,
    Rarity,
    Both,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value_t = 1_000_000)]
    sentences: usize,
    #[arg(long, value_enum, default_value = "both")]
    metric: BenchMetric,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Synthetic vocabulary size.
    #[arg(long, default_value_t = 50_000)]
    vocab: usize,
    /// JSON report destination; printed to standard output when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    let result = match cli.command {
        Command::Score(args) => commands::score(args),
        Command::Schedule(args) => commands::schedule(args),
        Command::Sample(args) => commands::sample(args),
        Command::Train(args) => commands::train(args),
        Command::Bench(args) => bench::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let n: usize = value.parse().map_err(|_| {
            anyhow::anyhow!("{THREADS_ENV} must be a positive integer, got `{value}`")
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let io = err.chain().any(|cause| {
        cause.downcast_ref::<std::io::Error>().is_some()
            || cause
                .downcast_ref::<curriculum::Error>()
                .is_some_and(curriculum::Error::is_io)
    });
    if io {
        2
    } else {
        1
    }
}
