//! `ctxfilter` command-line tool: generate synthetic corpora, filter word
//! lists over posterior streams, evaluate recall/list-size, sweep thresholds
//! and benchmark filter throughput.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O or format error,
//! 3 validation error. Failures print one `error: <kind>: <reason>` line to
//! stderr.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ctxfilter::bench::{bench_scaling, synthetic_list, synthetic_window, BenchSpec};
use ctxfilter::eval::{evaluate, evaluate_results, filter_corpus, sweep, FilterResults, Utterance};
use ctxfilter::io;
use ctxfilter::synth::{generate, write_corpus, ScenarioSpec};
use ctxfilter::{Error, ErrorKind, ValidationMode, WordList};

use config::FilterArgs;
use output::{Format, Sink};

#[derive(Parser)]
#[command(
    name = "ctxfilter",
    version,
    about = "Two-stage contextual word list filter"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus (word list, posteriors, manifest)
    Gen(GenArgs),
    /// Filter a corpus and write per-utterance final word lists
    Filter(FilterCmdArgs),
    /// Evaluate recall rate (ERR) and average list size (ALS) over a corpus
    Eval(EvalArgs),
    /// Evaluate a grid of PSC/SOC thresholds
    Sweep(SweepArgs),
    /// Benchmark window filtering cost against word-list size
    Bench(BenchArgs),
}

#[derive(Args)]
struct CorpusArgs {
    /// Corpus manifest (JSON)
    #[arg(long)]
    manifest: PathBuf,
    /// Phone symbol table, one symbol per line
    #[arg(long)]
    symbols: PathBuf,
    /// Contextual word list (TSV)
    #[arg(long)]
    word_list: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    /// Output directory for the corpus
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    num_utterances: usize,
    #[arg(long, default_value_t = 4)]
    utterance_chunks: usize,
    #[arg(long, default_value_t = 53)]
    chunk_frames: usize,
    /// Phone inventory size F
    #[arg(long, default_value_t = 64)]
    phone_inventory: usize,
    #[arg(long, default_value_t = 2)]
    targets_per_utt: usize,
    /// Posterior mass planted on each true phone
    #[arg(long, default_value_t = 0.8)]
    peak_prob: f64,
    /// Random noise mass per frame
    #[arg(long, default_value_t = 0.15)]
    noise_epsilon: f64,
    #[arg(long, default_value_t = 2)]
    frames_per_phone: usize,
    #[arg(long, default_value_t = 500)]
    distractors: usize,
    #[arg(long, default_value_t = 3)]
    pron_len_min: usize,
    #[arg(long, default_value_t = 6)]
    pron_len_max: usize,
}

#[derive(Args)]
struct FilterCmdArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    filter: FilterArgs,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: Format,
    /// Worker thread cap; output is independent of this
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    filter: FilterArgs,
    /// Score a previously written `filter` output instead of re-filtering
    #[arg(long)]
    filter_results: Option<PathBuf>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: Format,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    filter: FilterArgs,
    /// PSC threshold grid
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.3,0.5,0.7,0.9")]
    psc_grid: Vec<f64>,
    /// SOC threshold grid
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.3,0.5,0.7,0.9")]
    soc_grid: Vec<f64>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    filter: FilterArgs,
    /// Word-list sizes to measure
    #[arg(long, value_delimiter = ',', default_value = "1000,2000,4000,8000")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 530)]
    window_frames: usize,
    /// Phone inventory size F of the synthetic window and list
    #[arg(long, default_value_t = 211)]
    phone_inventory: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    pron_len_min: usize,
    #[arg(long, default_value_t = 6)]
    pron_len_max: usize,
    #[arg(long, default_value_t = 5)]
    warmup: usize,
    #[arg(long, default_value_t = 30)]
    iters: usize,
    /// Worker threads; 1 (the default) measures single-threaded filtering
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "text")]
    format: Format,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind as ClapKind;
            if matches!(err.kind(), ClapKind::DisplayHelp | ClapKind::DisplayVersion) {
                print!("{err}");
                return ExitCode::SUCCESS;
            }
            let first_line = err
                .to_string()
                .lines()
                .next()
                .unwrap_or("bad arguments")
                .to_string();
            eprintln!("error: usage: {first_line}");
            return ExitCode::from(1);
        }
    };

    let result = match cli.command {
        Command::Gen(args) => run_gen(args),
        Command::Filter(args) => run_filter(args),
        Command::Eval(args) => run_eval(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Bench(args) => run_bench(args),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (kind, code) = match err.kind() {
                ErrorKind::Io => ("io", 2),
                ErrorKind::Format => ("format", 2),
                ErrorKind::Validation => ("validation", 3),
            };
            eprintln!("error: {kind}: {err}");
            ExitCode::from(code)
        }
    }
}

/// Runs `f` inside a rayon pool of `threads` workers; on the default pool
/// when no cap is requested.
fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool construction")
            .install(f),
        None => f(),
    }
}

/// Loads symbols, word list and utterances, and validates every posterior
/// matrix leniently (entries in [0, 1]).
fn load_corpus(args: &CorpusArgs) -> Result<(WordList, Vec<Utterance>), Error> {
    let symbols = io::read_symbol_table(&args.symbols)?;
    let list = io::read_word_list(&args.word_list, symbols)?;
    let utterances = io::load_manifest_utterances(&args.manifest)?;
    for utt in &utterances {
        utt.posteriors.validate(ValidationMode::Lenient)?;
    }
    Ok((list, utterances))
}

fn run_gen(args: GenArgs) -> Result<(), Error> {
    let spec = ScenarioSpec {
        seed: args.seed,
        num_utterances: args.num_utterances,
        utterance_chunks: args.utterance_chunks,
        chunk_frames: args.chunk_frames,
        phone_inventory_size: args.phone_inventory,
        target_words_per_utt: args.targets_per_utt,
        peak_prob: args.peak_prob,
        noise_epsilon: args.noise_epsilon,
        frames_per_phone: args.frames_per_phone,
        distractor_list_size: args.distractors,
        pronunciation_length: (args.pron_len_min, args.pron_len_max),
    };
    let corpus = generate(&spec)?;
    write_corpus(&args.out, &corpus)?;
    println!(
        "wrote {} utterances, {} words to {}",
        corpus.utterances.len(),
        corpus.word_list.len(),
        args.out.display()
    );
    Ok(())
}

fn run_filter(args: FilterCmdArgs) -> Result<(), Error> {
    let config = args.filter.resolve()?;
    let (list, utterances) = load_corpus(&args.corpus)?;
    let (_, results) = with_pool(args.threads, || filter_corpus(&utterances, &list, &config))?;

    let sink = Sink::new(args.out.as_deref());
    match args.format {
        Format::Json => sink.write_json(&results),
        Format::Text => sink.write_text(&output::render_filter_results(&results)),
        Format::Csv => Err(Error::InvalidConfig {
            detail: "filter output supports json or text".into(),
        }),
    }
}

fn run_eval(args: EvalArgs) -> Result<(), Error> {
    let config = args.filter.resolve()?;
    let (list, utterances) = load_corpus(&args.corpus)?;

    let report = match &args.filter_results {
        Some(path) => {
            let file = std::fs::File::open(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            let results: FilterResults = serde_json::from_reader(std::io::BufReader::new(file))
                .map_err(|e| Error::ManifestFormat {
                    detail: format!("filter results {}: {e}", path.display()),
                })?;
            let truth: Vec<(String, Vec<u64>)> = utterances
                .iter()
                .map(|u| (u.utt_id.clone(), u.ground_truth.clone()))
                .collect();
            evaluate_results(&truth, &results, &list, &config)?
        }
        None => with_pool(args.threads, || evaluate(&utterances, &list, &config))?,
    };

    let sink = Sink::new(args.out.as_deref());
    match args.format {
        Format::Json => sink.write_json(&report),
        Format::Text => sink.write_text(&output::render_eval_report(&report)),
        Format::Csv => sink.write_text(&output::eval_detail_csv(&report)),
    }
}

fn run_sweep(args: SweepArgs) -> Result<(), Error> {
    let config = args.filter.resolve()?;
    let (list, utterances) = load_corpus(&args.corpus)?;
    let rows = with_pool(args.threads, || {
        sweep(&utterances, &list, &config, &args.psc_grid, &args.soc_grid)
    })?;

    let sink = Sink::new(args.out.as_deref());
    match args.format {
        Format::Json => sink.write_json(&output::SweepReport {
            config: &config,
            rows: &rows,
        }),
        Format::Text => sink.write_text(&output::render_sweep(&rows)),
        Format::Csv => sink.write_text(&ctxfilter::eval::sweep_to_csv(&rows)),
    }
}

fn run_bench(args: BenchArgs) -> Result<(), Error> {
    let config = args.filter.resolve()?;
    let spec = BenchSpec {
        warmup: args.warmup,
        iterations: args.iters,
    };
    let max_size = args.sizes.iter().copied().max().unwrap_or(0);
    let window = synthetic_window(args.seed, args.window_frames, args.phone_inventory);
    let list = synthetic_list(
        args.seed.wrapping_add(1),
        max_size,
        args.phone_inventory,
        (args.pron_len_min, args.pron_len_max),
    )?;

    let report = with_pool(Some(args.threads), || {
        bench_scaling(&args.sizes, &window.view(), &list, &config, &spec)
    })?;

    let sink = Sink::new(args.out.as_deref());
    match args.format {
        Format::Json => sink.write_json(&report),
        Format::Text => sink.write_text(&output::render_bench(&report)),
        Format::Csv => sink.write_text(&ctxfilter::bench::scaling_to_csv(&report)),
    }
}
