//! Command-line front end: `validate`, `augment`, `stats`, `score`, `synth`.
//!
//! Exit codes: 0 on success, 1 when input fails validation or processing,
//! 2 on usage errors. Diagnostics go to standard error; data goes to files
//! or standard output.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{debug, info};

use crate::corpus::{load_corpus, Corpus, ExportError, Exporter, PairUniverse, SampleMode, SampleSpec};
use crate::evalkit::{relative_rates, score_tsv};
use crate::stats::{histograms_from_manifest, render_pair, render_report, ReportFormat};
use crate::synth::{synthetic_corpus, write_corpus, SynthConfig};
use crate::treebank::ConstituentPolicy;

pub const LOG_ENV: &str = "SYNTAXSPLICE_LOG";

#[derive(Debug, Parser)]
#[command(name = "syntaxsplice", version, about = "Constituency-substitution augmentation for TTS corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a corpus manifest and report diagnostics.
    Validate(ValidateArgs),
    /// Generate augmented examples and export them with the originals.
    Augment(AugmentArgs),
    /// Constituent length histograms of an exported manifest.
    Stats(StatsArgs),
    /// Pooled error rates, or rates relative to a baseline.
    Score(ScoreArgs),
    /// Write a seeded synthetic corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct PolicyArgs {
    #[arg(long, default_value_t = 1)]
    min_words: usize,
    #[arg(long)]
    max_words: Option<usize>,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    include_preterminals: bool,
    /// Comma-separated label allowlist.
    #[arg(long, value_delimiter = ',')]
    labels: Option<Vec<String>>,
    /// Strip functional suffixes (`NP-SBJ` -> `NP`) before matching.
    #[arg(long)]
    normalize_labels: bool,
}

impl PolicyArgs {
    fn policy(&self) -> ConstituentPolicy {
        ConstituentPolicy {
            include_preterminals: self.include_preterminals,
            exclude_full_span: true,
            min_words: self.min_words,
            max_words: self.max_words,
            label_allowlist: self.labels.as_ref().map(|l| l.iter().cloned().collect::<BTreeSet<_>>()),
            normalize_labels: self.normalize_labels,
        }
    }
}

#[derive(Debug, Args)]
struct CorpusArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Use only the first N manifest records.
    #[arg(long)]
    limit: Option<usize>,
    #[command(flatten)]
    policy: PolicyArgs,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Random,
    Exhaustive,
}

#[derive(Debug, Args)]
struct AugmentArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "random")]
    mode: ModeArg,
    /// Examples to draw in random mode.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = false, action = clap::ArgAction::Set)]
    dedupe: bool,
    /// Allow host and donor to be the same utterance.
    #[arg(long, default_value_t = false, action = clap::ArgAction::Set)]
    self_pairs: bool,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Tsv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Inserted,
    Removed,
    Both,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Exported manifest produced by `augment`.
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum, default_value = "tsv")]
    format: FormatArg,
    #[arg(long, value_enum, default_value = "both")]
    kind: KindArg,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    /// TSV of `utterance_id<TAB>reference<TAB>hypothesis`.
    #[arg(long, required_unless_present = "rates", conflicts_with = "rates")]
    input: Option<PathBuf>,
    /// JSON object mapping system name to error rate.
    #[arg(long, requires = "baseline")]
    rates: Option<PathBuf>,
    #[arg(long)]
    baseline: Option<String>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    utterances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = crate::features::DEFAULT_MEL_BINS)]
    bins: usize,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Invalid(String),
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Invalid(e.to_string())
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "warn");
    let _ = env_logger::Builder::from_env(env).target(env_logger::Target::Stderr).try_init();
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Validate(args) => validate(args),
        Command::Augment(args) => augment(args),
        Command::Stats(args) => stats(args),
        Command::Score(args) => score(args),
        Command::Synth(args) => synth(args),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            2
        }
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn load(args: &CorpusArgs) -> Result<Corpus, Failure> {
    let base = args.manifest.parent().unwrap_or(Path::new(".")).to_path_buf();
    let reader = open(&args.manifest)?;
    let policy = args.policy.policy();
    let context = |e: crate::corpus::CorpusError| Failure::Invalid(format!("{}: {e}", args.manifest.display()));
    match args.limit {
        None => load_corpus(reader, &base, policy).map_err(context),
        Some(n) => {
            let mut head = Vec::new();
            for line in reader.lines() {
                let line = line?;
                if head.len() == n {
                    break;
                }
                if !line.trim().is_empty() {
                    head.push(line);
                }
            }
            load_corpus(head.join("\n").as_bytes(), &base, policy).map_err(context)
        }
    }
}

fn validate(args: ValidateArgs) -> Result<(), Failure> {
    let corpus = load(&args.corpus)?;
    let universe = PairUniverse::new(&corpus, false);
    let constituents: usize = (0..corpus.len()).map(|i| corpus.constituents(i).len()).sum();
    eprintln!("{} records", corpus.len());
    eprintln!("{} frames", corpus.total_frames());
    eprintln!("{constituents} constituents over {} labels", corpus.labels().count());
    eprintln!("{} substitution tuples", universe.len());
    Ok(())
}

fn augment(args: AugmentArgs) -> Result<(), Failure> {
    let mode = match args.mode {
        ModeArg::Random => SampleMode::Random,
        ModeArg::Exhaustive => SampleMode::Exhaustive,
    };
    let target_count = match (mode, args.count) {
        (SampleMode::Random, None) => return Err(Failure::Usage("--count is required in random mode".into())),
        (_, count) => count.unwrap_or(0),
    };
    if args.workers == 0 {
        return Err(Failure::Usage("--workers must be at least 1".into()));
    }
    let corpus = load(&args.corpus)?;
    let spec = SampleSpec {
        target_count,
        seed: args.seed,
        policy: corpus.policy().clone(),
        dedupe: args.dedupe,
        mode,
        allow_self_pairs: args.self_pairs,
    };
    info!("augmenting {} records, mode {mode}, seed {}", corpus.len(), spec.seed);

    let mut exporter = Exporter::create(&args.out, &corpus)?;
    let stream = crate::corpus::sample_augmented(&corpus, spec);
    stream.for_each_parallel::<ExportError, _>(args.workers, |example| {
        let host_len = corpus.get(&example.provenance.host_id).map(|r| r.tokens().len());
        exporter.write_augmented(&example, host_len)?;
        let n = exporter.report().n_augmented;
        if n % 10_000 == 0 {
            debug!("{n} augmented examples written");
        }
        Ok(())
    })?;
    let report = exporter.finish()?;
    eprintln!(
        "wrote {} original and {} augmented rows ({} frames) to {}",
        report.n_original,
        report.n_augmented,
        report.total_frames,
        args.out.display()
    );
    println!("{}", serde_json::to_string(&report).expect("report serializes"));
    Ok(())
}

fn stats(args: StatsArgs) -> Result<(), Failure> {
    let (inserted, removed) = histograms_from_manifest(open(&args.manifest)?)?;
    let format = match args.format {
        FormatArg::Tsv => ReportFormat::Tsv,
        FormatArg::Json => ReportFormat::Json,
    };
    let out = match args.kind {
        KindArg::Inserted => render_report(&inserted, format),
        KindArg::Removed => render_report(&removed, format),
        KindArg::Both => render_pair(&inserted, &removed, format),
    };
    eprintln!("{} augmented rows", inserted.total);
    write_stdout(&out)
}

fn score(args: ScoreArgs) -> Result<(), Failure> {
    let out = if let Some(input) = &args.input {
        let score = score_tsv(open(input)?)?;
        eprintln!("{} utterances, pooled rate {:.4}", score.utterances, score.pooled.rate);
        serde_json::to_string_pretty(&score).expect("score serializes")
    } else {
        let path = args.rates.as_ref().expect("clap enforces one source");
        let baseline = args.baseline.as_deref().expect("clap requires --baseline with --rates");
        let rates: BTreeMap<String, f64> = serde_json::from_reader(open(path)?)?;
        serde_json::to_string_pretty(&relative_rates(&rates, baseline)?).expect("rates serialize")
    };
    write_stdout(&(out + "\n"))
}

fn synth(args: SynthArgs) -> Result<(), Failure> {
    if args.bins == 0 {
        return Err(Failure::Usage("--bins must be at least 1".into()));
    }
    let cfg = SynthConfig { utterances: args.utterances, seed: args.seed, n_bins: args.bins, ..Default::default() };
    let records = synthetic_corpus(&cfg);
    let manifest = write_corpus(&args.out, &records)?;
    eprintln!("wrote {} records to {}", records.len(), manifest.display());
    Ok(())
}

fn write_stdout(s: &str) -> Result<(), Failure> {
    let mut out = std::io::stdout().lock();
    out.write_all(s.as_bytes())?;
    out.flush()?;
    Ok(())
}
