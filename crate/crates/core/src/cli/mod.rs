//! Command-line front end for the `dsa` binary.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime error. On
//! failure a single line `error: code=<Code> message=<text>` goes to stderr.

pub mod bench;
pub mod gen;

use std::ffi::OsString;
use std::io::Write;
use std::net::{SocketAddr, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::align::{AlignError, AlignmentResult};
use crate::cluster::protocol::{JobParams, SubmitJob};
use crate::cluster::{
    submit_and_wait, ClientOptions, ClusterError, Coordinator, CoordinatorConfig, SchedulerConfig, Worker, WorkerConfig,
};
use crate::engine::{run_local_job, AlignerRegistry, EngineError};
use crate::scoring::{GapModel, ScoringError, ScoringScheme, SubstitutionMatrix, NUCLEOTIDE_ALPHABET};
use crate::seqio::{
    convert, load_partition, partition_reference, read_sequence_file, PartitionManifest, SeqFormat, SeqIoError,
    SequenceRecord,
};
use crate::striped::KernelConfig;
use crate::topk::TopKError;

/// Failure of a command, carrying its exit status class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub exit_code: i32,
    pub code: String,
    pub message: String,
}

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { exit_code: EXIT_USAGE, code: "Usage".into(), message: message.into() }
    }

    fn new(exit_code: i32, code: &str, message: impl ToString) -> Self {
        CliError { exit_code, code: code.into(), message: message.to_string() }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "error: code={} message={}", self.code, self.message.replace('\n', " "))
    }
}

impl std::error::Error for CliError {}

impl From<SeqIoError> for CliError {
    fn from(e: SeqIoError) -> Self {
        let (exit, code) = match &e {
            SeqIoError::MalformedInput { .. } => (EXIT_DATA, "MalformedInput"),
            SeqIoError::IoFailure { .. } => (EXIT_RUNTIME, "IoFailure"),
            SeqIoError::UnknownPartition(_) => (EXIT_DATA, "UnknownPartition"),
            SeqIoError::ManifestMismatch { .. } => (EXIT_DATA, "ManifestMismatch"),
            SeqIoError::DuplicateRecordId(_) => (EXIT_DATA, "DuplicateRecordId"),
            SeqIoError::InvalidArgument(_) => (EXIT_USAGE, "InvalidArgument"),
        };
        CliError::new(exit, code, e)
    }
}

impl From<ScoringError> for CliError {
    fn from(e: ScoringError) -> Self {
        let (exit, code) = match &e {
            ScoringError::MalformedMatrix { .. } => (EXIT_DATA, "MalformedMatrix"),
            ScoringError::InvalidParams(_) => (EXIT_USAGE, "InvalidParams"),
            ScoringError::UnknownResidue(_) => (EXIT_DATA, "UnknownResidue"),
        };
        CliError::new(exit, code, e)
    }
}

impl From<AlignError> for CliError {
    fn from(e: AlignError) -> Self {
        let (exit, code) = match &e {
            AlignError::UnknownResidue(_) => (EXIT_DATA, "UnknownResidue"),
            AlignError::EmptySequence(_) => (EXIT_DATA, "EmptySequence"),
            AlignError::InvalidCigar(_) => (EXIT_DATA, "InvalidCigar"),
            AlignError::QueryTooLong { .. } => (EXIT_DATA, "QueryTooLong"),
            AlignError::InvalidConfig(_) => (EXIT_USAGE, "InvalidConfig"),
            AlignError::InternalMismatch(_) => (EXIT_RUNTIME, "KernelError"),
        };
        CliError::new(exit, code, e)
    }
}

impl From<TopKError> for CliError {
    fn from(e: TopKError) -> Self {
        CliError::new(EXIT_USAGE, "InvalidK", e)
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::UnknownAlgorithm(_) => CliError::new(EXIT_USAGE, "UnknownAlgorithm", e),
            EngineError::Align(e) => e.into(),
            EngineError::TopK(e) => e.into(),
        }
    }
}

impl From<ClusterError> for CliError {
    fn from(e: ClusterError) -> Self {
        match &e {
            ClusterError::Remote { code, message } => CliError::new(EXIT_RUNTIME, code, message),
            _ => CliError::new(EXIT_RUNTIME, e.code(), &e),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    SeqIoError::io(path, e).into()
}

#[derive(Parser, Debug)]
#[command(name = "dsa", version, about = "Sequence alignment over partitioned reference databases")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Convert between FASTA and FASTQ.
    Convert(ConvertArgs),
    /// Split a reference database into shards plus a manifest.
    Partition(PartitionArgs),
    /// Align queries against a reference in this process.
    Align(AlignArgs),
    /// Run the coordinator daemon.
    Coordinator(CoordinatorArgs),
    /// Run a worker daemon.
    Worker(WorkerArgs),
    /// Submit a job to a coordinator and wait for the results.
    Submit(SubmitArgs),
    /// Generate a synthetic dataset.
    Gen(GenArgs),
    /// Time jobs on local clusters of several sizes.
    Bench(bench::BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Fasta,
    Fastq,
}

#[derive(Args, Debug)]
pub struct ConvertArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Output format; inferred from the output extension when omitted.
    #[arg(long, value_enum)]
    pub to: Option<FormatArg>,
    /// Quality character used when writing FASTQ from records without one.
    #[arg(long, default_value = "I")]
    pub fill_quality: char,
}

#[derive(Args, Debug)]
pub struct PartitionArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub target_residues: u64,
}

/// Scoring flags shared by `align`, `submit` and `bench`.
#[derive(Args, Debug, Clone)]
pub struct SchemeArgs {
    /// Matrix file in NCBI layout, or `blosum62`. Defaults to a
    /// match 2 / mismatch -2 nucleotide matrix when every query residue is
    /// in ACGTN, BLOSUM62 otherwise.
    #[arg(long)]
    pub matrix: Option<String>,
    #[arg(long, default_value_t = 3)]
    pub gap_open: i32,
    #[arg(long, default_value_t = 1)]
    pub gap_extend: i32,
}

impl SchemeArgs {
    pub fn build(&self, queries: &[SequenceRecord]) -> Result<ScoringScheme, CliError> {
        let gaps = GapModel::new(self.gap_open, self.gap_extend)?;
        let matrix = match self.matrix.as_deref() {
            Some(name) if name.eq_ignore_ascii_case("blosum62") => SubstitutionMatrix::blosum62(),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| io_err(Path::new(path), e))?;
                let m = SubstitutionMatrix::parse_text(&text)?;
                if !m.is_symmetric() {
                    log::warn!("matrix {path} is not symmetric");
                }
                m
            }
            None => {
                let nucleotide = queries.iter().all(|q| q.residues.iter().all(|b| NUCLEOTIDE_ALPHABET.contains(b)));
                if nucleotide {
                    return Ok(ScoringScheme { gaps, ..ScoringScheme::default_nucleotide() });
                }
                SubstitutionMatrix::blosum62()
            }
        };
        Ok(ScoringScheme::new(matrix, gaps))
    }
}

/// Algorithm and kernel flags.
#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Registered algorithm: local, global, semiglobal, or local-scalar.
    #[arg(long, default_value = "local")]
    pub mode: String,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 16)]
    pub lanes: usize,
    #[arg(long, default_value_t = 8)]
    pub cell_width: u32,
}

impl RunArgs {
    pub fn kernel_config(&self) -> Result<KernelConfig, CliError> {
        Ok(KernelConfig::new(self.lanes, self.cell_width)?)
    }

    fn check(&self, registry: &AlignerRegistry) -> Result<(), CliError> {
        if self.k == 0 {
            return Err(TopKError::InvalidK(0).into());
        }
        if registry.get(&self.mode).is_none() {
            let known: Vec<_> = registry.names().collect();
            return Err(CliError::new(
                EXIT_USAGE,
                "UnknownAlgorithm",
                format!("unknown mode {:?}; known: {}", self.mode, known.join(", ")),
            ));
        }
        self.kernel_config().map(|_| ())
    }

    pub fn job_params(&self, scheme: ScoringScheme) -> JobParams {
        JobParams {
            algorithm: self.mode.clone(),
            scheme,
            k: self.k as i64,
            lanes: self.lanes as i64,
            cell_width: self.cell_width as i64,
        }
    }
}

#[derive(Args, Debug)]
pub struct AlignArgs {
    #[arg(long)]
    pub queries: PathBuf,
    /// Reference FASTA/FASTQ file.
    #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
    pub reference: Option<PathBuf>,
    /// Partition manifest; every partition is scanned.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// TSV output file; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CoordinatorArgs {
    #[arg(long, default_value = "127.0.0.1:7878")]
    pub listen: String,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub heartbeat_ms: u64,
    /// Missed heartbeat intervals before a worker is considered lost.
    #[arg(long, default_value_t = 3)]
    pub heartbeat_timeout: u64,
    /// Write the bound address here once listening (useful with port 0).
    #[arg(long)]
    pub addr_file: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct WorkerArgs {
    #[arg(long)]
    pub coordinator: String,
    /// Worker id; defaults to `worker-<pid>`.
    #[arg(long)]
    pub id: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub slots: usize,
    #[arg(long, default_value_t = 256 << 20)]
    pub cache_bytes: usize,
    /// Local shard directory.
    #[arg(long)]
    pub data_dir: PathBuf,
    /// Shared manifest readable from this host; shards are otherwise fetched
    /// from the coordinator.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// How long to keep retrying the initial connection.
    #[arg(long, default_value_t = 10_000)]
    pub connect_timeout_ms: u64,
}

#[derive(Args, Debug)]
pub struct SubmitArgs {
    #[arg(long)]
    pub coordinator: String,
    #[arg(long)]
    pub queries: PathBuf,
    /// Recorded with the job; the coordinator always uses its own manifest.
    #[arg(long, default_value = "")]
    pub manifest_ref: String,
    #[arg(long, default_value = "")]
    pub job_id: String,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Give up after this many seconds.
    #[arg(long)]
    pub timeout_secs: Option<u64>,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "ACGT")]
    pub alphabet: String,
    #[arg(long, default_value_t = 200)]
    pub min_len: usize,
    #[arg(long, default_value_t = 400)]
    pub max_len: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub target_residues: u64,
    /// Comma-separated; defaults to 8,16,...,4096.
    #[arg(long, value_delimiter = ',')]
    pub query_lengths: Option<Vec<usize>>,
}

pub fn resolve_addr(s: &str) -> Result<SocketAddr, CliError> {
    s.to_socket_addrs()
        .ok()
        .and_then(|mut a| a.next())
        .ok_or_else(|| CliError::usage(format!("cannot resolve address {s:?}")))
}

pub fn read_queries(path: &Path) -> Result<Vec<SequenceRecord>, CliError> {
    let q = read_sequence_file(path)?;
    if q.is_empty() {
        return Err(CliError::new(EXIT_DATA, "MalformedInput", format!("{}: no query records", path.display())));
    }
    Ok(q)
}

/// Results as TSV: queryId, rank, refName, maxScore, refBegin, refEnd,
/// queryBegin, queryEnd, cigar. Ranks start at 1; an empty CIGAR is `*`.
pub fn format_tsv<'a>(results: impl IntoIterator<Item = (&'a str, &'a [AlignmentResult])>) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    for (query_id, hits) in results {
        for (rank, h) in hits.iter().enumerate() {
            let cigar = h.cigar.to_string();
            let _ = writeln!(
                out,
                "{query_id}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                rank + 1,
                h.ref_name,
                h.max_score,
                h.ref_begin,
                h.ref_end,
                h.query_begin,
                h.query_end,
                if cigar.is_empty() { "*" } else { &cigar }
            );
        }
    }
    out
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| io_err(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| io_err(Path::new("<stdout>"), e))
        }
    }
}

fn cmd_convert(a: ConvertArgs) -> Result<(), CliError> {
    let records = read_sequence_file(&a.input)?;
    let to = match a.to {
        Some(FormatArg::Fasta) => SeqFormat::Fasta,
        Some(FormatArg::Fastq) => SeqFormat::Fastq,
        None => match a.output.extension().and_then(|e| e.to_str()) {
            Some("fq" | "fastq") => SeqFormat::Fastq,
            _ => SeqFormat::Fasta,
        },
    };
    if !a.fill_quality.is_ascii() {
        return Err(CliError::usage("fill quality must be an ASCII character"));
    }
    let bytes = convert(&records, to, a.fill_quality as u8)?;
    std::fs::write(&a.output, bytes).map_err(|e| io_err(&a.output, e))?;
    log::info!("wrote {} records to {}", records.len(), a.output.display());
    Ok(())
}

fn cmd_partition(a: PartitionArgs) -> Result<(), CliError> {
    let records = read_sequence_file(&a.input)?;
    let m = partition_reference(&records, a.target_residues, &a.out_dir)?;
    println!("{} partitions, {} residues -> {}", m.len(), m.total_residues(), m.manifest_path().display());
    Ok(())
}

/// Every partition of a manifest, loaded in id order.
pub fn load_all_partitions(manifest: &PartitionManifest) -> Result<Vec<Vec<SequenceRecord>>, CliError> {
    manifest.partitions.iter().map(|e| Ok(load_partition(manifest, e.partition_id)?.records)).collect()
}

fn cmd_align(a: AlignArgs, registry: &AlignerRegistry) -> Result<(), CliError> {
    a.run.check(registry)?;
    let queries = read_queries(&a.queries)?;
    let scheme = a.scheme.build(&queries)?;
    let partitions = match (&a.reference, &a.manifest) {
        (Some(r), _) => vec![read_sequence_file(r)?],
        (None, Some(m)) => load_all_partitions(&PartitionManifest::read(m)?)?,
        (None, None) => return Err(CliError::usage("--reference or --manifest is required")),
    };
    let aligner = registry.get(&a.run.mode).expect("checked");
    let results = run_local_job(
        aligner.as_ref(),
        &queries,
        partitions.iter().map(Vec::as_slice),
        &scheme,
        a.run.kernel_config()?,
        a.run.k,
    )?;
    let tsv = format_tsv(queries.iter().map(|q| q.id.as_str()).zip(results.iter().map(Vec::as_slice)));
    emit(a.output.as_deref(), &tsv)
}

fn cmd_coordinator(a: CoordinatorArgs) -> Result<(), CliError> {
    let manifest = PartitionManifest::read(&a.manifest)?;
    let mut config = CoordinatorConfig::new(a.listen, Some(manifest));
    config.scheduler = SchedulerConfig {
        heartbeat_ms: a.heartbeat_ms.max(1),
        timeout_intervals: a.heartbeat_timeout.max(1),
        ..SchedulerConfig::default()
    };
    config.tick_ms = (a.heartbeat_ms / 4).clamp(10, 500);
    let handle = Coordinator::start(config)?;
    let addr = handle.local_addr();
    if let Some(p) = &a.addr_file {
        let tmp = p.with_extension("tmp");
        std::fs::write(&tmp, addr.to_string()).and_then(|_| std::fs::rename(&tmp, p)).map_err(|e| io_err(p, e))?;
    }
    println!("listening {addr}");
    let _ = std::io::stdout().flush();
    handle.join();
    Ok(())
}

fn cmd_worker(a: WorkerArgs, registry: AlignerRegistry) -> Result<(), CliError> {
    let coordinator = resolve_addr(&a.coordinator)?;
    let mut config =
        WorkerConfig::new(a.id.unwrap_or_else(|| format!("worker-{}", std::process::id())), coordinator, a.data_dir);
    config.slots = a.slots.max(1);
    config.cache_capacity_bytes = a.cache_bytes;
    config.registry = registry;
    if let Some(m) = &a.manifest {
        config.manifest = Some(PartitionManifest::read(m)?);
    }
    let deadline = Instant::now() + Duration::from_millis(a.connect_timeout_ms);
    let handle = loop {
        match Worker::start(config.clone()) {
            Ok(h) => break h,
            Err(ClusterError::Io(msg)) if Instant::now() < deadline => {
                log::debug!("coordinator not reachable yet: {msg}");
                std::thread::sleep(Duration::from_millis(100));
            }
            Err(e) => return Err(e.into()),
        }
    };
    println!("registered {} preferred {:?}", handle.worker_id(), handle.preferred_partitions());
    let _ = std::io::stdout().flush();
    handle.join();
    Ok(())
}

fn cmd_submit(a: SubmitArgs, registry: &AlignerRegistry) -> Result<(), CliError> {
    if a.run.k == 0 {
        return Err(TopKError::InvalidK(0).into());
    }
    a.run.kernel_config()?;
    let _ = registry;
    let queries = read_queries(&a.queries)?;
    let scheme = a.scheme.build(&queries)?;
    let addr = resolve_addr(&a.coordinator)?;
    let job = SubmitJob { job_id: a.job_id, manifest_ref: a.manifest_ref, params: a.run.job_params(scheme), queries };
    let opts = ClientOptions { timeout: a.timeout_secs.map(Duration::from_secs), ..ClientOptions::default() };
    let result = submit_and_wait(addr, job, opts)?;
    if result.state != crate::cluster::scheduler::STATE_DONE {
        return Err(CliError::new(EXIT_RUNTIME, "JobFailed", result.error));
    }
    let tsv = format_tsv(result.queries.iter().map(|q| (q.query_id.as_str(), q.hits.as_slice())));
    emit(a.output.as_deref(), &tsv)
}

fn cmd_gen(a: GenArgs) -> Result<(), CliError> {
    let config = gen::DatasetGenConfig {
        seed: a.seed,
        alphabet: a.alphabet.to_ascii_uppercase().into_bytes(),
        min_record_len: a.min_len,
        max_record_len: a.max_len,
        target_reference_residues: a.target_residues,
        query_lengths: a.query_lengths.unwrap_or_else(gen::default_query_ladder),
    };
    let d = gen::generate(&config)?;
    let (r, q) = gen::write_dataset(&d, &a.out_dir)?;
    println!(
        "{} reference records ({} residues) -> {}; {} queries -> {}",
        d.reference.len(),
        d.reference_residues(),
        r.display(),
        d.queries.len(),
        q.display()
    );
    Ok(())
}

/// Runs one command with the given algorithm registry (the hook for custom
/// alignment functions).
pub fn run_command(cli: Cli, registry: AlignerRegistry) -> Result<(), CliError> {
    match cli.command {
        Command::Convert(a) => cmd_convert(a),
        Command::Partition(a) => cmd_partition(a),
        Command::Align(a) => cmd_align(a, &registry),
        Command::Coordinator(a) => cmd_coordinator(a),
        Command::Worker(a) => cmd_worker(a, registry),
        Command::Submit(a) => cmd_submit(a, &registry),
        Command::Gen(a) => cmd_gen(a),
        Command::Bench(a) => bench::cmd_bench(a),
    }
}

/// Parses `args`, runs the command, prints any error, and returns the exit
/// status.
pub fn main_with_args<I, T>(args: I, registry: AlignerRegistry) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let first = e.to_string();
            let line = first.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("{}", CliError::usage(line));
            return EXIT_USAGE;
        }
    };
    match run_command(cli, registry) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code
        }
    }
}
