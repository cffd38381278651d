//! Benchmark harness: spawns a coordinator and `w` worker processes of the
//! `dsa` binary, submits jobs, and reports timings as JSON lines.
//!
//! Throughput is `referenceResidues * queries / (wallMs / 1000)`. Each row is
//! the median-wall run of `repetitions`.

use std::io::{BufRead, BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use clap::Args;
use serde::Serialize;

use super::{format_tsv, load_all_partitions, read_queries, CliError, RunArgs, SchemeArgs, EXIT_RUNTIME};
use crate::cluster::protocol::{JobResult, SubmitJob};
use crate::cluster::scheduler::STATE_DONE;
use crate::cluster::{submit_and_wait, ClientOptions};
use crate::engine::{map_partition, AlignerRegistry, LOCAL, LOCAL_SCALAR};
use crate::scoring::ScoringScheme;
use crate::seqio::{PartitionManifest, SequenceRecord};
use crate::striped::KernelConfig;

#[derive(Clone, Debug)]
pub struct ClusterOptions {
    pub slots: usize,
    pub cache_bytes: usize,
    pub heartbeat_ms: u64,
    /// Workers read shards straight from the manifest directory instead of
    /// fetching them from the coordinator.
    pub shared_manifest: bool,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        ClusterOptions { slots: 1, cache_bytes: 256 << 20, heartbeat_ms: 2000, shared_manifest: true }
    }
}

fn spawn_err(what: &str, e: impl std::fmt::Display) -> CliError {
    CliError { exit_code: EXIT_RUNTIME, code: "SpawnFailure".into(), message: format!("{what}: {e}") }
}

/// A coordinator plus worker processes on this host. Dropping it kills all
/// of them.
pub struct LocalCluster {
    addr: SocketAddr,
    coordinator: Child,
    workers: Vec<Option<Child>>,
}

impl LocalCluster {
    pub fn spawn(
        exe: &Path,
        manifest: &Path,
        workers: usize,
        opts: &ClusterOptions,
        work_dir: &Path,
    ) -> Result<LocalCluster, CliError> {
        std::fs::create_dir_all(work_dir).map_err(|e| spawn_err("work dir", e))?;
        let addr_file = work_dir.join("coordinator.addr");
        let _ = std::fs::remove_file(&addr_file);
        let coordinator = Command::new(exe)
            .args(["coordinator", "--listen", "127.0.0.1:0", "--manifest"])
            .arg(manifest)
            .args(["--heartbeat-ms", &opts.heartbeat_ms.to_string(), "--addr-file"])
            .arg(&addr_file)
            .stdout(Stdio::null())
            .spawn()
            .map_err(|e| spawn_err("coordinator", e))?;
        let mut cluster =
            LocalCluster { addr: SocketAddr::from(([127, 0, 0, 1], 0)), coordinator, workers: Vec::new() };
        let deadline = Instant::now() + Duration::from_secs(20);
        cluster.addr = loop {
            if let Ok(s) = std::fs::read_to_string(&addr_file) {
                if let Ok(a) = s.trim().parse() {
                    break a;
                }
            }
            if let Ok(Some(status)) = cluster.coordinator.try_wait() {
                return Err(spawn_err("coordinator", format!("exited with {status}")));
            }
            if Instant::now() > deadline {
                return Err(spawn_err("coordinator", "no address after 20 s"));
            }
            std::thread::sleep(Duration::from_millis(20));
        };
        for i in 0..workers {
            cluster.add_worker(exe, manifest, &format!("w{i}"), opts, work_dir)?;
        }
        Ok(cluster)
    }

    /// Starts one more worker and waits for its registration.
    pub fn add_worker(
        &mut self,
        exe: &Path,
        manifest: &Path,
        id: &str,
        opts: &ClusterOptions,
        work_dir: &Path,
    ) -> Result<usize, CliError> {
        let data_dir = work_dir.join(id);
        let mut cmd = Command::new(exe);
        cmd.args(["worker", "--coordinator", &self.addr.to_string(), "--id", id])
            .args(["--slots", &opts.slots.to_string(), "--cache-bytes", &opts.cache_bytes.to_string()])
            .arg("--data-dir")
            .arg(&data_dir)
            .stdout(Stdio::piped());
        if opts.shared_manifest {
            cmd.arg("--manifest").arg(manifest);
        }
        let mut child = cmd.spawn().map_err(|e| spawn_err(id, e))?;
        let mut line = String::new();
        let stdout = child.stdout.take().expect("piped");
        let mut reader = BufReader::new(stdout);
        let _ = reader.read_line(&mut line);
        if !line.starts_with("registered") {
            let _ = child.kill();
            let _ = child.wait();
            return Err(spawn_err(id, "worker did not register"));
        }
        // Keep draining so the worker never blocks on a full pipe.
        std::thread::spawn(move || for _ in reader.lines() {});
        self.workers.push(Some(child));
        Ok(self.workers.len() - 1)
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Kills worker `i` without any goodbye, as a crash would.
    pub fn kill_worker(&mut self, i: usize) {
        if let Some(mut c) = self.workers.get_mut(i).and_then(Option::take) {
            let _ = c.kill();
            let _ = c.wait();
        }
    }

    pub fn submit(&self, job: SubmitJob, timeout: Duration) -> Result<JobResult, CliError> {
        let result = submit_and_wait(
            self.addr,
            job,
            ClientOptions { poll_interval: Duration::from_millis(10), timeout: Some(timeout) },
        )?;
        if result.state != STATE_DONE {
            return Err(CliError { exit_code: EXIT_RUNTIME, code: "JobFailed".into(), message: result.error });
        }
        Ok(result)
    }
}

impl Drop for LocalCluster {
    fn drop(&mut self) {
        // Coordinator first, so it does not log the workers going away.
        let _ = self.coordinator.kill();
        let _ = self.coordinator.wait();
        for c in self.workers.iter_mut().flatten() {
            let _ = c.kill();
            let _ = c.wait();
        }
    }
}

/// Results of a job as TSV text.
pub fn job_tsv(result: &JobResult) -> String {
    format_tsv(result.queries.iter().map(|q| (q.query_id.as_str(), q.hits.as_slice())))
}

/// FNV-1a, 64-bit, as lowercase hex.
pub fn digest(text: &str) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

#[derive(Clone, Debug, Serialize, PartialEq)]
#[serde(rename_all = "camelCase")]
pub struct BenchRow {
    /// `cluster` for distributed jobs, `kernel` for in-process kernel runs.
    pub kind: String,
    pub workers: usize,
    pub mode: String,
    pub query_id: String,
    /// Query length; the summed length when several queries share a job.
    pub query_length: usize,
    pub queries: usize,
    pub reference_residues: u64,
    pub repetitions: usize,
    pub wall_ms: f64,
    pub kernel_ms: i64,
    pub cache_hits: i64,
    pub cache_misses: i64,
    pub throughput_residues_per_sec: f64,
    pub results_digest: String,
}

fn throughput(reference_residues: u64, queries: usize, wall_ms: f64) -> f64 {
    reference_residues as f64 * queries as f64 / (wall_ms.max(1e-3) / 1000.0)
}

/// The middle element; the lower middle for even counts.
fn median_by_wall<T: Clone>(mut runs: Vec<(f64, T)>) -> (f64, T) {
    runs.sort_by(|a, b| a.0.total_cmp(&b.0));
    runs[(runs.len() - 1) / 2].clone()
}

#[derive(Clone, Debug)]
pub struct BenchSpec {
    pub exe: PathBuf,
    pub manifest: PathBuf,
    pub queries: Vec<SequenceRecord>,
    pub scheme: ScoringScheme,
    pub run: RunArgs,
    pub workers: Vec<usize>,
    pub repetitions: usize,
    pub cluster: ClusterOptions,
    pub work_dir: PathBuf,
    /// Submit all queries as one job instead of one job per query.
    pub whole_job: bool,
    /// Length of the query used for the scalar-vs-striped kernel rows; the
    /// closest query is used. `None` skips those rows.
    pub kernel_query_length: Option<usize>,
}

/// Runs the cluster rows for every worker count, then the kernel rows.
pub fn run_bench(spec: &BenchSpec, mut sink: impl FnMut(&BenchRow)) -> Result<Vec<BenchRow>, CliError> {
    if spec.repetitions == 0 {
        return Err(CliError::usage("repetitions must be at least 1"));
    }
    let manifest = PartitionManifest::read(&spec.manifest)?;
    let residues = manifest.total_residues();
    let mut rows = Vec::new();
    let groups: Vec<Vec<SequenceRecord>> = if spec.whole_job {
        vec![spec.queries.clone()]
    } else {
        spec.queries.iter().map(|q| vec![q.clone()]).collect()
    };
    for &w in &spec.workers {
        let dir = spec.work_dir.join(format!("workers-{w}"));
        let cluster = LocalCluster::spawn(&spec.exe, &spec.manifest, w, &spec.cluster, &dir)?;
        for (gi, group) in groups.iter().enumerate() {
            let mut runs = Vec::new();
            for rep in 0..spec.repetitions {
                let job = SubmitJob {
                    job_id: format!("bench-{w}-{gi}-{rep}"),
                    manifest_ref: spec.manifest.display().to_string(),
                    params: spec.run.job_params(spec.scheme.clone()),
                    queries: group.clone(),
                };
                let t = Instant::now();
                let r = cluster.submit(job, Duration::from_secs(3600))?;
                runs.push((t.elapsed().as_secs_f64() * 1000.0, r));
            }
            let (wall_ms, r) = median_by_wall(runs);
            let row = BenchRow {
                kind: "cluster".into(),
                workers: w,
                mode: spec.run.mode.clone(),
                query_id: if group.len() == 1 { group[0].id.clone() } else { "*".into() },
                query_length: group.iter().map(SequenceRecord::len).sum(),
                queries: group.len(),
                reference_residues: residues,
                repetitions: spec.repetitions,
                wall_ms,
                kernel_ms: r.stats.kernel_ms,
                cache_hits: r.stats.cache_hits,
                cache_misses: r.stats.cache_misses,
                throughput_residues_per_sec: throughput(residues, group.len(), wall_ms),
                results_digest: digest(&job_tsv(&r)),
            };
            sink(&row);
            rows.push(row);
        }
    }
    if let Some(target) = spec.kernel_query_length {
        let query = spec.queries.iter().min_by_key(|q| q.len().abs_diff(target)).expect("queries are non-empty");
        let partitions = load_all_partitions(&manifest)?;
        let registry = AlignerRegistry::with_builtins();
        let config = spec.run.kernel_config()?;
        for mode in [LOCAL, LOCAL_SCALAR] {
            let row = kernel_row(
                &registry,
                mode,
                query,
                &partitions,
                &spec.scheme,
                config,
                spec.run.k,
                spec.repetitions,
                residues,
            )?;
            sink(&row);
            rows.push(row);
        }
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn kernel_row(
    registry: &AlignerRegistry,
    mode: &str,
    query: &SequenceRecord,
    partitions: &[Vec<SequenceRecord>],
    scheme: &ScoringScheme,
    config: KernelConfig,
    k: usize,
    repetitions: usize,
    residues: u64,
) -> Result<BenchRow, CliError> {
    let aligner = registry.get(mode).expect("built-in");
    let mut runs = Vec::new();
    for _ in 0..repetitions {
        let t = Instant::now();
        let mut hits = Vec::new();
        for p in partitions {
            hits.push(map_partition(aligner.as_ref(), query, p, scheme, config, k)?);
        }
        let wall = t.elapsed().as_secs_f64() * 1000.0;
        let merged = crate::topk::finalize_topk(crate::topk::merge_topk(hits, k)?, k)?;
        runs.push((wall, merged));
    }
    let (wall_ms, merged) = median_by_wall(runs);
    Ok(BenchRow {
        kind: "kernel".into(),
        workers: 0,
        mode: mode.into(),
        query_id: query.id.clone(),
        query_length: query.len(),
        queries: 1,
        reference_residues: residues,
        repetitions,
        wall_ms,
        kernel_ms: wall_ms.round() as i64,
        cache_hits: 0,
        cache_misses: 0,
        throughput_residues_per_sec: throughput(residues, 1, wall_ms),
        results_digest: digest(&format_tsv([(query.id.as_str(), merged.as_slice())])),
    })
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    /// Comma-separated worker counts.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    pub workers: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 1)]
    pub slots: usize,
    #[arg(long, default_value_t = 256 << 20)]
    pub cache_bytes: usize,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Scratch directory for worker shards; a fresh temp dir by default.
    #[arg(long)]
    pub work_dir: Option<PathBuf>,
    /// One job with all queries instead of one job per query.
    #[arg(long)]
    pub whole_job: bool,
    /// Query length for the scalar-vs-striped rows.
    #[arg(long, default_value_t = 512)]
    pub kernel_query_length: usize,
    #[arg(long)]
    pub no_kernel_rows: bool,
    /// Also write the report here.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub(super) fn cmd_bench(a: BenchArgs) -> Result<(), CliError> {
    let queries = read_queries(&a.queries)?;
    let scheme = a.scheme.build(&queries)?;
    let registry = AlignerRegistry::with_builtins();
    a.run.check(&registry)?;
    let exe = std::env::current_exe().map_err(|e| spawn_err("current executable", e))?;
    let work_dir = a.work_dir.unwrap_or_else(|| std::env::temp_dir().join(format!("dsa-bench-{}", std::process::id())));
    let spec = BenchSpec {
        exe,
        manifest: a.manifest,
        queries,
        scheme,
        run: a.run,
        workers: a.workers,
        repetitions: a.repetitions,
        cluster: ClusterOptions { slots: a.slots, cache_bytes: a.cache_bytes, ..ClusterOptions::default() },
        work_dir,
        whole_job: a.whole_job,
        kernel_query_length: (!a.no_kernel_rows).then_some(a.kernel_query_length),
    };
    let mut file = match &a.output {
        Some(p) => Some(std::fs::File::create(p).map_err(|e| super::io_err(p, e))?),
        None => None,
    };
    let mut write_err = None;
    run_bench(&spec, |row| {
        let line = serde_json::to_string(row).expect("row serializes");
        println!("{line}");
        if let Some(f) = file.as_mut() {
            if let Err(e) = writeln!(f, "{line}") {
                write_err.get_or_insert(e);
            }
        }
    })?;
    if let (Some(e), Some(p)) = (write_err, &a.output) {
        return Err(super::io_err(p, e));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_three() {
        let (w, tag) = median_by_wall(vec![(30.0, 'a'), (10.0, 'b'), (20.0, 'c')]);
        assert_eq!((w, tag), (20.0, 'c'));
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(digest(""), "cbf29ce484222325");
        assert_eq!(digest("a"), "af63dc4c8601ec8c");
    }

    #[test]
    fn row_field_names() {
        let row = BenchRow {
            kind: "cluster".into(),
            workers: 2,
            mode: "local".into(),
            query_id: "q".into(),
            query_length: 8,
            queries: 1,
            reference_residues: 100,
            repetitions: 3,
            wall_ms: 1000.0,
            kernel_ms: 5,
            cache_hits: 1,
            cache_misses: 2,
            throughput_residues_per_sec: throughput(100, 1, 1000.0),
            results_digest: String::new(),
        };
        let v: serde_json::Value = serde_json::to_value(&row).unwrap();
        for key in [
            "workers",
            "queryLength",
            "referenceResidues",
            "wallMs",
            "kernelMs",
            "cacheHits",
            "cacheMisses",
            "throughputResiduesPerSec",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["throughputResiduesPerSec"], 100.0);
    }
}
