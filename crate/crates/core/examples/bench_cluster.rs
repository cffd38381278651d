//! Throughput over 1, 2 and 4 worker processes, as JSON rows.
//!
//! Needs the `dsa` binary: `cargo build --bin dsa` first, or pass its path
//! as the first argument.

use std::path::PathBuf;

use dsa::cli::bench::{run_bench, BenchSpec, ClusterOptions};
use dsa::cli::gen::{generate, write_dataset, DatasetGenConfig};
use dsa::cli::RunArgs;
use dsa::scoring::ScoringScheme;
use dsa::seqio::partition_reference;

fn main() {
    let exe = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        // target/<profile>/examples/bench_cluster -> target/<profile>/dsa
        let here = std::env::current_exe().unwrap();
        here.parent().unwrap().parent().unwrap().join("dsa")
    });
    assert!(exe.exists(), "{} not found; build the dsa binary first", exe.display());

    let dir = tempfile::tempdir().unwrap();
    let data = generate(&DatasetGenConfig {
        target_reference_residues: 200_000,
        query_lengths: vec![128, 512],
        ..Default::default()
    })
    .unwrap();
    write_dataset(&data, dir.path()).unwrap();
    let manifest = partition_reference(&data.reference, 10_000, dir.path().join("parts")).unwrap();

    let spec = BenchSpec {
        exe,
        manifest: manifest.manifest_path(),
        queries: data.queries,
        scheme: ScoringScheme::default_nucleotide(),
        run: RunArgs { mode: "local".into(), k: 10, lanes: 16, cell_width: 8 },
        workers: vec![1, 2, 4],
        repetitions: 3,
        cluster: ClusterOptions::default(),
        work_dir: dir.path().join("work"),
        whole_job: true,
        kernel_query_length: Some(512),
    };
    run_bench(&spec, |row| println!("{}", serde_json::to_string(row).unwrap())).unwrap();
}
