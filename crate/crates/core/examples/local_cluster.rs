//! Coordinator and workers in one process, talking over loopback TCP.

use std::time::Duration;

use dsa::cluster::protocol::{JobParams, SubmitJob};
use dsa::cluster::{submit_and_wait, ClientOptions, Coordinator, CoordinatorConfig, Worker, WorkerConfig};
use dsa::scoring::ScoringScheme;
use dsa::seqio::{partition_reference, SequenceRecord};

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let reference: Vec<_> = (0..40)
        .map(|i| SequenceRecord::new(format!("r{i}"), "ACGTTGCA".repeat(5 + i % 7) + &"GATTACA".repeat(i % 3)))
        .collect();
    let manifest = partition_reference(&reference, 400, dir.path().join("parts")).unwrap();

    let coordinator = Coordinator::start(CoordinatorConfig::new("127.0.0.1:0", Some(manifest))).unwrap();
    let addr = coordinator.local_addr();
    // Workers get no manifest, so they fetch shards from the coordinator.
    let workers: Vec<_> = ["w0", "w1", "w2"]
        .iter()
        .map(|id| Worker::start(WorkerConfig::new(*id, addr, dir.path().join(id))).unwrap())
        .collect();
    for w in &workers {
        // Ownership is rebalanced as later workers join; this is the view at registration.
        println!("{} registered owning {:?}", w.worker_id(), w.preferred_partitions());
    }

    let job = SubmitJob {
        job_id: "demo".into(),
        manifest_ref: String::new(),
        params: JobParams {
            algorithm: "local".into(),
            scheme: ScoringScheme::default_nucleotide(),
            k: 3,
            lanes: 16,
            cell_width: 8,
        },
        queries: vec![SequenceRecord::new("q0", "GATTACAGATTACA"), SequenceRecord::new("q1", "TTGCAACGTTGCA")],
    };
    let opts = ClientOptions { poll_interval: Duration::from_millis(10), timeout: Some(Duration::from_secs(30)) };
    let result = submit_and_wait(addr, job, opts).unwrap();
    println!("job {} {}", result.job_id, result.state);
    for q in &result.queries {
        for (rank, h) in q.hits.iter().enumerate() {
            println!("{} {} {} {} {}", q.query_id, rank + 1, h.ref_name, h.max_score, h.cigar);
        }
    }
    println!(
        "kernel {} ms, cache hits {}, misses {}",
        result.stats.kernel_ms, result.stats.cache_hits, result.stats.cache_misses
    );

    for w in workers {
        w.shutdown();
    }
    coordinator.shutdown();
}
