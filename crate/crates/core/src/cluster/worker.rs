//! Worker process: registers with the coordinator, runs assigned map tasks
//! on a fixed number of slots, and reports results and heartbeats.

use std::net::{Shutdown, SocketAddr, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicI64, Ordering};
use std::sync::mpsc::{channel, Receiver};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use super::cache::{SharedCache, WorkerStore};
use super::protocol::{read_message, write_message, Heartbeat, Message, Register, TaskAssign, TaskResult, TaskStatus};
use super::ClusterError;
use crate::engine::{map_partition, AlignerRegistry, EngineError};
use crate::seqio::PartitionManifest;
use crate::striped::KernelConfig;

#[derive(Clone, Debug)]
pub struct WorkerConfig {
    pub worker_id: String,
    pub coordinator: SocketAddr,
    pub slots: usize,
    pub cache_capacity_bytes: usize,
    /// Local shard directory; shards fetched from the coordinator land here.
    pub data_dir: PathBuf,
    /// Shared manifest readable from this host, used before remote fetches.
    pub manifest: Option<PartitionManifest>,
    pub registry: AlignerRegistry,
}

impl WorkerConfig {
    pub fn new(worker_id: impl Into<String>, coordinator: SocketAddr, data_dir: impl Into<PathBuf>) -> Self {
        WorkerConfig {
            worker_id: worker_id.into(),
            coordinator,
            slots: 1,
            cache_capacity_bytes: 256 << 20,
            data_dir: data_dir.into(),
            manifest: None,
            registry: AlignerRegistry::with_builtins(),
        }
    }
}

pub struct Worker;

pub struct WorkerHandle {
    worker_id: String,
    preferred: Vec<u64>,
    stream: TcpStream,
    cache: Arc<SharedCache>,
    reader: Option<JoinHandle<()>>,
    others: Vec<JoinHandle<()>>,
}

impl WorkerHandle {
    pub fn worker_id(&self) -> &str {
        &self.worker_id
    }

    /// Partitions the coordinator routes here by default.
    pub fn preferred_partitions(&self) -> &[u64] {
        &self.preferred
    }

    pub fn cache(&self) -> &SharedCache {
        &self.cache
    }

    /// Blocks until the coordinator connection closes.
    pub fn join(mut self) {
        if let Some(r) = self.reader.take() {
            let _ = r.join();
        }
        for t in self.others.drain(..) {
            let _ = t.join();
        }
    }

    /// Drops the coordinator connection, as a crash would.
    pub fn shutdown(self) {
        let _ = self.stream.shutdown(Shutdown::Both);
        self.join();
    }
}

type Writer = Arc<Mutex<TcpStream>>;

fn send(writer: &Writer, msg: &Message) -> bool {
    write_message(&mut *writer.lock().unwrap(), msg).is_ok()
}

fn resident(cache: &SharedCache) -> Vec<i64> {
    cache.resident().into_iter().map(|p| p as i64).collect()
}

/// Runs one map task against the cache.
pub fn execute_task(worker_id: &str, registry: &AlignerRegistry, cache: &SharedCache, task: &TaskAssign) -> TaskResult {
    let started = Instant::now();
    let mut kernel_ms = 0;
    let mut cache_hit = false;
    let outcome = (|| -> Result<_, String> {
        let aligner = registry.get(&task.params.algorithm).ok_or_else(|| {
            format!("UnknownAlgorithm: {}", EngineError::UnknownAlgorithm(task.params.algorithm.clone()))
        })?;
        let config = KernelConfig::new(task.params.lanes as usize, task.params.cell_width as u32)
            .map_err(|e| format!("InvalidConfig: {e}"))?;
        let (partition, hit) = cache.fetch(task.partition_id as u64).map_err(|e| format!("{}: {e}", e.code()))?;
        cache_hit = hit;
        let kernel = Instant::now();
        let hits = map_partition(
            aligner.as_ref(),
            &task.query,
            &partition.records,
            &task.params.scheme,
            config,
            task.params.k.max(1) as usize,
        )
        .map_err(|e| format!("KernelError: {e}"))?;
        kernel_ms = kernel.elapsed().as_millis() as i64;
        Ok(hits)
    })();
    let (status, hits) = match outcome {
        Ok(h) => (TaskStatus::Ok, h),
        Err(e) => {
            log::warn!("task {} failed: {e}", task.task_id);
            (TaskStatus::Failed(e), Vec::new())
        }
    };
    TaskResult {
        task_id: task.task_id.clone(),
        job_id: task.job_id.clone(),
        worker_id: worker_id.to_string(),
        attempt: task.attempt,
        status,
        hits,
        timing_ms: started.elapsed().as_millis() as i64,
        kernel_ms,
        cache_hit,
        cached_partitions: resident(cache),
    }
}

impl Worker {
    /// Connects and registers. Fails on a rejected registration.
    pub fn start(config: WorkerConfig) -> Result<WorkerHandle, ClusterError> {
        let mut store = WorkerStore::new(&config.data_dir)?.with_remote(config.coordinator);
        if let Some(m) = config.manifest.clone() {
            store = store.with_manifest(m);
        }
        let cache = Arc::new(SharedCache::new(config.cache_capacity_bytes, Box::new(store)));

        let mut stream = TcpStream::connect(config.coordinator)
            .map_err(|e| ClusterError::Io(format!("connect {}: {e}", config.coordinator)))?;
        let _ = stream.set_nodelay(true);
        let local = stream.local_addr().map(|a| a.to_string()).unwrap_or_default();
        let slots = config.slots.max(1);
        write_message(
            &mut stream,
            &Message::Register(Register {
                worker_id: config.worker_id.clone(),
                address: local,
                slots: slots as i64,
                cache_capacity_bytes: config.cache_capacity_bytes as i64,
                cached_partitions: resident(&cache),
            }),
        )?;
        let ack = match read_message(&mut stream)? {
            Some(Message::RegisterAck(a)) => a,
            Some(Message::Error(e)) => return Err(ClusterError::Remote { code: e.code, message: e.message }),
            other => return Err(ClusterError::Protocol(format!("expected REGISTER_ACK, got {other:?}"))),
        };
        log::info!("worker {} registered; preferred partitions {:?}", config.worker_id, ack.preferred_partitions);

        let writer: Writer = Arc::new(Mutex::new(stream.try_clone()?));
        let stop = Arc::new(AtomicBool::new(false));
        let active = Arc::new(AtomicI64::new(0));
        let (task_tx, task_rx) = channel::<TaskAssign>();
        let task_rx = Arc::new(Mutex::new(task_rx));
        let registry = Arc::new(config.registry);
        let mut others = Vec::new();

        for _ in 0..slots {
            let (rx, writer, cache, registry, active, id) = (
                Arc::clone(&task_rx),
                Arc::clone(&writer),
                Arc::clone(&cache),
                Arc::clone(&registry),
                Arc::clone(&active),
                config.worker_id.clone(),
            );
            others.push(std::thread::spawn(move || slot_loop(&id, &rx, &writer, &cache, &registry, &active)));
        }

        {
            let (writer, cache, stop, active, id) = (
                Arc::clone(&writer),
                Arc::clone(&cache),
                Arc::clone(&stop),
                Arc::clone(&active),
                config.worker_id.clone(),
            );
            let interval = Duration::from_millis(ack.heartbeat_ms.max(1) as u64);
            others.push(std::thread::spawn(move || {
                let tick = Duration::from_millis(20).min(interval);
                let mut last = Instant::now();
                while !stop.load(Ordering::SeqCst) {
                    std::thread::sleep(tick);
                    if last.elapsed() < interval {
                        continue;
                    }
                    last = Instant::now();
                    let hb = Message::Heartbeat(Heartbeat {
                        worker_id: id.clone(),
                        active_tasks: active.load(Ordering::SeqCst),
                        cached_partitions: resident(&cache),
                    });
                    if !send(&writer, &hb) {
                        break;
                    }
                }
            }));
        }

        let mut reader = stream.try_clone()?;
        let reader_stop = Arc::clone(&stop);
        let reader = std::thread::spawn(move || {
            loop {
                match read_message(&mut reader) {
                    Ok(Some(Message::TaskAssign(t))) => {
                        if task_tx.send(t).is_err() {
                            break;
                        }
                    }
                    Ok(Some(Message::Error(e))) => log::warn!("coordinator error {}: {}", e.code, e.message),
                    Ok(Some(other)) => log::warn!("ignoring message type {}", other.code()),
                    Ok(None) => break,
                    Err(e) => {
                        log::warn!("coordinator connection: {e}");
                        break;
                    }
                }
            }
            reader_stop.store(true, Ordering::SeqCst);
            log::info!("coordinator connection closed");
        });

        Ok(WorkerHandle {
            worker_id: config.worker_id,
            preferred: ack.preferred_partitions.iter().map(|&p| p as u64).collect(),
            stream,
            cache,
            reader: Some(reader),
            others,
        })
    }
}

fn slot_loop(
    worker_id: &str,
    rx: &Mutex<Receiver<TaskAssign>>,
    writer: &Writer,
    cache: &SharedCache,
    registry: &AlignerRegistry,
    active: &AtomicI64,
) {
    loop {
        let task = match rx.lock().unwrap().recv() {
            Ok(t) => t,
            Err(_) => return,
        };
        active.fetch_add(1, Ordering::SeqCst);
        let result = execute_task(worker_id, registry, cache, &task);
        active.fetch_sub(1, Ordering::SeqCst);
        if !send(writer, &Message::TaskResult(result)) {
            return;
        }
    }
}
