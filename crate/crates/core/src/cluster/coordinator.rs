//! TCP front end for the [`Scheduler`].
//!
//! One reader thread per connection turns frames into events; a single loop
//! thread owns the scheduler and performs all writes. A tick thread drives
//! heartbeat timeouts. PARTITION_FETCH is answered directly by the reader
//! thread since it needs no scheduler state.

use std::collections::HashMap;
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use super::protocol::{read_message, write_message, Message, PartitionData};
use super::scheduler::{ConnId, Outbound, Scheduler, SchedulerConfig, STATE_RUNNING};
use super::ClusterError;
use crate::seqio::{load_partition, PartitionManifest};

#[derive(Clone, Debug)]
pub struct CoordinatorConfig {
    /// Address to bind, e.g. `127.0.0.1:7000`; port 0 picks a free port.
    pub bind: String,
    pub manifest: Option<PartitionManifest>,
    pub scheduler: SchedulerConfig,
    /// How often heartbeat timeouts are checked.
    pub tick_ms: u64,
}

impl CoordinatorConfig {
    pub fn new(bind: impl Into<String>, manifest: Option<PartitionManifest>) -> Self {
        CoordinatorConfig { bind: bind.into(), manifest, scheduler: SchedulerConfig::default(), tick_ms: 250 }
    }
}

type Writer = Arc<Mutex<TcpStream>>;

enum Event {
    Connected(ConnId, Writer),
    Frame(ConnId, Box<Message>),
    Closed(ConnId),
    Tick,
    Shutdown,
}

pub struct Coordinator;

pub struct CoordinatorHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    events: Sender<Event>,
    threads: Vec<JoinHandle<()>>,
}

impl CoordinatorHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Blocks until the coordinator stops.
    pub fn join(mut self) {
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }

    pub fn shutdown(self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = self.events.send(Event::Shutdown);
        // Unblock accept().
        let _ = TcpStream::connect(self.addr);
        self.join();
    }
}

impl Coordinator {
    pub fn start(config: CoordinatorConfig) -> Result<CoordinatorHandle, ClusterError> {
        let addr = config
            .bind
            .to_socket_addrs()
            .map_err(|e| ClusterError::Io(format!("{}: {e}", config.bind)))?
            .next()
            .ok_or_else(|| ClusterError::Io(format!("{}: no address", config.bind)))?;
        let listener = TcpListener::bind(addr).map_err(|e| ClusterError::Io(format!("bind {addr}: {e}")))?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let (tx, rx) = channel();
        let manifest = Arc::new(config.manifest.clone());
        let partitions = config.manifest.as_ref().map(|m| m.partitions.iter().map(|p| p.partition_id).collect());
        let scheduler = Scheduler::new(config.scheduler, partitions);
        log::info!("coordinator listening on {addr}");

        let mut threads = Vec::new();
        threads.push(std::thread::spawn(move || event_loop(scheduler, rx)));

        let (tick_tx, tick_stop, tick_ms) = (tx.clone(), Arc::clone(&stop), config.tick_ms.max(1));
        threads.push(std::thread::spawn(move || {
            while !tick_stop.load(Ordering::SeqCst) {
                std::thread::sleep(Duration::from_millis(tick_ms));
                if tick_tx.send(Event::Tick).is_err() {
                    break;
                }
            }
        }));

        let (accept_tx, accept_stop) = (tx.clone(), Arc::clone(&stop));
        threads.push(std::thread::spawn(move || {
            let next_id = AtomicU64::new(1);
            for stream in listener.incoming() {
                if accept_stop.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                let conn = next_id.fetch_add(1, Ordering::SeqCst);
                let _ = stream.set_nodelay(true);
                let _ = stream.set_write_timeout(Some(Duration::from_secs(30)));
                let Ok(reader) = stream.try_clone() else { continue };
                let writer = Arc::new(Mutex::new(stream));
                if accept_tx.send(Event::Connected(conn, Arc::clone(&writer))).is_err() {
                    break;
                }
                let (tx, manifest) = (accept_tx.clone(), Arc::clone(&manifest));
                std::thread::spawn(move || read_loop(conn, reader, writer, tx, manifest));
            }
        }));

        Ok(CoordinatorHandle { addr, stop, events: tx, threads })
    }
}

fn read_loop(
    conn: ConnId,
    mut reader: TcpStream,
    writer: Writer,
    tx: Sender<Event>,
    manifest: Arc<Option<PartitionManifest>>,
) {
    loop {
        match read_message(&mut reader) {
            Ok(Some(Message::PartitionFetch { partition_id })) => {
                let reply = match manifest.as_ref() {
                    None => Message::error("NoManifest", "coordinator has no manifest"),
                    Some(m) => match load_partition(m, partition_id as u64) {
                        Ok(p) => Message::PartitionData(PartitionData { partition_id, records: p.records }),
                        Err(e) => Message::error("PartitionUnavailable", e.to_string()),
                    },
                };
                let mut w = writer.lock().unwrap();
                if write_message(&mut *w, &reply).is_err() {
                    break;
                }
            }
            Ok(Some(msg)) => {
                if tx.send(Event::Frame(conn, Box::new(msg))).is_err() {
                    break;
                }
            }
            Ok(None) => break,
            Err(e) => {
                log::warn!("connection {conn}: {e}");
                let mut w = writer.lock().unwrap();
                let _ = write_message(&mut *w, &Message::error("ProtocolError", e.to_string()));
                break;
            }
        }
    }
    let _ = tx.send(Event::Closed(conn));
}

struct Loop {
    scheduler: Scheduler,
    started: Instant,
    conns: HashMap<ConnId, Writer>,
    worker_conn: HashMap<String, ConnId>,
    conn_worker: HashMap<ConnId, String>,
}

impl Loop {
    fn now_ms(&self) -> u64 {
        self.started.elapsed().as_millis() as u64
    }

    fn send(&mut self, conn: ConnId, msg: &Message) {
        let Some(w) = self.conns.get(&conn) else { return };
        let mut stream = w.lock().unwrap();
        if let Err(e) = write_message(&mut *stream, msg) {
            log::warn!("write to connection {conn} failed: {e}");
            // The reader sees EOF and reports the loss.
            let _ = stream.shutdown(Shutdown::Both);
        }
    }

    fn deliver(&mut self, out: Vec<Outbound>) {
        for o in out {
            match o {
                Outbound::Worker(w, msg) => match self.worker_conn.get(&w).copied() {
                    Some(c) => self.send(c, &msg),
                    None => log::warn!("no connection for worker {w}"),
                },
                Outbound::Client(c, msg) => self.send(c, &msg),
            }
        }
    }

    fn drop_worker(&mut self, worker_id: &str) {
        if let Some(c) = self.worker_conn.remove(worker_id) {
            self.conn_worker.remove(&c);
            if let Some(w) = self.conns.get(&c) {
                let _ = w.lock().unwrap().shutdown(Shutdown::Both);
            }
        }
    }

    fn reject(&mut self, conn: ConnId, e: &ClusterError) {
        self.send(conn, &Message::error(e.code(), e.to_string()));
    }

    fn frame(&mut self, conn: ConnId, msg: Message) {
        let now = self.now_ms();
        match msg {
            Message::Register(reg) => {
                if self.conn_worker.contains_key(&conn) {
                    self.reject(conn, &ClusterError::Protocol("connection already registered".into()));
                    return;
                }
                let id = reg.worker_id.clone();
                match self.scheduler.register_worker(reg, now) {
                    Ok((ack, out)) => {
                        self.worker_conn.insert(id.clone(), conn);
                        self.conn_worker.insert(conn, id);
                        self.send(conn, &Message::RegisterAck(ack));
                        self.deliver(out);
                    }
                    Err(e) => {
                        self.reject(conn, &e);
                        if let Some(w) = self.conns.get(&conn) {
                            let _ = w.lock().unwrap().shutdown(Shutdown::Both);
                        }
                    }
                }
            }
            Message::Heartbeat(hb) => {
                if self.conn_worker.get(&conn) == Some(&hb.worker_id) {
                    let out = self.scheduler.heartbeat(&hb.worker_id, &hb.cached_partitions, now);
                    self.deliver(out);
                }
            }
            Message::TaskResult(res) => {
                let out = self.scheduler.task_result(res, now);
                self.deliver(out);
            }
            Message::SubmitJob(job) => match self.scheduler.submit_job(job) {
                Ok((status, out)) => {
                    self.send(conn, &Message::JobStatus(status));
                    self.deliver(out);
                }
                Err(e) => self.reject(conn, &e),
            },
            Message::JobStatus(q) => match self.scheduler.job_status(&q.job_id) {
                Ok(status) => {
                    let terminal = status.state != STATE_RUNNING;
                    self.send(conn, &Message::JobStatus(status));
                    if terminal {
                        if let Some(r) = self.scheduler.job_result(&q.job_id).cloned() {
                            self.send(conn, &Message::JobResult(r));
                        }
                    }
                }
                Err(e) => self.reject(conn, &e),
            },
            other => self.reject(conn, &ClusterError::Protocol(format!("unexpected message type {}", other.code()))),
        }
    }
}

fn event_loop(scheduler: Scheduler, rx: Receiver<Event>) {
    let mut state = Loop {
        scheduler,
        started: Instant::now(),
        conns: HashMap::new(),
        worker_conn: HashMap::new(),
        conn_worker: HashMap::new(),
    };
    for ev in rx {
        match ev {
            Event::Connected(c, w) => {
                state.conns.insert(c, w);
            }
            Event::Frame(c, msg) => state.frame(c, *msg),
            Event::Closed(c) => {
                state.conns.remove(&c);
                if let Some(w) = state.conn_worker.remove(&c) {
                    state.worker_conn.remove(&w);
                    let out = state.scheduler.worker_lost(&w);
                    state.deliver(out);
                }
            }
            Event::Tick => {
                let now = state.now_ms();
                let (lost, out) = state.scheduler.tick(now);
                for w in &lost {
                    log::warn!("worker {w} missed heartbeats");
                    state.drop_worker(w);
                }
                state.deliver(out);
            }
            Event::Shutdown => break,
        }
    }
    for w in state.conns.values() {
        let _ = w.lock().unwrap().shutdown(Shutdown::Both);
    }
    log::info!("coordinator stopped");
}
