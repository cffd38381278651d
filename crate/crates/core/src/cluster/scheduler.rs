//! Coordinator state machine, independent of any transport.
//!
//! Every input (registration, heartbeat, submission, task result, worker
//! loss, clock tick) is a method call that mutates the state and returns the
//! messages to send. Time is passed in explicitly as milliseconds.

use std::collections::{BTreeSet, VecDeque};

use indexmap::IndexMap;

use super::protocol::{
    JobParams, JobResult, JobStats, JobStatus, Message, QueryHits, Register, RegisterAck, SubmitJob, TaskAssign,
    TaskResult, TaskStatus,
};
use super::ClusterError;
use crate::align::AlignmentResult;
use crate::seqio::SequenceRecord;
use crate::topk::{finalize_topk, merge_topk};

pub type ConnId = u64;

pub const STATE_RUNNING: &str = "RUNNING";
pub const STATE_DONE: &str = "DONE";
pub const STATE_FAILED: &str = "FAILED";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SchedulerConfig {
    pub heartbeat_ms: u64,
    /// A worker is lost after this many intervals without a message.
    pub timeout_intervals: u64,
    /// Attempts per task before it counts as failed. Worker loss does not use
    /// up an attempt.
    pub max_attempts: u32,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig { heartbeat_ms: 2000, timeout_intervals: 3, max_attempts: 3 }
    }
}

/// Message addressed by the scheduler.
#[derive(Clone, Debug, PartialEq)]
pub enum Outbound {
    Worker(String, Message),
    Client(ConnId, Message),
}

#[derive(Debug)]
struct WorkerState {
    address: String,
    slots: usize,
    cached: BTreeSet<u64>,
    queue: VecDeque<String>,
    in_flight: BTreeSet<String>,
    last_seen_ms: u64,
}

impl WorkerState {
    fn load(&self) -> usize {
        self.queue.len() + self.in_flight.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum TaskPhase {
    Pending,
    Queued(String),
    Running(String),
    Done,
    Failed(String),
}

#[derive(Debug)]
struct TaskState {
    job_id: String,
    query_index: usize,
    partition_id: u64,
    /// Attempts that ended in a FAILED result.
    failures: u32,
    failed_on: Vec<String>,
    phase: TaskPhase,
    hits: Vec<AlignmentResult>,
}

#[derive(Debug)]
struct JobState {
    params: JobParams,
    queries: Vec<SequenceRecord>,
    task_ids: Vec<String>,
    completed: usize,
    failed: usize,
    stats: JobStats,
    result: Option<JobResult>,
}

/// Snapshot of one worker for inspection and tests.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorkerView {
    pub worker_id: String,
    pub address: String,
    pub slots: usize,
    pub queued: usize,
    pub in_flight: usize,
    pub cached: Vec<u64>,
}

#[derive(Debug)]
pub struct Scheduler {
    config: SchedulerConfig,
    partitions: Option<Vec<u64>>,
    workers: IndexMap<String, WorkerState>,
    preferred: Vec<String>,
    tasks: IndexMap<String, TaskState>,
    jobs: IndexMap<String, JobState>,
    parked: VecDeque<String>,
    next_job: u64,
}

impl Scheduler {
    pub fn new(config: SchedulerConfig, partitions: Option<Vec<u64>>) -> Self {
        Scheduler {
            config,
            partitions,
            workers: IndexMap::new(),
            preferred: Vec::new(),
            tasks: IndexMap::new(),
            jobs: IndexMap::new(),
            parked: VecDeque::new(),
            next_job: 1,
        }
    }

    pub fn config(&self) -> SchedulerConfig {
        self.config
    }

    pub fn worker_ids(&self) -> Vec<String> {
        self.workers.keys().cloned().collect()
    }

    pub fn workers(&self) -> Vec<WorkerView> {
        self.workers
            .iter()
            .map(|(id, w)| WorkerView {
                worker_id: id.clone(),
                address: w.address.clone(),
                slots: w.slots,
                queued: w.queue.len(),
                in_flight: w.in_flight.len(),
                cached: w.cached.iter().copied().collect(),
            })
            .collect()
    }

    /// Preferred owner of every partition, in partition order.
    pub fn preferred_map(&self) -> Vec<(u64, String)> {
        self.partitions.iter().flatten().zip(&self.preferred).map(|(&p, w)| (p, w.clone())).collect()
    }

    pub fn parked_tasks(&self) -> usize {
        self.parked.len()
    }

    fn rebalance_preferred(&mut self) {
        let ids: Vec<String> = self.workers.keys().cloned().collect();
        self.preferred = match (&self.partitions, ids.is_empty()) {
            (Some(parts), false) => (0..parts.len()).map(|i| ids[i % ids.len()].clone()).collect(),
            _ => Vec::new(),
        };
    }

    fn preferred_for(&self, partition_id: u64) -> Option<&String> {
        let idx = self.partitions.as_ref()?.iter().position(|&p| p == partition_id)?;
        self.preferred.get(idx)
    }

    pub fn register_worker(
        &mut self,
        info: Register,
        now_ms: u64,
    ) -> Result<(RegisterAck, Vec<Outbound>), ClusterError> {
        if self.partitions.is_none() {
            return Err(ClusterError::NoManifest);
        }
        if self.workers.contains_key(&info.worker_id) {
            return Err(ClusterError::DuplicateWorkerId(info.worker_id));
        }
        let id = info.worker_id.clone();
        self.workers.insert(
            id.clone(),
            WorkerState {
                address: info.address,
                slots: info.slots.max(1) as usize,
                cached: info.cached_partitions.iter().map(|&p| p as u64).collect(),
                queue: VecDeque::new(),
                in_flight: BTreeSet::new(),
                last_seen_ms: now_ms,
            },
        );
        self.rebalance_preferred();
        log::info!("worker {id} registered ({} live)", self.workers.len());
        let preferred_partitions =
            self.preferred_map().into_iter().filter(|(_, w)| *w == id).map(|(p, _)| p as i64).collect();
        let ack = RegisterAck { worker_id: id, heartbeat_ms: self.config.heartbeat_ms as i64, preferred_partitions };
        let parked: Vec<String> = self.parked.drain(..).collect();
        if !parked.is_empty() {
            log::info!("resuming {} parked tasks", parked.len());
            self.place(&parked);
        }
        Ok((ack, self.dispatch()))
    }

    pub fn heartbeat(&mut self, worker_id: &str, cached: &[i64], now_ms: u64) -> Vec<Outbound> {
        if let Some(w) = self.workers.get_mut(worker_id) {
            w.last_seen_ms = now_ms;
            w.cached = cached.iter().map(|&p| p as u64).collect();
        }
        self.dispatch()
    }

    /// Assignment for each task: the worker already caching its partition
    /// (least loaded among several), else the preferred worker. Loads are
    /// then levelled to within one task by moving tasks that are not
    /// cache-resident where they were placed.
    pub fn plan(&self, tasks: &[(String, u64)]) -> Result<Vec<(String, String)>, ClusterError> {
        if self.workers.is_empty() {
            return Err(ClusterError::NoWorkers);
        }
        let ids: Vec<&String> = self.workers.keys().collect();
        let mut load: Vec<usize> = self.workers.values().map(WorkerState::load).collect();
        let mut plan: Vec<(usize, usize, bool)> = Vec::with_capacity(tasks.len());
        for (t, (_, partition)) in tasks.iter().enumerate() {
            let cached = self
                .workers
                .values()
                .enumerate()
                .filter(|(_, w)| w.cached.contains(partition))
                .min_by_key(|&(i, _)| (load[i], i))
                .map(|(i, _)| i);
            let (w, resident) = match cached {
                Some(i) => (i, true),
                None => {
                    let pref = self.preferred_for(*partition).expect("partition has an owner");
                    (self.workers.get_index_of(pref).expect("owner is live"), false)
                }
            };
            load[w] += 1;
            plan.push((t, w, resident));
        }
        loop {
            let (max_w, max_l) =
                load.iter().enumerate().map(|(i, &l)| (i, l)).max_by_key(|&(i, l)| (l, usize::MAX - i)).unwrap();
            let (min_w, min_l) = load.iter().enumerate().map(|(i, &l)| (i, l)).min_by_key(|&(i, l)| (l, i)).unwrap();
            if max_l <= min_l + 1 {
                break;
            }
            let Some(pos) = plan.iter().rposition(|&(_, w, resident)| w == max_w && !resident) else {
                break;
            };
            plan[pos].1 = min_w;
            load[max_w] -= 1;
            load[min_w] += 1;
        }
        Ok(plan.into_iter().map(|(t, w, _)| (tasks[t].0.clone(), ids[w].clone())).collect())
    }

    /// Queues the given pending tasks on workers, or parks them when no
    /// worker is live.
    fn place(&mut self, task_ids: &[String]) {
        let tasks: Vec<(String, u64)> = task_ids.iter().map(|id| (id.clone(), self.tasks[id].partition_id)).collect();
        match self.plan(&tasks) {
            Ok(plan) => {
                for (task_id, worker) in plan {
                    self.tasks[&task_id].phase = TaskPhase::Queued(worker.clone());
                    self.workers[&worker].queue.push_back(task_id);
                }
            }
            Err(_) => {
                for id in task_ids {
                    self.tasks[id].phase = TaskPhase::Pending;
                    self.parked.push_back(id.clone());
                }
            }
        }
    }

    fn assign_message(&self, task_id: &str, worker_id: &str) -> Outbound {
        let t = &self.tasks[task_id];
        let job = &self.jobs[&t.job_id];
        Outbound::Worker(
            worker_id.to_string(),
            Message::TaskAssign(TaskAssign {
                task_id: task_id.to_string(),
                job_id: t.job_id.clone(),
                partition_id: t.partition_id as i64,
                attempt: t.failures as i64 + 1,
                params: job.params.clone(),
                query: job.queries[t.query_index].clone(),
            }),
        )
    }

    /// Fills free execution slots. An idle worker with an empty queue takes
    /// the newest queued task from the most loaded worker, preferring tasks
    /// whose partition it caches.
    fn dispatch(&mut self) -> Vec<Outbound> {
        let mut out = Vec::new();
        let ids: Vec<String> = self.workers.keys().cloned().collect();
        for id in &ids {
            loop {
                let w = &self.workers[id];
                if w.in_flight.len() >= w.slots {
                    break;
                }
                let next = match self.workers[id].queue.pop_front() {
                    Some(t) => Some(t),
                    None => self.steal_for(id),
                };
                let Some(task_id) = next else { break };
                self.tasks[&task_id].phase = TaskPhase::Running(id.clone());
                self.workers[id].in_flight.insert(task_id.clone());
                out.push(self.assign_message(&task_id, id));
            }
        }
        out
    }

    fn steal_for(&mut self, thief: &str) -> Option<String> {
        let tasks = &self.tasks;
        let eligible = |t: &String| !tasks[t].failed_on.iter().any(|w| w == thief);
        let victim = self
            .workers
            .iter()
            .filter(|(id, w)| id.as_str() != thief && w.queue.iter().any(eligible))
            .max_by_key(|(_, w)| w.queue.len())
            .map(|(id, _)| id.clone())?;
        let cached = &self.workers[thief].cached;
        let queue = &self.workers[&victim].queue;
        let pos = queue
            .iter()
            .rposition(|t| eligible(t) && cached.contains(&tasks[t].partition_id))
            .or_else(|| queue.iter().rposition(eligible))?;
        self.workers[&victim].queue.remove(pos)
    }

    pub fn submit_job(&mut self, job: SubmitJob) -> Result<(JobStatus, Vec<Outbound>), ClusterError> {
        let partitions = self.partitions.clone().ok_or(ClusterError::NoManifest)?;
        if job.queries.is_empty() {
            return Err(ClusterError::InvalidJob("job has no queries".into()));
        }
        if job.params.k < 1 {
            return Err(ClusterError::InvalidJob(format!("k must be at least 1, got {}", job.params.k)));
        }
        if self.workers.is_empty() {
            return Err(ClusterError::NoWorkers);
        }
        let job_id = if job.job_id.is_empty() {
            loop {
                let id = format!("job-{}", self.next_job);
                self.next_job += 1;
                if !self.jobs.contains_key(&id) {
                    break id;
                }
            }
        } else {
            job.job_id.clone()
        };
        if self.jobs.contains_key(&job_id) {
            return Err(ClusterError::InvalidJob(format!("job {job_id} already exists")));
        }
        let mut task_ids = Vec::with_capacity(job.queries.len() * partitions.len());
        for qi in 0..job.queries.len() {
            for &p in &partitions {
                let id = format!("{job_id}:{qi}:{p}");
                self.tasks.insert(
                    id.clone(),
                    TaskState {
                        job_id: job_id.clone(),
                        query_index: qi,
                        partition_id: p,
                        failures: 0,
                        failed_on: Vec::new(),
                        phase: TaskPhase::Pending,
                        hits: Vec::new(),
                    },
                );
                task_ids.push(id);
            }
        }
        log::info!("job {job_id}: {} queries x {} partitions", job.queries.len(), partitions.len());
        self.jobs.insert(
            job_id.clone(),
            JobState {
                params: job.params,
                queries: job.queries,
                task_ids: task_ids.clone(),
                completed: 0,
                failed: 0,
                stats: JobStats::default(),
                result: None,
            },
        );
        self.place(&task_ids);
        let status = self.job_status(&job_id)?;
        Ok((status, self.dispatch()))
    }

    pub fn task_result(&mut self, res: TaskResult, now_ms: u64) -> Vec<Outbound> {
        if let Some(w) = self.workers.get_mut(&res.worker_id) {
            w.last_seen_ms = now_ms;
            w.in_flight.remove(&res.task_id);
            w.cached = res.cached_partitions.iter().map(|&p| p as u64).collect();
        }
        let Some(task) = self.tasks.get_mut(&res.task_id) else {
            log::warn!("result for unknown task {}", res.task_id);
            return self.dispatch();
        };
        if matches!(task.phase, TaskPhase::Done | TaskPhase::Failed(_)) {
            log::debug!("duplicate result for {} ignored", res.task_id);
            return self.dispatch();
        }
        let current = task.phase == TaskPhase::Running(res.worker_id.clone());
        match res.status {
            TaskStatus::Ok => {
                if let TaskPhase::Queued(w) = &task.phase {
                    let w = w.clone();
                    if let Some(ws) = self.workers.get_mut(&w) {
                        ws.queue.retain(|t| *t != res.task_id);
                    }
                }
                self.parked.retain(|t| *t != res.task_id);
                let task = &mut self.tasks[&res.task_id];
                task.phase = TaskPhase::Done;
                task.hits = res.hits;
                let job = &mut self.jobs[&task.job_id];
                job.completed += 1;
                job.stats.kernel_ms += res.kernel_ms;
                if res.cache_hit {
                    job.stats.cache_hits += 1;
                } else {
                    job.stats.cache_misses += 1;
                }
                let job_id = task.job_id.clone();
                self.maybe_finish(&job_id);
            }
            TaskStatus::Failed(reason) if current => {
                task.failures += 1;
                task.failed_on.push(res.worker_id.clone());
                log::warn!("task {} failed on {} (attempt {}): {reason}", res.task_id, res.worker_id, task.failures);
                if task.failures >= self.config.max_attempts {
                    task.phase = TaskPhase::Failed(reason);
                    let job_id = task.job_id.clone();
                    self.jobs[&job_id].failed += 1;
                    self.maybe_finish(&job_id);
                } else {
                    let avoid = task.failed_on.clone();
                    let target = self
                        .workers
                        .iter()
                        .filter(|(id, _)| !avoid.contains(id))
                        .min_by_key(|(_, w)| w.load())
                        .or_else(|| self.workers.iter().min_by_key(|(_, w)| w.load()))
                        .map(|(id, _)| id.clone());
                    match target {
                        Some(w) => {
                            self.tasks[&res.task_id].phase = TaskPhase::Queued(w.clone());
                            self.workers[&w].queue.push_front(res.task_id.clone());
                        }
                        None => {
                            self.tasks[&res.task_id].phase = TaskPhase::Pending;
                            self.parked.push_back(res.task_id.clone());
                        }
                    }
                }
            }
            TaskStatus::Failed(_) => log::debug!("stale failure for {} ignored", res.task_id),
        }
        self.dispatch()
    }

    /// Requeues everything the worker held. Completed results are kept.
    pub fn worker_lost(&mut self, worker_id: &str) -> Vec<Outbound> {
        let Some(w) = self.workers.shift_remove(worker_id) else {
            return Vec::new();
        };
        self.rebalance_preferred();
        let mut orphans: Vec<String> = w.in_flight.into_iter().collect();
        orphans.extend(w.queue);
        orphans.retain(|t| !matches!(self.tasks[t].phase, TaskPhase::Done | TaskPhase::Failed(_)));
        orphans.sort_by_key(|t| self.tasks.get_index_of(t));
        log::warn!("worker {worker_id} lost; requeueing {} tasks ({} workers left)", orphans.len(), self.workers.len());
        for t in &orphans {
            self.tasks[t].phase = TaskPhase::Pending;
        }
        self.place(&orphans);
        self.dispatch()
    }

    /// Declares workers lost whose last message is older than the timeout.
    pub fn tick(&mut self, now_ms: u64) -> (Vec<String>, Vec<Outbound>) {
        let limit = self.config.heartbeat_ms * self.config.timeout_intervals;
        let expired: Vec<String> = self
            .workers
            .iter()
            .filter(|(_, w)| now_ms.saturating_sub(w.last_seen_ms) > limit)
            .map(|(id, _)| id.clone())
            .collect();
        let mut out = Vec::new();
        for id in &expired {
            out.extend(self.worker_lost(id));
        }
        (expired, out)
    }

    fn maybe_finish(&mut self, job_id: &str) {
        let job = &self.jobs[job_id];
        if job.result.is_some() || job.completed + job.failed < job.task_ids.len() {
            return;
        }
        let result = if job.failed > 0 {
            let failed: Vec<String> = job
                .task_ids
                .iter()
                .filter(|t| matches!(self.tasks[*t].phase, TaskPhase::Failed(_)))
                .map(|t| match &self.tasks[t].phase {
                    TaskPhase::Failed(reason) => format!("{t} ({reason})"),
                    _ => unreachable!(),
                })
                .collect();
            JobResult {
                job_id: job_id.to_string(),
                state: STATE_FAILED.into(),
                error: ClusterError::JobFailed { job_id: job_id.to_string(), failed }.to_string(),
                queries: Vec::new(),
                stats: job.stats,
            }
        } else {
            self.aggregate(job_id)
        };
        log::info!("job {job_id} finished: {}", result.state);
        self.jobs[job_id].result = Some(result);
    }

    fn aggregate(&self, job_id: &str) -> JobResult {
        let job = &self.jobs[job_id];
        let k = job.params.k as usize;
        let mut per_query: Vec<Vec<Vec<AlignmentResult>>> = vec![Vec::new(); job.queries.len()];
        for t in &job.task_ids {
            let task = &self.tasks[t];
            per_query[task.query_index].push(task.hits.clone());
        }
        let queries = job
            .queries
            .iter()
            .zip(per_query)
            .map(|(q, partials)| QueryHits {
                query_id: q.id.clone(),
                hits: merge_topk(partials, k).and_then(|m| finalize_topk(m, k)).expect("k validated at submission"),
            })
            .collect();
        JobResult {
            job_id: job_id.to_string(),
            state: STATE_DONE.into(),
            error: String::new(),
            queries,
            stats: job.stats,
        }
    }

    pub fn job_status(&self, job_id: &str) -> Result<JobStatus, ClusterError> {
        let job = self.jobs.get(job_id).ok_or_else(|| ClusterError::UnknownJob(job_id.to_string()))?;
        Ok(JobStatus {
            job_id: job_id.to_string(),
            state: job.result.as_ref().map_or(STATE_RUNNING.to_string(), |r| r.state.clone()),
            total: job.task_ids.len() as i64,
            completed: job.completed as i64,
            failed: job.failed as i64,
        })
    }

    pub fn job_result(&self, job_id: &str) -> Option<&JobResult> {
        self.jobs.get(job_id)?.result.as_ref()
    }

    /// Tasks per worker across queue and execution, in registration order.
    pub fn loads(&self) -> Vec<(String, usize)> {
        self.workers.iter().map(|(id, w)| (id.clone(), w.load())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::ScoringScheme;

    fn reg(id: &str, slots: i64, cached: &[i64]) -> Register {
        Register {
            worker_id: id.into(),
            address: String::new(),
            slots,
            cache_capacity_bytes: 0,
            cached_partitions: cached.to_vec(),
        }
    }

    fn params(k: i64) -> JobParams {
        JobParams {
            algorithm: "local".into(),
            scheme: ScoringScheme::default_nucleotide(),
            k,
            lanes: 16,
            cell_width: 8,
        }
    }

    fn job(queries: usize, k: i64) -> SubmitJob {
        SubmitJob {
            job_id: "j".into(),
            manifest_ref: String::new(),
            params: params(k),
            queries: (0..queries).map(|i| SequenceRecord::new(format!("q{i}"), "ACGT")).collect(),
        }
    }

    fn sched(parts: u64) -> Scheduler {
        Scheduler::new(SchedulerConfig::default(), Some((0..parts).collect()))
    }

    fn assigned(out: &[Outbound]) -> Vec<(String, String)> {
        out.iter()
            .filter_map(|o| match o {
                Outbound::Worker(w, Message::TaskAssign(t)) => Some((w.clone(), t.task_id.clone())),
                _ => None,
            })
            .collect()
    }

    fn ok(task: &(String, String), score: i32) -> TaskResult {
        let mut hit = AlignmentResult::empty(format!("ref-{}", task.1), crate::align::AlignmentMode::Local);
        hit.max_score = score;
        TaskResult {
            task_id: task.1.clone(),
            job_id: "j".into(),
            worker_id: task.0.clone(),
            attempt: 1,
            status: TaskStatus::Ok,
            hits: vec![hit],
            timing_ms: 0,
            kernel_ms: 0,
            cache_hit: false,
            cached_partitions: vec![],
        }
    }

    fn failed(task: &(String, String)) -> TaskResult {
        TaskResult { status: TaskStatus::Failed("KernelError: boom".into()), hits: vec![], ..ok(task, 0) }
    }

    #[test]
    fn round_robin_preference() {
        let mut s = sched(4);
        s.register_worker(reg("A", 1, &[]), 0).unwrap();
        s.register_worker(reg("B", 1, &[]), 0).unwrap();
        let names: Vec<_> = s.preferred_map().into_iter().map(|(_, w)| w).collect();
        assert_eq!(names, vec!["A", "B", "A", "B"]);
        s.register_worker(reg("C", 1, &[]), 0).unwrap();
        let names: Vec<_> = s.preferred_map().into_iter().map(|(_, w)| w).collect();
        assert_eq!(names, vec!["A", "B", "C", "A"]);
        assert!(matches!(s.register_worker(reg("A", 1, &[]), 0), Err(ClusterError::DuplicateWorkerId(_))));
    }

    #[test]
    fn no_manifest() {
        let mut s = Scheduler::new(SchedulerConfig::default(), None);
        assert!(matches!(s.register_worker(reg("A", 1, &[]), 0), Err(ClusterError::NoManifest)));
    }

    #[test]
    fn plan_follows_preference_and_cache() {
        let mut s = sched(4);
        s.register_worker(reg("A", 1, &[]), 0).unwrap();
        s.register_worker(reg("B", 1, &[]), 0).unwrap();
        let tasks: Vec<(String, u64)> = (0..4).map(|p| (format!("t{p}"), p)).collect();
        let plan = s.plan(&tasks).unwrap();
        let owners: Vec<_> = plan.iter().map(|(_, w)| w.as_str()).collect();
        assert_eq!(owners, vec!["A", "B", "A", "B"]);

        s.heartbeat("A", &[3], 0);
        let plan = s.plan(&tasks).unwrap();
        assert_eq!(plan[3].1, "A");
        let on_a = plan.iter().filter(|(_, w)| w == "A").count();
        assert_eq!(on_a, 2);
    }

    #[test]
    fn single_worker_gets_everything() {
        let mut s = sched(2);
        s.register_worker(reg("A", 8, &[]), 0).unwrap();
        let (status, out) = s.submit_job(job(2, 3)).unwrap();
        assert_eq!(status.total, 4);
        assert_eq!(assigned(&out).len(), 4);
        assert!(assigned(&out).iter().all(|(w, _)| w == "A"));
    }

    #[test]
    fn no_workers_rejects_submission() {
        let mut s = sched(2);
        assert!(matches!(s.submit_job(job(1, 1)), Err(ClusterError::NoWorkers)));
    }

    #[test]
    fn balanced_with_empty_caches() {
        let mut s = sched(7);
        for w in ["A", "B", "C"] {
            s.register_worker(reg(w, 1, &[]), 0).unwrap();
        }
        s.submit_job(job(3, 1)).unwrap();
        let loads: Vec<usize> = s.loads().into_iter().map(|(_, l)| l).collect();
        assert!(loads.iter().max().unwrap() - loads.iter().min().unwrap() <= 1, "{loads:?}");
    }

    #[test]
    fn aggregation_and_dedupe() {
        let mut s = sched(2);
        s.register_worker(reg("A", 2, &[]), 0).unwrap();
        let (_, out) = s.submit_job(job(1, 2)).unwrap();
        let a = assigned(&out);
        s.task_result(ok(&a[0], 9), 1);
        s.task_result(ok(&a[0], 1), 1);
        assert_eq!(s.job_status("j").unwrap().completed, 1);
        s.task_result(ok(&a[1], 8), 1);
        let r = s.job_result("j").unwrap();
        assert_eq!(r.state, STATE_DONE);
        let scores: Vec<_> = r.queries[0].hits.iter().map(|h| h.max_score).collect();
        assert_eq!(scores, vec![9, 8]);
    }

    #[test]
    fn retries_on_other_worker_then_fails() {
        let mut s = sched(1);
        s.register_worker(reg("A", 1, &[]), 0).unwrap();
        s.register_worker(reg("B", 1, &[]), 0).unwrap();
        let (_, out) = s.submit_job(job(1, 1)).unwrap();
        let first = assigned(&out);
        assert_eq!(first[0].0, "A");
        let out = s.task_result(failed(&first[0]), 1);
        let second = assigned(&out);
        assert_eq!(second[0].0, "B");
        assert_eq!(
            out.iter().find_map(|o| match o {
                Outbound::Worker(_, Message::TaskAssign(t)) => Some(t.attempt),
                _ => None,
            }),
            Some(2)
        );
        let out = s.task_result(failed(&second[0]), 2);
        let third = assigned(&out);
        s.task_result(failed(&third[0]), 3);
        let r = s.job_result("j").unwrap();
        assert_eq!(r.state, STATE_FAILED);
        assert!(r.error.contains("j:0:0"), "{}", r.error);
    }

    #[test]
    fn worker_loss_requeues_and_keeps_results() {
        let mut s = sched(4);
        s.register_worker(reg("A", 1, &[]), 0).unwrap();
        s.register_worker(reg("B", 1, &[]), 0).unwrap();
        let (_, out) = s.submit_job(job(1, 4)).unwrap();
        let a = assigned(&out);
        let on_a = a.iter().find(|(w, _)| w == "A").unwrap().clone();
        s.task_result(ok(&on_a, 5), 1);
        let out = s.worker_lost("A");
        // A's remaining queued task moves to B, which still runs one.
        assert!(assigned(&out).is_empty());
        assert_eq!(s.loads(), vec![("B".to_string(), 3)]);
        assert_eq!(s.job_status("j").unwrap().completed, 1);
    }

    #[test]
    fn sole_worker_loss_parks_job() {
        let mut s = sched(2);
        s.register_worker(reg("A", 1, &[]), 0).unwrap();
        s.submit_job(job(1, 1)).unwrap();
        s.worker_lost("A");
        assert_eq!(s.parked_tasks(), 2);
        let (_, out) = s.register_worker(reg("B", 2, &[]), 10).unwrap();
        assert_eq!(assigned(&out).len(), 2);
        assert_eq!(s.parked_tasks(), 0);
    }

    #[test]
    fn heartbeat_timeout() {
        let mut s = sched(1);
        s.register_worker(reg("A", 1, &[]), 0).unwrap();
        s.register_worker(reg("B", 1, &[]), 0).unwrap();
        s.heartbeat("B", &[], 5000);
        let (lost, _) = s.tick(6001);
        assert_eq!(lost, vec!["A".to_string()]);
        assert_eq!(s.worker_ids(), vec!["B".to_string()]);
    }

    #[test]
    fn idle_worker_steals() {
        let mut s = sched(4);
        s.register_worker(reg("A", 1, &[]), 0).unwrap();
        s.submit_job(job(1, 1)).unwrap();
        let (_, out) = s.register_worker(reg("B", 1, &[]), 0).unwrap();
        assert_eq!(assigned(&out).len(), 1);
        assert_eq!(assigned(&out)[0].0, "B");
    }
}
