//! Length-prefixed binary frames.
//!
//! A frame is a 4-byte big-endian payload length, a 1-byte message type and
//! the payload. Inside a payload, text is a 4-byte big-endian byte length
//! followed by UTF-8, integers are 8-byte big-endian two's complement, and
//! lists are a 4-byte count followed by the elements. `REGISTER` payloads
//! start with a single protocol version byte.

use std::io::{self, Read, Write};
use std::sync::Arc;

use crate::align::{AlignmentMode, AlignmentResult, Cigar};
use crate::scoring::{GapModel, ScoringScheme, SubstitutionMatrix};
use crate::seqio::SequenceRecord;

pub const PROTOCOL_VERSION: u8 = 1;
/// Frames above this size are rejected before allocation.
pub const MAX_FRAME_BYTES: u32 = 1 << 30;

pub mod code {
    pub const REGISTER: u8 = 1;
    pub const REGISTER_ACK: u8 = 2;
    pub const HEARTBEAT: u8 = 3;
    pub const SUBMIT_JOB: u8 = 4;
    pub const TASK_ASSIGN: u8 = 5;
    pub const TASK_RESULT: u8 = 6;
    pub const PARTITION_FETCH: u8 = 7;
    pub const PARTITION_DATA: u8 = 8;
    pub const JOB_STATUS: u8 = 9;
    pub const JOB_RESULT: u8 = 10;
    pub const ERROR: u8 = 15;
}

#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error("unsupported protocol version {0}")]
    Version(u8),
}

fn malformed(s: impl Into<String>) -> ProtocolError {
    ProtocolError::Malformed(s.into())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Register {
    pub worker_id: String,
    pub address: String,
    pub slots: i64,
    pub cache_capacity_bytes: i64,
    pub cached_partitions: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegisterAck {
    pub worker_id: String,
    pub heartbeat_ms: i64,
    /// Partitions for which this worker is the preferred owner.
    pub preferred_partitions: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Heartbeat {
    pub worker_id: String,
    pub active_tasks: i64,
    pub cached_partitions: Vec<i64>,
}

/// Scoring, kernel and algorithm parameters shared by a job's tasks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JobParams {
    /// Registry name of the alignment algorithm.
    pub algorithm: String,
    pub scheme: ScoringScheme,
    pub k: i64,
    pub lanes: i64,
    pub cell_width: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubmitJob {
    /// Empty to let the coordinator pick one.
    pub job_id: String,
    pub manifest_ref: String,
    pub params: JobParams,
    pub queries: Vec<SequenceRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskAssign {
    pub task_id: String,
    pub job_id: String,
    pub partition_id: i64,
    pub attempt: i64,
    pub params: JobParams,
    pub query: SequenceRecord,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TaskStatus {
    Ok,
    Failed(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskResult {
    pub task_id: String,
    pub job_id: String,
    pub worker_id: String,
    pub attempt: i64,
    pub status: TaskStatus,
    pub hits: Vec<AlignmentResult>,
    pub timing_ms: i64,
    pub kernel_ms: i64,
    pub cache_hit: bool,
    pub cached_partitions: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionData {
    pub partition_id: i64,
    pub records: Vec<SequenceRecord>,
}

/// Job progress. Sent by clients with an empty state and zero counters as a
/// status query; the coordinator answers with the filled-in form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JobStatus {
    pub job_id: String,
    pub state: String,
    pub total: i64,
    pub completed: i64,
    pub failed: i64,
}

impl JobStatus {
    pub fn query(job_id: impl Into<String>) -> Self {
        JobStatus { job_id: job_id.into(), state: String::new(), total: 0, completed: 0, failed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryHits {
    pub query_id: String,
    pub hits: Vec<AlignmentResult>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JobResult {
    pub job_id: String,
    pub state: String,
    pub error: String,
    pub queries: Vec<QueryHits>,
    pub stats: JobStats,
}

/// Totals over the accepted task results of a job.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct JobStats {
    pub kernel_ms: i64,
    pub cache_hits: i64,
    pub cache_misses: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErrorMsg {
    pub code: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message {
    Register(Register),
    RegisterAck(RegisterAck),
    Heartbeat(Heartbeat),
    SubmitJob(SubmitJob),
    TaskAssign(TaskAssign),
    TaskResult(TaskResult),
    PartitionFetch { partition_id: i64 },
    PartitionData(PartitionData),
    JobStatus(JobStatus),
    JobResult(JobResult),
    Error(ErrorMsg),
}

impl Message {
    pub fn code(&self) -> u8 {
        match self {
            Message::Register(_) => code::REGISTER,
            Message::RegisterAck(_) => code::REGISTER_ACK,
            Message::Heartbeat(_) => code::HEARTBEAT,
            Message::SubmitJob(_) => code::SUBMIT_JOB,
            Message::TaskAssign(_) => code::TASK_ASSIGN,
            Message::TaskResult(_) => code::TASK_RESULT,
            Message::PartitionFetch { .. } => code::PARTITION_FETCH,
            Message::PartitionData(_) => code::PARTITION_DATA,
            Message::JobStatus(_) => code::JOB_STATUS,
            Message::JobResult(_) => code::JOB_RESULT,
            Message::Error(_) => code::ERROR,
        }
    }

    pub fn error(code: impl Into<String>, message: impl Into<String>) -> Self {
        Message::Error(ErrorMsg { code: code.into(), message: message.into() })
    }

    pub fn encode_payload(&self) -> Vec<u8> {
        let mut e = Encoder::default();
        match self {
            Message::Register(m) => {
                e.buf.push(PROTOCOL_VERSION);
                e.text(&m.worker_id);
                e.text(&m.address);
                e.int(m.slots);
                e.int(m.cache_capacity_bytes);
                e.ints(&m.cached_partitions);
            }
            Message::RegisterAck(m) => {
                e.text(&m.worker_id);
                e.int(m.heartbeat_ms);
                e.ints(&m.preferred_partitions);
            }
            Message::Heartbeat(m) => {
                e.text(&m.worker_id);
                e.int(m.active_tasks);
                e.ints(&m.cached_partitions);
            }
            Message::SubmitJob(m) => {
                e.text(&m.job_id);
                e.text(&m.manifest_ref);
                e.params(&m.params);
                e.count(m.queries.len());
                for q in &m.queries {
                    e.record(q);
                }
            }
            Message::TaskAssign(m) => {
                e.text(&m.task_id);
                e.text(&m.job_id);
                e.int(m.partition_id);
                e.int(m.attempt);
                e.params(&m.params);
                e.record(&m.query);
            }
            Message::TaskResult(m) => {
                e.text(&m.task_id);
                e.text(&m.job_id);
                e.text(&m.worker_id);
                e.int(m.attempt);
                match &m.status {
                    TaskStatus::Ok => {
                        e.text("OK");
                        e.text("");
                    }
                    TaskStatus::Failed(reason) => {
                        e.text("FAILED");
                        e.text(reason);
                    }
                }
                e.hits(&m.hits);
                e.int(m.timing_ms);
                e.int(m.kernel_ms);
                e.int(m.cache_hit as i64);
                e.ints(&m.cached_partitions);
            }
            Message::PartitionFetch { partition_id } => e.int(*partition_id),
            Message::PartitionData(m) => {
                e.int(m.partition_id);
                e.count(m.records.len());
                for r in &m.records {
                    e.record(r);
                }
            }
            Message::JobStatus(m) => {
                e.text(&m.job_id);
                e.text(&m.state);
                e.int(m.total);
                e.int(m.completed);
                e.int(m.failed);
            }
            Message::JobResult(m) => {
                e.text(&m.job_id);
                e.text(&m.state);
                e.text(&m.error);
                e.count(m.queries.len());
                for q in &m.queries {
                    e.text(&q.query_id);
                    e.hits(&q.hits);
                }
                e.int(m.stats.kernel_ms);
                e.int(m.stats.cache_hits);
                e.int(m.stats.cache_misses);
            }
            Message::Error(m) => {
                e.text(&m.code);
                e.text(&m.message);
            }
        }
        e.buf
    }

    pub fn decode(msg_type: u8, payload: &[u8]) -> Result<Self, ProtocolError> {
        let mut d = Decoder { buf: payload, pos: 0 };
        let msg = match msg_type {
            code::REGISTER => {
                let v = d.byte()?;
                if v != PROTOCOL_VERSION {
                    return Err(ProtocolError::Version(v));
                }
                Message::Register(Register {
                    worker_id: d.text()?,
                    address: d.text()?,
                    slots: d.int()?,
                    cache_capacity_bytes: d.int()?,
                    cached_partitions: d.ints()?,
                })
            }
            code::REGISTER_ACK => Message::RegisterAck(RegisterAck {
                worker_id: d.text()?,
                heartbeat_ms: d.int()?,
                preferred_partitions: d.ints()?,
            }),
            code::HEARTBEAT => Message::Heartbeat(Heartbeat {
                worker_id: d.text()?,
                active_tasks: d.int()?,
                cached_partitions: d.ints()?,
            }),
            code::SUBMIT_JOB => {
                let job_id = d.text()?;
                let manifest_ref = d.text()?;
                let params = d.params()?;
                let n = d.count()?;
                let queries = (0..n).map(|_| d.record()).collect::<Result<_, _>>()?;
                Message::SubmitJob(SubmitJob { job_id, manifest_ref, params, queries })
            }
            code::TASK_ASSIGN => Message::TaskAssign(TaskAssign {
                task_id: d.text()?,
                job_id: d.text()?,
                partition_id: d.int()?,
                attempt: d.int()?,
                params: d.params()?,
                query: d.record()?,
            }),
            code::TASK_RESULT => {
                let task_id = d.text()?;
                let job_id = d.text()?;
                let worker_id = d.text()?;
                let attempt = d.int()?;
                let status = match (d.text()?.as_str(), d.text()?) {
                    ("OK", _) => TaskStatus::Ok,
                    ("FAILED", reason) => TaskStatus::Failed(reason),
                    (other, _) => return Err(malformed(format!("task status {other:?}"))),
                };
                Message::TaskResult(TaskResult {
                    task_id,
                    job_id,
                    worker_id,
                    attempt,
                    status,
                    hits: d.hits()?,
                    timing_ms: d.int()?,
                    kernel_ms: d.int()?,
                    cache_hit: d.int()? != 0,
                    cached_partitions: d.ints()?,
                })
            }
            code::PARTITION_FETCH => Message::PartitionFetch { partition_id: d.int()? },
            code::PARTITION_DATA => {
                let partition_id = d.int()?;
                let n = d.count()?;
                let records = (0..n).map(|_| d.record()).collect::<Result<_, _>>()?;
                Message::PartitionData(PartitionData { partition_id, records })
            }
            code::JOB_STATUS => Message::JobStatus(JobStatus {
                job_id: d.text()?,
                state: d.text()?,
                total: d.int()?,
                completed: d.int()?,
                failed: d.int()?,
            }),
            code::JOB_RESULT => {
                let job_id = d.text()?;
                let state = d.text()?;
                let error = d.text()?;
                let n = d.count()?;
                let mut queries = Vec::with_capacity(n.min(1 << 16));
                for _ in 0..n {
                    queries.push(QueryHits { query_id: d.text()?, hits: d.hits()? });
                }
                let stats = JobStats { kernel_ms: d.int()?, cache_hits: d.int()?, cache_misses: d.int()? };
                Message::JobResult(JobResult { job_id, state, error, queries, stats })
            }
            code::ERROR => Message::Error(ErrorMsg { code: d.text()?, message: d.text()? }),
            other => return Err(malformed(format!("unknown message type {other}"))),
        };
        if d.pos != payload.len() {
            return Err(malformed(format!("{} trailing bytes after message type {msg_type}", payload.len() - d.pos)));
        }
        Ok(msg)
    }
}

pub fn write_message<W: Write>(out: &mut W, msg: &Message) -> Result<(), ProtocolError> {
    let payload = msg.encode_payload();
    let len = u32::try_from(payload.len())
        .ok()
        .filter(|&l| l <= MAX_FRAME_BYTES)
        .ok_or_else(|| malformed(format!("payload of {} bytes too large", payload.len())))?;
    let mut frame = Vec::with_capacity(5 + payload.len());
    frame.extend_from_slice(&len.to_be_bytes());
    frame.push(msg.code());
    frame.extend_from_slice(&payload);
    out.write_all(&frame)?;
    out.flush()?;
    Ok(())
}

/// Reads one frame. Returns `Ok(None)` on a clean end of stream before the
/// first header byte.
pub fn read_message<R: Read>(input: &mut R) -> Result<Option<Message>, ProtocolError> {
    let mut header = [0u8; 5];
    let mut got = 0;
    while got < header.len() {
        match input.read(&mut header[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(malformed("stream ended inside a frame header")),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_be_bytes(header[..4].try_into().unwrap());
    if len > MAX_FRAME_BYTES {
        return Err(malformed(format!("frame length {len} exceeds limit")));
    }
    let mut payload = vec![0u8; len as usize];
    input.read_exact(&mut payload)?;
    Message::decode(header[4], &payload).map(Some)
}

#[derive(Default)]
struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    fn count(&mut self, n: usize) {
        self.buf.extend_from_slice(&(n as u32).to_be_bytes());
    }
    fn bytes(&mut self, b: &[u8]) {
        self.count(b.len());
        self.buf.extend_from_slice(b);
    }
    fn text(&mut self, s: &str) {
        self.bytes(s.as_bytes());
    }
    fn int(&mut self, v: i64) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }
    fn ints(&mut self, v: &[i64]) {
        self.count(v.len());
        for &x in v {
            self.int(x);
        }
    }
    fn record(&mut self, r: &SequenceRecord) {
        self.text(&r.id);
        self.text(&r.description);
        self.bytes(&r.residues);
        match &r.quality {
            Some(q) => {
                self.int(1);
                self.bytes(q);
            }
            None => {
                self.int(0);
                self.bytes(&[]);
            }
        }
    }
    fn scheme(&mut self, s: &ScoringScheme) {
        self.bytes(s.matrix.alphabet());
        let scores: Vec<i64> = s.matrix.scores().iter().map(|&v| v as i64).collect();
        self.ints(&scores);
        self.int(s.gaps.gap_open as i64);
        self.int(s.gaps.gap_extend as i64);
    }
    fn params(&mut self, p: &JobParams) {
        self.text(&p.algorithm);
        self.scheme(&p.scheme);
        self.int(p.k);
        self.int(p.lanes);
        self.int(p.cell_width);
    }
    fn hit(&mut self, h: &AlignmentResult) {
        self.int(h.max_score as i64);
        self.text(&h.ref_name);
        self.int(h.ref_begin);
        self.int(h.ref_end);
        self.int(h.query_begin);
        self.int(h.query_end);
        self.text(&h.cigar.to_string());
        self.int(h.mode.code() as i64);
    }
    fn hits(&mut self, hits: &[AlignmentResult]) {
        self.count(hits.len());
        for h in hits {
            self.hit(h);
        }
    }
}

struct Decoder<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Decoder<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], ProtocolError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| malformed(format!("field of {n} bytes runs past the payload end")))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn byte(&mut self) -> Result<u8, ProtocolError> {
        Ok(self.take(1)?[0])
    }
    fn count(&mut self) -> Result<usize, ProtocolError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
    fn bytes(&mut self) -> Result<Vec<u8>, ProtocolError> {
        let n = self.count()?;
        Ok(self.take(n)?.to_vec())
    }
    fn text(&mut self) -> Result<String, ProtocolError> {
        String::from_utf8(self.bytes()?).map_err(|_| malformed("text is not UTF-8"))
    }
    fn int(&mut self) -> Result<i64, ProtocolError> {
        Ok(i64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn ints(&mut self) -> Result<Vec<i64>, ProtocolError> {
        let n = self.count()?;
        if n > (self.buf.len() - self.pos) / 8 {
            return Err(malformed(format!("list of {n} integers runs past the payload end")));
        }
        (0..n).map(|_| self.int()).collect()
    }
    fn small_int(&mut self, what: &str) -> Result<i32, ProtocolError> {
        let v = self.int()?;
        i32::try_from(v).map_err(|_| malformed(format!("{what} {v} out of range")))
    }
    fn record(&mut self) -> Result<SequenceRecord, ProtocolError> {
        let id = self.text()?;
        let description = self.text()?;
        let residues = self.bytes()?;
        let has_quality = self.int()? != 0;
        let quality = self.bytes()?;
        let mut r = SequenceRecord::new(id, residues).with_description(description);
        if has_quality {
            r = r.with_quality(quality);
        }
        Ok(r)
    }
    fn scheme(&mut self) -> Result<ScoringScheme, ProtocolError> {
        let alphabet = self.bytes()?;
        let scores = self
            .ints()?
            .into_iter()
            .map(|v| i32::try_from(v).map_err(|_| malformed(format!("matrix score {v} out of range"))))
            .collect::<Result<Vec<_>, _>>()?;
        let matrix = SubstitutionMatrix::new(alphabet, scores).map_err(|e| malformed(e.to_string()))?;
        let open = self.small_int("gap open")?;
        let ext = self.small_int("gap extend")?;
        let gaps = GapModel::new(open, ext).map_err(|e| malformed(e.to_string()))?;
        Ok(ScoringScheme { matrix: Arc::new(matrix), gaps })
    }
    fn params(&mut self) -> Result<JobParams, ProtocolError> {
        Ok(JobParams {
            algorithm: self.text()?,
            scheme: self.scheme()?,
            k: self.int()?,
            lanes: self.int()?,
            cell_width: self.int()?,
        })
    }
    fn hit(&mut self) -> Result<AlignmentResult, ProtocolError> {
        let max_score = self.small_int("score")?;
        let ref_name = self.text()?;
        let ref_begin = self.int()?;
        let ref_end = self.int()?;
        let query_begin = self.int()?;
        let query_end = self.int()?;
        let cigar: Cigar = self.text()?.parse().map_err(|e: crate::align::AlignError| malformed(e.to_string()))?;
        let mode_code = self.int()?;
        let mode = u8::try_from(mode_code)
            .ok()
            .and_then(AlignmentMode::from_code)
            .ok_or_else(|| malformed(format!("mode code {mode_code}")))?;
        Ok(AlignmentResult { max_score, ref_name, ref_begin, ref_end, query_begin, query_end, cigar, mode })
    }
    fn hits(&mut self) -> Result<Vec<AlignmentResult>, ProtocolError> {
        let n = self.count()?;
        let mut out = Vec::with_capacity(n.min(1 << 16));
        for _ in 0..n {
            out.push(self.hit()?);
        }
        Ok(out)
    }
}
