//! Job submission: send SUBMIT_JOB, poll JOB_STATUS, collect JOB_RESULT.

use std::net::{SocketAddr, TcpStream};
use std::time::{Duration, Instant};

use super::protocol::{read_message, write_message, JobResult, JobStatus, Message, SubmitJob};
use super::scheduler::STATE_RUNNING;
use super::ClusterError;

#[derive(Clone, Copy, Debug)]
pub struct ClientOptions {
    pub poll_interval: Duration,
    /// Give up after this long; `None` waits indefinitely.
    pub timeout: Option<Duration>,
}

impl Default for ClientOptions {
    fn default() -> Self {
        ClientOptions { poll_interval: Duration::from_millis(50), timeout: None }
    }
}

fn expect(stream: &mut TcpStream) -> Result<Message, ClusterError> {
    match read_message(stream)? {
        Some(Message::Error(e)) => Err(ClusterError::Remote { code: e.code, message: e.message }),
        Some(m) => Ok(m),
        None => Err(ClusterError::Io("coordinator closed the connection".into())),
    }
}

fn expect_status(stream: &mut TcpStream) -> Result<JobStatus, ClusterError> {
    match expect(stream)? {
        Message::JobStatus(s) => Ok(s),
        other => Err(ClusterError::Protocol(format!("expected JOB_STATUS, got type {}", other.code()))),
    }
}

/// Submits a job and blocks until it is DONE or FAILED. A failed job is
/// returned as `Ok` with `state == "FAILED"` and the reason in `error`.
pub fn submit_and_wait(addr: SocketAddr, job: SubmitJob, opts: ClientOptions) -> Result<JobResult, ClusterError> {
    let mut stream = TcpStream::connect(addr).map_err(|e| ClusterError::Io(format!("connect {addr}: {e}")))?;
    let _ = stream.set_nodelay(true);
    write_message(&mut stream, &Message::SubmitJob(job))?;
    let accepted = expect_status(&mut stream)?;
    let job_id = accepted.job_id;
    log::info!("job {job_id} accepted: {} tasks", accepted.total);
    let started = Instant::now();
    loop {
        write_message(&mut stream, &Message::JobStatus(JobStatus::query(&job_id)))?;
        let status = expect_status(&mut stream)?;
        if status.state != STATE_RUNNING {
            return match expect(&mut stream)? {
                Message::JobResult(r) => Ok(r),
                other => Err(ClusterError::Protocol(format!("expected JOB_RESULT, got type {}", other.code()))),
            };
        }
        log::debug!("job {job_id}: {}/{} tasks done", status.completed, status.total);
        if opts.timeout.is_some_and(|t| started.elapsed() > t) {
            return Err(ClusterError::Io(format!("timed out waiting for job {job_id}")));
        }
        std::thread::sleep(opts.poll_interval);
    }
}
