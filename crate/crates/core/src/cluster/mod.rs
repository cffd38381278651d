//! Coordinator/worker execution over TCP.
//!
//! [`scheduler`] holds all placement and recovery decisions as a pure state
//! machine; [`coordinator`], [`worker`] and [`client`] move its messages over
//! sockets using the framing in [`protocol`].

pub mod cache;
pub mod client;
pub mod coordinator;
pub mod protocol;
pub mod scheduler;
pub mod worker;

pub use cache::{CacheStats, CacheTier, ManifestSource, PartitionSource, SharedCache, WorkerStore};
pub use client::{submit_and_wait, ClientOptions};
pub use coordinator::{Coordinator, CoordinatorConfig, CoordinatorHandle};
pub use scheduler::{Scheduler, SchedulerConfig};
pub use worker::{Worker, WorkerConfig, WorkerHandle};

use protocol::ProtocolError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClusterError {
    #[error("worker id {0:?} is already registered")]
    DuplicateWorkerId(String),
    #[error("coordinator has no partition manifest")]
    NoManifest,
    #[error("no live workers")]
    NoWorkers,
    #[error("partition {0} unavailable: {1}")]
    PartitionUnavailable(u64, String),
    #[error("job {job_id} failed: {}", failed.join(", "))]
    JobFailed { job_id: String, failed: Vec<String> },
    #[error("unknown job {0:?}")]
    UnknownJob(String),
    #[error("invalid job: {0}")]
    InvalidJob(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{code}: {message}")]
    Remote { code: String, message: String },
}

impl ClusterError {
    /// Identifier used in ERROR frames and CLI diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            ClusterError::DuplicateWorkerId(_) => "DuplicateWorkerId",
            ClusterError::NoManifest => "NoManifest",
            ClusterError::NoWorkers => "NoWorkers",
            ClusterError::PartitionUnavailable(..) => "PartitionUnavailable",
            ClusterError::JobFailed { .. } => "JobFailed",
            ClusterError::UnknownJob(_) => "UnknownJob",
            ClusterError::InvalidJob(_) => "InvalidJob",
            ClusterError::Protocol(_) => "ProtocolError",
            ClusterError::Io(_) => "IoError",
            ClusterError::Remote { .. } => "RemoteError",
        }
    }
}

impl From<ProtocolError> for ClusterError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::Io(e) => ClusterError::Io(e.to_string()),
            other => ClusterError::Protocol(other.to_string()),
        }
    }
}

impl From<std::io::Error> for ClusterError {
    fn from(e: std::io::Error) -> Self {
        ClusterError::Io(e.to_string())
    }
}
