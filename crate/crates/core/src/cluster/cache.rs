//! Worker-side partition storage: an in-memory LRU tier over persistence.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use indexmap::IndexMap;

use super::protocol::{read_message, write_message, Message};
use super::ClusterError;
use crate::seqio::{load_partition, parse_fasta, write_fasta_file, Partition, PartitionManifest, SequenceRecord};

/// A tier that can produce a partition from durable storage.
pub trait PartitionSource: Send + Sync {
    fn load(&self, partition_id: u64) -> Result<Partition, ClusterError>;
}

/// Shards described by a manifest on a local (or shared) filesystem.
#[derive(Debug, Clone)]
pub struct ManifestSource {
    manifest: PartitionManifest,
}

impl ManifestSource {
    pub fn new(manifest: PartitionManifest) -> Self {
        ManifestSource { manifest }
    }

    pub fn manifest(&self) -> &PartitionManifest {
        &self.manifest
    }
}

impl PartitionSource for ManifestSource {
    fn load(&self, partition_id: u64) -> Result<Partition, ClusterError> {
        load_partition(&self.manifest, partition_id)
            .map_err(|e| ClusterError::PartitionUnavailable(partition_id, e.to_string()))
    }
}

/// Worker persistence: shards kept in a local directory, filled on demand
/// from a remote source (the coordinator). A fetched shard is written to disk
/// before it is returned, so the memory tier never holds the only copy.
pub struct WorkerStore {
    dir: PathBuf,
    shared: Option<ManifestSource>,
    remote: Option<SocketAddr>,
}

impl WorkerStore {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, ClusterError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| ClusterError::Io(format!("{}: {e}", dir.display())))?;
        Ok(WorkerStore { dir, shared: None, remote: None })
    }

    /// Also read shards directly from a manifest directory.
    pub fn with_manifest(mut self, manifest: PartitionManifest) -> Self {
        self.shared = Some(ManifestSource::new(manifest));
        self
    }

    pub fn with_remote(mut self, addr: SocketAddr) -> Self {
        self.remote = Some(addr);
        self
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn local_path(&self, partition_id: u64) -> PathBuf {
        self.dir.join(format!("part-{partition_id}.fasta"))
    }

    /// Partition ids with a shard in the local directory.
    pub fn local_partitions(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = std::fs::read_dir(&self.dir)
            .into_iter()
            .flatten()
            .flatten()
            .filter_map(|e| {
                let name = e.file_name().into_string().ok()?;
                name.strip_prefix("part-")?.strip_suffix(".fasta")?.parse().ok()
            })
            .collect();
        ids.sort_unstable();
        ids
    }

    fn fetch_remote(&self, addr: SocketAddr, partition_id: u64) -> Result<Vec<SequenceRecord>, ClusterError> {
        let mut stream = std::net::TcpStream::connect(addr)
            .map_err(|e| ClusterError::PartitionUnavailable(partition_id, format!("connect {addr}: {e}")))?;
        write_message(&mut stream, &Message::PartitionFetch { partition_id: partition_id as i64 })?;
        match read_message(&mut stream)? {
            Some(Message::PartitionData(d)) if d.partition_id == partition_id as i64 => Ok(d.records),
            Some(Message::Error(e)) => {
                Err(ClusterError::PartitionUnavailable(partition_id, format!("{}: {}", e.code, e.message)))
            }
            other => Err(ClusterError::Protocol(format!("unexpected reply to PARTITION_FETCH: {other:?}"))),
        }
    }
}

impl PartitionSource for WorkerStore {
    fn load(&self, partition_id: u64) -> Result<Partition, ClusterError> {
        let path = self.local_path(partition_id);
        if let Ok(bytes) = std::fs::read(&path) {
            let records =
                parse_fasta(&bytes).map_err(|e| ClusterError::PartitionUnavailable(partition_id, e.to_string()))?;
            return Ok(Partition { partition_id, records });
        }
        if let Some(shared) = &self.shared {
            if let Ok(p) = shared.load(partition_id) {
                return Ok(p);
            }
        }
        let Some(addr) = self.remote else {
            return Err(ClusterError::PartitionUnavailable(
                partition_id,
                "not on local disk and no remote source".into(),
            ));
        };
        let records = self.fetch_remote(addr, partition_id)?;
        let tmp = path.with_extension("fasta.tmp");
        write_fasta_file(&tmp, &records)
            .and_then(|_| std::fs::rename(&tmp, &path).map_err(|e| crate::seqio::SeqIoError::io(&path, e)))
            .map_err(|e| ClusterError::Io(e.to_string()))?;
        Ok(Partition { partition_id, records })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub resident_bytes: usize,
    pub entries: usize,
}

/// Least-recently-used memory tier with a byte capacity.
///
/// Entries are ordered oldest first. A partition larger than the whole
/// capacity is served but never made resident.
#[derive(Debug)]
pub struct CacheTier {
    capacity_bytes: usize,
    entries: IndexMap<u64, Arc<Partition>>,
    resident_bytes: usize,
    hits: u64,
    misses: u64,
}

impl CacheTier {
    pub fn new(capacity_bytes: usize) -> Self {
        CacheTier { capacity_bytes, entries: IndexMap::new(), resident_bytes: 0, hits: 0, misses: 0 }
    }

    pub fn capacity_bytes(&self) -> usize {
        self.capacity_bytes
    }

    /// Resident partition ids, least recently used first.
    pub fn resident(&self) -> Vec<u64> {
        self.entries.keys().copied().collect()
    }

    pub fn contains(&self, partition_id: u64) -> bool {
        self.entries.contains_key(&partition_id)
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits,
            misses: self.misses,
            resident_bytes: self.resident_bytes,
            entries: self.entries.len(),
        }
    }

    /// Looks up a resident partition, counting a hit and refreshing recency.
    /// Counts nothing on absence.
    fn lookup(&mut self, partition_id: u64) -> Option<Arc<Partition>> {
        let idx = self.entries.get_index_of(&partition_id)?;
        let last = self.entries.len() - 1;
        self.entries.move_index(idx, last);
        self.hits += 1;
        self.entries.get(&partition_id).cloned()
    }

    fn insert(&mut self, partition: Arc<Partition>) {
        let size = partition.size_bytes();
        if let Some(old) = self.entries.shift_remove(&partition.partition_id) {
            self.resident_bytes -= old.size_bytes();
        }
        if size > self.capacity_bytes {
            return;
        }
        while self.resident_bytes + size > self.capacity_bytes {
            let (id, evicted) = self.entries.shift_remove_index(0).expect("non-empty while over capacity");
            self.resident_bytes -= evicted.size_bytes();
            log::debug!("cache evicted partition {id}");
        }
        self.resident_bytes += size;
        self.entries.insert(partition.partition_id, partition);
    }

    /// Returns the partition and whether it was a memory hit. On a miss the
    /// partition is loaded from `source` and made resident.
    pub fn fetch(
        &mut self,
        partition_id: u64,
        source: &dyn PartitionSource,
    ) -> Result<(Arc<Partition>, bool), ClusterError> {
        if let Some(p) = self.lookup(partition_id) {
            return Ok((p, true));
        }
        self.misses += 1;
        let p = Arc::new(source.load(partition_id)?);
        self.insert(Arc::clone(&p));
        Ok((p, false))
    }
}

/// Cache tier shared by a worker's execution slots.
pub struct SharedCache {
    tier: Mutex<CacheTier>,
    source: Box<dyn PartitionSource>,
}

impl SharedCache {
    pub fn new(capacity_bytes: usize, source: Box<dyn PartitionSource>) -> Self {
        SharedCache { tier: Mutex::new(CacheTier::new(capacity_bytes)), source }
    }

    /// Like [`CacheTier::fetch`], but loads outside the lock so slots reading
    /// different partitions do not serialize on I/O.
    pub fn fetch(&self, partition_id: u64) -> Result<(Arc<Partition>, bool), ClusterError> {
        {
            let mut tier = self.tier.lock().unwrap();
            if let Some(p) = tier.lookup(partition_id) {
                return Ok((p, true));
            }
            tier.misses += 1;
        }
        let p = Arc::new(self.source.load(partition_id)?);
        self.tier.lock().unwrap().insert(Arc::clone(&p));
        Ok((p, false))
    }

    pub fn stats(&self) -> CacheStats {
        self.tier.lock().unwrap().stats()
    }

    pub fn resident(&self) -> Vec<u64> {
        self.tier.lock().unwrap().resident()
    }
}
