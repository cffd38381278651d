//! Reference partitioning and the partition manifest.
//!
//! Manifest layout (UTF-8, LF line endings):
//!
//! ```text
//! DSA-MANIFEST 1
//! <partitionId>\t<relativePath>\t<recordCount>\t<residueCount>
//! ...
//! ```
//!
//! Shards are plain FASTA files named `part-<id>.fasta` next to the manifest.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{parse_fasta, write_fasta_file, SeqIoError, SequenceRecord};

pub const MANIFEST_HEADER: &str = "DSA-MANIFEST 1";
pub const MANIFEST_FILE_NAME: &str = "manifest.txt";
const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionEntry {
    pub partition_id: u64,
    pub relative_path: String,
    pub record_count: u64,
    pub residue_count: u64,
}

/// Describes the shards of a partitioned reference database.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionManifest {
    pub format_version: u32,
    pub partitions: Vec<PartitionEntry>,
    /// Directory that relative shard paths resolve against. Not serialized.
    pub base_dir: PathBuf,
}

impl PartitionManifest {
    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }

    pub fn entry(&self, partition_id: u64) -> Option<&PartitionEntry> {
        self.partitions.get(usize::try_from(partition_id).ok()?)
    }

    pub fn shard_path(&self, entry: &PartitionEntry) -> PathBuf {
        self.base_dir.join(&entry.relative_path)
    }

    pub fn total_residues(&self) -> u64 {
        self.partitions.iter().map(|p| p.residue_count).sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(MANIFEST_HEADER);
        out.push('\n');
        for p in &self.partitions {
            let _ = writeln!(out, "{}\t{}\t{}\t{}", p.partition_id, p.relative_path, p.record_count, p.residue_count);
        }
        out
    }

    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, SeqIoError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end() == MANIFEST_HEADER => {}
            _ => return Err(SeqIoError::malformed(1, format!("manifest must start with {MANIFEST_HEADER:?}"))),
        }
        let mut partitions = Vec::new();
        for (i, line) in lines {
            let line_no = i + 1;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(SeqIoError::malformed(line_no, "expected 4 tab-separated fields"));
            }
            let num = |s: &str, what: &str| {
                s.parse::<u64>().map_err(|_| SeqIoError::malformed(line_no, format!("bad {what} {s:?}")))
            };
            let entry = PartitionEntry {
                partition_id: num(fields[0], "partitionId")?,
                relative_path: fields[1].to_string(),
                record_count: num(fields[2], "recordCount")?,
                residue_count: num(fields[3], "residueCount")?,
            };
            if entry.partition_id != partitions.len() as u64 {
                return Err(SeqIoError::malformed(
                    line_no,
                    format!(
                        "partition ids must be contiguous from 0; expected {}, found {}",
                        partitions.len(),
                        entry.partition_id
                    ),
                ));
            }
            partitions.push(entry);
        }
        Ok(PartitionManifest { format_version: FORMAT_VERSION, partitions, base_dir: base_dir.into() })
    }

    /// Reads a manifest file; shard paths resolve against its directory.
    pub fn read(path: impl AsRef<Path>) -> Result<Self, SeqIoError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SeqIoError::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.base_dir.join(MANIFEST_FILE_NAME)
    }
}

/// One shard of the reference database: the unit a map task scans.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub partition_id: u64,
    pub records: Vec<SequenceRecord>,
}

impl Partition {
    pub fn residue_count(&self) -> u64 {
        self.records.iter().map(|r| r.residues.len() as u64).sum()
    }

    pub fn size_bytes(&self) -> usize {
        self.records.iter().map(SequenceRecord::size_bytes).sum()
    }
}

fn check_unique_ids<'a>(records: impl IntoIterator<Item = &'a SequenceRecord>) -> Result<(), SeqIoError> {
    let mut seen = HashSet::new();
    for r in records {
        if !seen.insert(r.id.as_str()) {
            return Err(SeqIoError::DuplicateRecordId(r.id.clone()));
        }
    }
    Ok(())
}

/// Splits records into shards by greedy fill in input order and writes the
/// shards plus a manifest into `out_dir`. A new partition starts when adding
/// the next record would exceed the target and the current one is non-empty;
/// records are never split.
pub fn partition_reference(
    records: &[SequenceRecord],
    target_residues_per_partition: u64,
    out_dir: impl AsRef<Path>,
) -> Result<PartitionManifest, SeqIoError> {
    let out_dir = out_dir.as_ref();
    if target_residues_per_partition == 0 {
        return Err(SeqIoError::InvalidArgument("target residues per partition must be at least 1".into()));
    }
    if records.is_empty() {
        return Err(SeqIoError::InvalidArgument("no reference records to partition".into()));
    }
    if let Some(r) = records.iter().find(|r| r.residues.is_empty() || r.id.is_empty()) {
        return Err(SeqIoError::InvalidArgument(format!("record {:?} is empty or unnamed", r.id)));
    }
    check_unique_ids(records)?;

    let mut groups: Vec<&[SequenceRecord]> = Vec::new();
    let mut start = 0;
    let mut filled = 0u64;
    for (i, rec) in records.iter().enumerate() {
        let len = rec.residues.len() as u64;
        if i > start && filled + len > target_residues_per_partition {
            groups.push(&records[start..i]);
            start = i;
            filled = 0;
        }
        filled += len;
    }
    groups.push(&records[start..]);

    std::fs::create_dir_all(out_dir).map_err(|e| SeqIoError::io(out_dir, e))?;
    let mut partitions = Vec::with_capacity(groups.len());
    for (id, group) in groups.into_iter().enumerate() {
        let relative_path = format!("part-{id}.fasta");
        write_fasta_file(out_dir.join(&relative_path), group)?;
        partitions.push(PartitionEntry {
            partition_id: id as u64,
            relative_path,
            record_count: group.len() as u64,
            residue_count: group.iter().map(|r| r.residues.len() as u64).sum(),
        });
    }
    let manifest = PartitionManifest { format_version: FORMAT_VERSION, partitions, base_dir: out_dir.to_path_buf() };
    let path = manifest.manifest_path();
    std::fs::write(&path, manifest.to_text()).map_err(|e| SeqIoError::io(&path, e))?;
    Ok(manifest)
}

/// Loads one shard and cross-checks its counts against the manifest.
pub fn load_partition(manifest: &PartitionManifest, partition_id: u64) -> Result<Partition, SeqIoError> {
    let entry = manifest.entry(partition_id).ok_or(SeqIoError::UnknownPartition(partition_id))?;
    let path = manifest.shard_path(entry);
    let bytes = std::fs::read(&path).map_err(|e| SeqIoError::io(&path, e))?;
    let records = parse_fasta(&bytes)?;
    let partition = Partition { partition_id, records };
    if partition.records.len() as u64 != entry.record_count {
        return Err(SeqIoError::ManifestMismatch {
            partition: partition_id,
            reason: format!("shard has {} records, manifest says {}", partition.records.len(), entry.record_count),
        });
    }
    if partition.residue_count() != entry.residue_count {
        return Err(SeqIoError::ManifestMismatch {
            partition: partition_id,
            reason: format!("shard has {} residues, manifest says {}", partition.residue_count(), entry.residue_count),
        });
    }
    check_unique_ids(&partition.records)?;
    Ok(partition)
}
