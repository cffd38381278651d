//! Sequence ingestion: FASTA/FASTQ parsing and writing, format conversion,
//! and splitting reference databases into manifest-described partitions.
//!
//! Residues are uppercased on ingest. The parser only enforces the file
//! format; whether a residue can be scored is decided later by the
//! substitution matrix.

mod fasta;
mod fastq;
mod partition;

pub use fasta::{parse_fasta, read_fasta_file, write_fasta, write_fasta_file};
pub use fastq::{parse_fastq, write_fastq};
pub use partition::{
    load_partition, partition_reference, Partition, PartitionEntry, PartitionManifest, MANIFEST_FILE_NAME,
    MANIFEST_HEADER,
};

use std::fmt;
use std::path::PathBuf;

/// Errors raised while reading, writing or partitioning sequence data.
#[derive(Debug, thiserror::Error)]
pub enum SeqIoError {
    #[error("malformed input at line {line}: {reason}")]
    MalformedInput { line: usize, reason: String },
    #[error("I/O failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown partition {0}")]
    UnknownPartition(u64),
    #[error("manifest mismatch for partition {partition}: {reason}")]
    ManifestMismatch { partition: u64, reason: String },
    #[error("duplicate record id {0:?}")]
    DuplicateRecordId(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl SeqIoError {
    pub(crate) fn malformed(line: usize, reason: impl Into<String>) -> Self {
        SeqIoError::MalformedInput { line, reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SeqIoError::IoFailure { path: path.into(), source }
    }
}

/// One named biological sequence, optionally carrying per-residue quality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SequenceRecord {
    pub id: String,
    pub description: String,
    pub residues: Vec<u8>,
    pub quality: Option<Vec<u8>>,
}

impl SequenceRecord {
    /// Builds a record without quality. Residues are uppercased.
    pub fn new(id: impl Into<String>, residues: impl AsRef<[u8]>) -> Self {
        SequenceRecord {
            id: id.into(),
            description: String::new(),
            residues: residues.as_ref().to_ascii_uppercase(),
            quality: None,
        }
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    pub fn with_quality(mut self, quality: impl Into<Vec<u8>>) -> Self {
        self.quality = Some(quality.into());
        self
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    /// The header text without the leading `>`/`@`.
    pub fn header(&self) -> String {
        if self.description.is_empty() {
            self.id.clone()
        } else {
            format!("{} {}", self.id, self.description)
        }
    }

    /// Approximate resident size, used for cache accounting.
    pub fn size_bytes(&self) -> usize {
        self.id.len() + self.description.len() + self.residues.len() + self.quality.as_ref().map_or(0, Vec::len)
    }
}

impl fmt::Debug for SequenceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct("SequenceRecord");
        s.field("id", &self.id)
            .field("description", &self.description)
            .field("residues", &String::from_utf8_lossy(&self.residues));
        if let Some(q) = &self.quality {
            s.field("quality", &String::from_utf8_lossy(q));
        }
        s.finish()
    }
}

/// Splits a header line (without the marker byte) into id and description.
pub(crate) fn split_header(header: &str) -> (String, String) {
    let header = header.trim();
    match header.find(|c: char| c.is_ascii_whitespace()) {
        Some(pos) => (header[..pos].to_string(), header[pos..].trim_start().to_string()),
        None => (header.to_string(), String::new()),
    }
}

/// Residue bytes accepted on ingest: letters (uppercased) and the `*`
/// terminator symbol that standard protein matrices carry.
pub(crate) fn is_residue_byte(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'*'
}

/// Detected on-disk sequence format.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeqFormat {
    Fasta,
    Fastq,
}

impl SeqFormat {
    /// Sniffs the first non-blank byte: `>` is FASTA, `@` is FASTQ.
    pub fn detect(input: &[u8]) -> Option<SeqFormat> {
        match input.iter().find(|b| !b.is_ascii_whitespace()) {
            Some(b'>') => Some(SeqFormat::Fasta),
            Some(b'@') => Some(SeqFormat::Fastq),
            _ => None,
        }
    }
}

/// Parses either format, sniffing the first byte.
pub fn parse_any(input: &[u8]) -> Result<Vec<SequenceRecord>, SeqIoError> {
    match SeqFormat::detect(input) {
        Some(SeqFormat::Fastq) => parse_fastq(input),
        _ => parse_fasta(input),
    }
}

/// Reads a FASTA or FASTQ file, sniffing the format.
pub fn read_sequence_file(path: impl AsRef<std::path::Path>) -> Result<Vec<SequenceRecord>, SeqIoError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| SeqIoError::io(path, e))?;
    parse_any(&bytes)
}

/// Converts records between formats. FASTQ output needs quality; records
/// without it get `fill_quality` repeated over their length.
pub fn convert(records: &[SequenceRecord], to: SeqFormat, fill_quality: u8) -> Result<Vec<u8>, SeqIoError> {
    let mut out = Vec::new();
    match to {
        SeqFormat::Fasta => {
            let stripped: Vec<SequenceRecord> =
                records.iter().map(|r| SequenceRecord { quality: None, ..r.clone() }).collect();
            write_fasta(&mut out, &stripped).map_err(|e| SeqIoError::io("<buffer>", e))?;
        }
        SeqFormat::Fastq => {
            if !(b'!'..=b'~').contains(&fill_quality) {
                return Err(SeqIoError::InvalidArgument(format!("fill quality byte {fill_quality} is not printable")));
            }
            let filled: Vec<SequenceRecord> = records
                .iter()
                .map(|r| {
                    let mut r = r.clone();
                    if r.quality.is_none() {
                        r.quality = Some(vec![fill_quality; r.residues.len()]);
                    }
                    r
                })
                .collect();
            write_fastq(&mut out, &filled).map_err(|e| SeqIoError::io("<buffer>", e))?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_split() {
        assert_eq!(split_header("s1 desc"), ("s1".into(), "desc".into()));
        assert_eq!(split_header("s1"), ("s1".into(), "".into()));
        assert_eq!(split_header("s1\tmore  words "), ("s1".into(), "more  words".into()));
    }

    #[test]
    fn detect_format() {
        assert_eq!(SeqFormat::detect(b"\n>a\nAC\n"), Some(SeqFormat::Fasta));
        assert_eq!(SeqFormat::detect(b"@r\nAC\n+\nII\n"), Some(SeqFormat::Fastq));
        assert_eq!(SeqFormat::detect(b"ACGT"), None);
    }

    #[test]
    fn fastq_to_fasta_and_back() {
        let fq = parse_fastq(b"@r1 x\nACGT\n+\nIIII\n").unwrap();
        let fa = convert(&fq, SeqFormat::Fasta, b'I').unwrap();
        assert_eq!(fa, b">r1 x\nACGT\n");
        let back = convert(&parse_fasta(&fa).unwrap(), SeqFormat::Fastq, b'#').unwrap();
        assert_eq!(back, b"@r1 x\nACGT\n+\n####\n");
    }
}
