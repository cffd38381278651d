//! Synthetic reference and query sets.
//!
//! Residues are i.i.d. uniform over the alphabet, drawn from SplitMix64
//! seeded with `seed` (state = seed, standard increment and finalizer).
//! Every draw takes one `next_u64` value `x` and maps it to `[0, n)` as
//! `((x >> 32) * n) >> 32`. The draw order is: for each reference record,
//! its length, then its residues; then the residues for each query in
//! ladder order. This fixes the output bytes for a given configuration.

use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::seqio::{write_fasta_file, SeqIoError, SequenceRecord};

pub const REFERENCE_FILE: &str = "reference.fasta";
pub const QUERIES_FILE: &str = "queries.fasta";

/// 8, 16, ..., 4096.
pub fn default_query_ladder() -> Vec<usize> {
    (3..=12).map(|e| 1usize << e).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetGenConfig {
    pub seed: u64,
    pub alphabet: Vec<u8>,
    pub min_record_len: usize,
    pub max_record_len: usize,
    pub target_reference_residues: u64,
    pub query_lengths: Vec<usize>,
}

impl Default for DatasetGenConfig {
    fn default() -> Self {
        DatasetGenConfig {
            seed: 1,
            alphabet: b"ACGT".to_vec(),
            min_record_len: 200,
            max_record_len: 400,
            target_reference_residues: 1_000_000,
            query_lengths: default_query_ladder(),
        }
    }
}

impl DatasetGenConfig {
    pub fn validate(&self) -> Result<(), SeqIoError> {
        let bad = |m: &str| Err(SeqIoError::InvalidArgument(m.into()));
        if self.alphabet.is_empty() {
            return bad("alphabet is empty");
        }
        if !self.alphabet.iter().all(|b| b.is_ascii_uppercase() || *b == b'*') {
            return bad("alphabet must be uppercase letters");
        }
        if self.min_record_len == 0 || self.min_record_len > self.max_record_len {
            return bad("record lengths must satisfy 1 <= min <= max");
        }
        if self.target_reference_residues == 0 {
            return bad("target reference residues must be at least 1");
        }
        if self.query_lengths.contains(&0) {
            return bad("query lengths must be at least 1");
        }
        Ok(())
    }
}

struct Draw(SplitMix64);

impl Draw {
    fn below(&mut self, n: u64) -> u64 {
        ((self.0.next_u64() >> 32) * n) >> 32
    }

    fn residues(&mut self, alphabet: &[u8], len: usize) -> Vec<u8> {
        (0..len).map(|_| alphabet[self.below(alphabet.len() as u64) as usize]).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    pub reference: Vec<SequenceRecord>,
    pub queries: Vec<SequenceRecord>,
}

impl Dataset {
    pub fn reference_residues(&self) -> u64 {
        self.reference.iter().map(|r| r.len() as u64).sum()
    }
}

/// Reference records are added while the next one fits under the target;
/// generation stops at the first record that would overshoot, so the total
/// falls short of the target by less than one maximum record length. At
/// least one record is always produced.
pub fn generate(config: &DatasetGenConfig) -> Result<Dataset, SeqIoError> {
    config.validate()?;
    let mut rng = Draw(SplitMix64::seed_from_u64(config.seed));
    let span = (config.max_record_len - config.min_record_len + 1) as u64;
    let mut reference = Vec::new();
    let mut total = 0u64;
    loop {
        let len = config.min_record_len + rng.below(span) as usize;
        if !reference.is_empty() && total + len as u64 > config.target_reference_residues {
            break;
        }
        let residues = rng.residues(&config.alphabet, len);
        reference.push(SequenceRecord::new(format!("ref{}", reference.len()), residues));
        total += len as u64;
        if total >= config.target_reference_residues {
            break;
        }
    }
    let queries = config
        .query_lengths
        .iter()
        .enumerate()
        .map(|(i, &len)| SequenceRecord::new(format!("q{i}_len{len}"), rng.residues(&config.alphabet, len)))
        .collect();
    Ok(Dataset { reference, queries })
}

/// Writes `reference.fasta` and `queries.fasta` into `out_dir`.
pub fn write_dataset(dataset: &Dataset, out_dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf), SeqIoError> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| SeqIoError::io(out_dir, e))?;
    let (r, q) = (out_dir.join(REFERENCE_FILE), out_dir.join(QUERIES_FILE));
    write_fasta_file(&r, &dataset.reference)?;
    write_fasta_file(&q, &dataset.queries)?;
    Ok((r, q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let c = DatasetGenConfig { target_reference_residues: 5000, ..Default::default() };
        assert_eq!(generate(&c).unwrap(), generate(&c).unwrap());
        let other = generate(&DatasetGenConfig { seed: 2, ..c.clone() }).unwrap();
        assert_ne!(generate(&c).unwrap().reference, other.reference);
    }

    #[test]
    fn ladder_lengths() {
        let c = DatasetGenConfig { query_lengths: vec![8, 16], target_reference_residues: 100, ..Default::default() };
        let d = generate(&c).unwrap();
        assert_eq!(d.queries.iter().map(SequenceRecord::len).collect::<Vec<_>>(), vec![8, 16]);
        assert_eq!(default_query_ladder().first(), Some(&8));
        assert_eq!(default_query_ladder().last(), Some(&4096));
    }

    #[test]
    fn greedy_total() {
        let c = DatasetGenConfig { target_reference_residues: 1_000_000, query_lengths: vec![], ..Default::default() };
        let d = generate(&c).unwrap();
        let total = d.reference_residues();
        assert!(total <= 1_000_000 && 1_000_000 - total < 400, "{total}");
        assert!(d.reference.iter().all(|r| (200..=400).contains(&r.len())));
    }

    #[test]
    fn splitmix_reference_values() {
        // Published first outputs for seed 1234567.
        let mut r = SplitMix64::seed_from_u64(1234567);
        assert_eq!(r.next_u64(), 6457827717110365317);
        assert_eq!(r.next_u64(), 3203168211198807973);
    }

    #[test]
    fn rejects_bad_config() {
        let c = DatasetGenConfig { min_record_len: 10, max_record_len: 5, ..Default::default() };
        assert!(generate(&c).is_err());
    }
}
