//! Exact scalar dynamic-programming kernels for local (Smith-Waterman),
//! global (Needleman-Wunsch) and semi-global alignment with affine gaps.
//!
//! All three use the three-state Gotoh recurrence. `I` consumes a query
//! residue only, `D` consumes a reference residue only. When several
//! predecessors are optimal the traceback prefers `M`, then `I`, then `D`;
//! inside a gap it prefers closing over extending. Among equal maxima the
//! end cell with the lowest reference coordinate, then the lowest query
//! coordinate, wins.
//!
//! A local alignment is resolved in three steps: a linear-space pass finds
//! the score and end cell, a pass over the reversed prefixes finds the begin
//! cell, and a global DP restricted to the begin..end rectangle produces the
//! CIGAR. The vector path in [`crate::striped`] follows the same steps, so
//! both produce identical results.

mod cigar;
mod dp;

pub use cigar::{cigar_validate, score_from_cigar, Cigar, CigarElem, CigarOp};
pub(crate) use dp::{finish_local, local_pass, local_result, scalar_begin, LocalEnd};
pub use dp::{local_score, nw_scalar, sg_scalar, sw_scalar};

use std::fmt;
use std::str::FromStr;

use crate::scoring::ScoringError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlignError {
    #[error("residue {:?} is not in the matrix alphabet", *.0 as char)]
    UnknownResidue(u8),
    #[error("empty {0} sequence")]
    EmptySequence(&'static str),
    #[error("invalid CIGAR: {0}")]
    InvalidCigar(String),
    #[error("profile values do not fit {cell_width}-bit cells: {reason}")]
    QueryTooLong { cell_width: u32, reason: String },
    #[error("invalid kernel configuration: {0}")]
    InvalidConfig(String),
    #[error("internal kernel mismatch: {0}")]
    InternalMismatch(String),
}

impl From<ScoringError> for AlignError {
    fn from(e: ScoringError) -> Self {
        match e {
            ScoringError::UnknownResidue(r) => AlignError::UnknownResidue(r),
            other => AlignError::InvalidConfig(other.to_string()),
        }
    }
}

/// Which DP flavour produced an alignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlignmentMode {
    Local,
    Global,
    SemiGlobal,
}

impl AlignmentMode {
    pub const ALL: [AlignmentMode; 3] = [AlignmentMode::Local, AlignmentMode::Global, AlignmentMode::SemiGlobal];

    /// Wire code: 0 local, 1 global, 2 semi-global.
    pub fn code(self) -> u8 {
        match self {
            AlignmentMode::Local => 0,
            AlignmentMode::Global => 1,
            AlignmentMode::SemiGlobal => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.code() == code)
    }

    pub fn name(self) -> &'static str {
        match self {
            AlignmentMode::Local => "local",
            AlignmentMode::Global => "global",
            AlignmentMode::SemiGlobal => "semiglobal",
        }
    }
}

impl fmt::Display for AlignmentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlignmentMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "local" | "sw" => Ok(AlignmentMode::Local),
            "global" | "nw" => Ok(AlignmentMode::Global),
            "semiglobal" | "semi-global" | "sg" => Ok(AlignmentMode::SemiGlobal),
            other => Err(format!("unknown alignment mode {other:?}")),
        }
    }
}

/// One alignment of a query against a named reference record.
///
/// Coordinates are 0-based and inclusive. An empty local alignment (score 0)
/// has all four coordinates set to -1 and an empty CIGAR.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AlignmentResult {
    pub max_score: i32,
    pub ref_name: String,
    pub ref_begin: i64,
    pub ref_end: i64,
    pub query_begin: i64,
    pub query_end: i64,
    pub cigar: Cigar,
    pub mode: AlignmentMode,
}

impl AlignmentResult {
    pub fn empty(ref_name: impl Into<String>, mode: AlignmentMode) -> Self {
        AlignmentResult {
            max_score: 0,
            ref_name: ref_name.into(),
            ref_begin: -1,
            ref_end: -1,
            query_begin: -1,
            query_end: -1,
            cigar: Cigar::default(),
            mode,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.cigar.is_empty()
    }

    pub fn query_span(&self) -> usize {
        span(self.query_begin, self.query_end)
    }

    pub fn ref_span(&self) -> usize {
        span(self.ref_begin, self.ref_end)
    }
}

fn span(begin: i64, end: i64) -> usize {
    if begin < 0 || end < begin {
        0
    } else {
        (end - begin + 1) as usize
    }
}

/// Checks both sequences are non-empty and encodes them.
pub(crate) fn encode_pair(
    query: &[u8],
    reference: &[u8],
    matrix: &crate::scoring::SubstitutionMatrix,
) -> Result<(Vec<u8>, Vec<u8>), AlignError> {
    if query.is_empty() {
        return Err(AlignError::EmptySequence("query"));
    }
    if reference.is_empty() {
        return Err(AlignError::EmptySequence("reference"));
    }
    Ok((matrix.encode(query)?, matrix.encode(reference)?))
}
