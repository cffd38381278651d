use std::fmt;
use std::str::FromStr;

use super::{AlignError, AlignmentResult};
use crate::scoring::ScoringScheme;

/// `M` aligns a pair (match or mismatch), `I` consumes a query residue only,
/// `D` consumes a reference residue only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CigarOp {
    M,
    I,
    D,
}

impl CigarOp {
    pub fn as_char(self) -> char {
        match self {
            CigarOp::M => 'M',
            CigarOp::I => 'I',
            CigarOp::D => 'D',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CigarElem {
    pub op: CigarOp,
    pub len: u32,
}

/// Run-length edit transcript.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Cigar(Vec<CigarElem>);

impl Cigar {
    pub fn new() -> Self {
        Cigar(Vec::new())
    }

    /// Builds a CIGAR without merging, so non-canonical input survives for
    /// validation.
    pub fn from_elems(elems: Vec<CigarElem>) -> Self {
        Cigar(elems)
    }

    /// Appends `len` ops, merging into the last run when the op matches.
    pub fn push(&mut self, op: CigarOp, len: u32) {
        if len == 0 {
            return;
        }
        match self.0.last_mut() {
            Some(last) if last.op == op => last.len += len,
            _ => self.0.push(CigarElem { op, len }),
        }
    }

    pub fn elems(&self) -> &[CigarElem] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Residues consumed on the query (`M` + `I`).
    pub fn query_len(&self) -> u64 {
        self.0.iter().filter(|e| e.op != CigarOp::D).map(|e| e.len as u64).sum()
    }

    /// Residues consumed on the reference (`M` + `D`).
    pub fn ref_len(&self) -> u64 {
        self.0.iter().filter(|e| e.op != CigarOp::I).map(|e| e.len as u64).sum()
    }

    pub(crate) fn reverse(&mut self) {
        self.0.reverse();
    }
}

impl fmt::Display for Cigar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.0 {
            write!(f, "{}{}", e.len, e.op.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for Cigar {
    type Err = AlignError;

    /// Parses `"3M1I2M"`. The empty string and `"*"` both give an empty CIGAR.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() || s == "*" {
            return Ok(Cigar::new());
        }
        let mut elems = Vec::new();
        let mut num: Option<u32> = None;
        for c in s.chars() {
            if let Some(d) = c.to_digit(10) {
                num = Some(
                    num.unwrap_or(0)
                        .checked_mul(10)
                        .and_then(|n| n.checked_add(d))
                        .ok_or_else(|| AlignError::InvalidCigar(format!("run length overflow in {s:?}")))?,
                );
                continue;
            }
            let op = match c {
                'M' => CigarOp::M,
                'I' => CigarOp::I,
                'D' => CigarOp::D,
                other => return Err(AlignError::InvalidCigar(format!("unsupported op {other:?}"))),
            };
            let len = num.take().ok_or_else(|| AlignError::InvalidCigar(format!("op {c:?} without a length")))?;
            elems.push(CigarElem { op, len });
        }
        if num.is_some() {
            return Err(AlignError::InvalidCigar(format!("trailing length in {s:?}")));
        }
        Ok(Cigar(elems))
    }
}

/// Checks canonical form and that the CIGAR consumes exactly the given spans.
pub fn cigar_validate(cigar: &Cigar, query_span: u64, ref_span: u64) -> Result<(), AlignError> {
    for (i, e) in cigar.0.iter().enumerate() {
        if e.len == 0 {
            return Err(AlignError::InvalidCigar(format!("zero-length op at {i}")));
        }
        if i > 0 && cigar.0[i - 1].op == e.op {
            return Err(AlignError::InvalidCigar(format!("adjacent {} runs at {i}", e.op.as_char())));
        }
    }
    if cigar.query_len() != query_span {
        return Err(AlignError::InvalidCigar(format!(
            "consumes {} query residues, span is {query_span}",
            cigar.query_len()
        )));
    }
    if cigar.ref_len() != ref_span {
        return Err(AlignError::InvalidCigar(format!(
            "consumes {} reference residues, span is {ref_span}",
            cigar.ref_len()
        )));
    }
    Ok(())
}

/// Re-scores an alignment by walking its CIGAR: matrix scores for `M`
/// columns, `gap_open + (L - 1) * gap_extend` for each `I`/`D` run.
pub fn score_from_cigar(
    query: &[u8],
    reference: &[u8],
    result: &AlignmentResult,
    scheme: &ScoringScheme,
) -> Result<i32, AlignError> {
    if result.cigar.is_empty() {
        if result.query_span() != 0 || result.ref_span() != 0 {
            return Err(AlignError::InvalidCigar("empty CIGAR over a non-empty span".into()));
        }
        return Ok(0);
    }
    // One side may be empty (end == begin - 1) when only gaps consume it.
    let in_bounds = |b: i64, e: i64, len: usize| b >= 0 && b <= len as i64 && e >= b - 1 && e < len as i64;
    if !in_bounds(result.query_begin, result.query_end, query.len()) {
        return Err(AlignError::InvalidCigar(format!(
            "query coordinates {}..={} outside sequence of length {}",
            result.query_begin,
            result.query_end,
            query.len()
        )));
    }
    if !in_bounds(result.ref_begin, result.ref_end, reference.len()) {
        return Err(AlignError::InvalidCigar(format!(
            "reference coordinates {}..={} outside sequence of length {}",
            result.ref_begin,
            result.ref_end,
            reference.len()
        )));
    }
    cigar_validate(&result.cigar, result.query_span() as u64, result.ref_span() as u64)?;

    let mut qi = result.query_begin as usize;
    let mut ri = result.ref_begin as usize;
    let mut score = 0i32;
    for e in result.cigar.elems() {
        let len = e.len as usize;
        match e.op {
            CigarOp::M => {
                for k in 0..len {
                    score += scheme.matrix.lookup(query[qi + k], reference[ri + k])?;
                }
                qi += len;
                ri += len;
            }
            CigarOp::I => {
                score -= scheme.gaps.cost(len);
                qi += len;
            }
            CigarOp::D => {
                score -= scheme.gaps.cost(len);
                ri += len;
            }
        }
    }
    Ok(score)
}
