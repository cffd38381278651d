//! Substitution matrices, affine gap parameters and score lookup.
//!
//! Gap costs are stored as non-negative numbers. A gap of length `L` costs
//! `gap_open + (L - 1) * gap_extend` and is subtracted from the score.

use std::fmt::Write as _;
use std::sync::Arc;

const BLOSUM62_TEXT: &str = include_str!("../data/BLOSUM62");
const NO_INDEX: u8 = u8::MAX;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScoringError {
    #[error("malformed matrix at line {line}: {reason}")]
    MalformedMatrix { line: usize, reason: String },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("residue {:?} is not in the matrix alphabet", *.0 as char)]
    UnknownResidue(u8),
}

/// Dense square table of integer scores over an ordered alphabet.
#[derive(Clone, PartialEq, Eq)]
pub struct SubstitutionMatrix {
    alphabet: Vec<u8>,
    scores: Vec<i32>,
    index: [u8; 256],
}

impl std::fmt::Debug for SubstitutionMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SubstitutionMatrix")
            .field("alphabet", &String::from_utf8_lossy(&self.alphabet))
            .field("scores", &self.scores)
            .finish()
    }
}

impl SubstitutionMatrix {
    /// Builds a matrix from an alphabet and a row-major score table.
    pub fn new(alphabet: Vec<u8>, scores: Vec<i32>) -> Result<Self, ScoringError> {
        let n = alphabet.len();
        if n == 0 || n >= NO_INDEX as usize {
            return Err(ScoringError::InvalidParams(format!("alphabet size {n} out of range 1..{}", NO_INDEX)));
        }
        if scores.len() != n * n {
            return Err(ScoringError::InvalidParams(format!("{} scores for a {n}x{n} matrix", scores.len())));
        }
        let mut index = [NO_INDEX; 256];
        for (i, &sym) in alphabet.iter().enumerate() {
            if index[sym as usize] != NO_INDEX {
                return Err(ScoringError::InvalidParams(format!("duplicate symbol {:?}", sym as char)));
            }
            index[sym as usize] = i as u8;
        }
        Ok(SubstitutionMatrix { alphabet, scores, index })
    }

    /// Parses the NCBI text layout: `#` comments, a header row of column
    /// symbols, then one row per symbol holding its label and integer cells.
    pub fn parse_text(text: &str) -> Result<Self, ScoringError> {
        let malformed = |line: usize, reason: String| ScoringError::MalformedMatrix { line, reason };
        let mut columns: Option<Vec<u8>> = None;
        let mut row_syms = Vec::new();
        let mut scores = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut tokens = line.split_ascii_whitespace();
            let Some(cols) = columns.as_ref() else {
                let mut syms = Vec::new();
                for tok in tokens {
                    let &[b] = tok.as_bytes() else {
                        return Err(malformed(line_no, format!("column symbol {tok:?} is not one byte")));
                    };
                    if syms.contains(&b) {
                        return Err(malformed(line_no, format!("duplicate column symbol {tok:?}")));
                    }
                    syms.push(b);
                }
                columns = Some(syms);
                continue;
            };
            let label = tokens.next().unwrap_or_default();
            let &[sym] = label.as_bytes() else {
                return Err(malformed(line_no, format!("row symbol {label:?} is not one byte")));
            };
            if row_syms.contains(&sym) {
                return Err(malformed(line_no, format!("duplicate row symbol {label:?}")));
            }
            let cells = tokens
                .map(|t| t.parse::<i32>().map_err(|_| malformed(line_no, format!("non-integer cell {t:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            if cells.len() != cols.len() {
                return Err(malformed(
                    line_no,
                    format!("row {label:?} has {} values for {} columns", cells.len(), cols.len()),
                ));
            }
            row_syms.push(sym);
            scores.extend(cells);
        }
        let columns = columns.ok_or_else(|| malformed(0, "no header row".into()))?;
        if row_syms.len() != columns.len() {
            return Err(malformed(0, format!("{} rows for {} columns", row_syms.len(), columns.len())));
        }
        // Rows may be listed in a different order than columns; reorder to
        // the column order so the table is indexed consistently.
        let n = columns.len();
        let mut ordered = vec![0; n * n];
        for (r, sym) in row_syms.iter().enumerate() {
            let Some(target) = columns.iter().position(|c| c == sym) else {
                return Err(malformed(0, format!("row symbol {:?} has no column", *sym as char)));
            };
            ordered[target * n..(target + 1) * n].copy_from_slice(&scores[r * n..(r + 1) * n]);
        }
        let matrix = SubstitutionMatrix::new(columns, ordered).map_err(|e| malformed(0, e.to_string()))?;
        if !matrix.is_symmetric() {
            log::warn!("substitution matrix is not symmetric");
        }
        Ok(matrix)
    }

    /// Writes the NCBI text layout that [`parse_text`](Self::parse_text) reads.
    pub fn to_text(&self) -> String {
        let width = self.scores.iter().map(|s| s.to_string().len()).max().unwrap_or(1) + 1;
        let mut out = String::from(" ");
        for &c in &self.alphabet {
            let _ = write!(out, "{:>width$}", c as char);
        }
        out.push('\n');
        for (i, &r) in self.alphabet.iter().enumerate() {
            out.push(r as char);
            for s in self.row(i) {
                let _ = write!(out, "{s:>width$}");
            }
            out.push('\n');
        }
        out
    }

    /// The bundled NCBI BLOSUM62 matrix (24 symbols including `*`).
    pub fn blosum62() -> Self {
        Self::parse_text(BLOSUM62_TEXT).expect("bundled BLOSUM62 parses")
    }

    /// `match_score` on the diagonal, `mismatch` everywhere else.
    pub fn simple(alphabet: &[u8], match_score: i32, mismatch: i32) -> Result<Self, ScoringError> {
        if match_score <= mismatch {
            return Err(ScoringError::InvalidParams(format!("match {match_score} must exceed mismatch {mismatch}")));
        }
        let n = alphabet.len();
        let scores = (0..n * n).map(|k| if k / n == k % n { match_score } else { mismatch }).collect();
        Self::new(alphabet.to_ascii_uppercase(), scores)
    }

    pub fn alphabet(&self) -> &[u8] {
        &self.alphabet
    }

    pub fn size(&self) -> usize {
        self.alphabet.len()
    }

    pub fn row(&self, i: usize) -> &[i32] {
        let n = self.alphabet.len();
        &self.scores[i * n..(i + 1) * n]
    }

    pub fn scores(&self) -> &[i32] {
        &self.scores
    }

    pub fn index_of(&self, residue: u8) -> Option<u8> {
        match self.index[residue as usize] {
            NO_INDEX => None,
            i => Some(i),
        }
    }

    /// Score of aligning residue `a` with residue `b`.
    pub fn lookup(&self, a: u8, b: u8) -> Result<i32, ScoringError> {
        let i = self.index_of(a).ok_or(ScoringError::UnknownResidue(a))?;
        let j = self.index_of(b).ok_or(ScoringError::UnknownResidue(b))?;
        Ok(self.score_idx(i, j))
    }

    /// Score by alphabet indices, as produced by [`encode`](Self::encode).
    #[inline(always)]
    pub fn score_idx(&self, i: u8, j: u8) -> i32 {
        self.scores[i as usize * self.alphabet.len() + j as usize]
    }

    /// Maps residues to alphabet indices.
    pub fn encode(&self, residues: &[u8]) -> Result<Vec<u8>, ScoringError> {
        residues.iter().map(|&r| self.index_of(r).ok_or(ScoringError::UnknownResidue(r))).collect()
    }

    pub fn min_score(&self) -> i32 {
        self.scores.iter().copied().min().unwrap_or(0)
    }

    pub fn max_score(&self) -> i32 {
        self.scores.iter().copied().max().unwrap_or(0)
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.alphabet.len();
        (0..n).all(|i| (0..i).all(|j| self.scores[i * n + j] == self.scores[j * n + i]))
    }
}

/// Affine gap costs, both non-negative with `gap_open >= gap_extend`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GapModel {
    pub gap_open: i32,
    pub gap_extend: i32,
}

impl GapModel {
    pub fn new(gap_open: i32, gap_extend: i32) -> Result<Self, ScoringError> {
        if gap_extend < 0 || gap_open < gap_extend {
            return Err(ScoringError::InvalidParams(format!(
                "gap costs must satisfy open >= extend >= 0, got open={gap_open} extend={gap_extend}"
            )));
        }
        Ok(GapModel { gap_open, gap_extend })
    }

    /// Cost of a gap run of `len` residues.
    pub fn cost(&self, len: usize) -> i32 {
        if len == 0 {
            0
        } else {
            self.gap_open + (len as i32 - 1) * self.gap_extend
        }
    }
}

/// Matrix plus gaps. The matrix is reference-counted so schemes can be
/// shared across threads and tasks cheaply.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScoringScheme {
    pub matrix: Arc<SubstitutionMatrix>,
    pub gaps: GapModel,
}

/// Nucleotide alphabet used by the default nucleotide scheme.
pub const NUCLEOTIDE_ALPHABET: &[u8] = b"ACGTN";

impl ScoringScheme {
    pub fn new(matrix: SubstitutionMatrix, gaps: GapModel) -> Self {
        ScoringScheme { matrix: Arc::new(matrix), gaps }
    }

    /// BLOSUM62 with gap open 3, extend 1.
    pub fn default_protein() -> Self {
        Self::new(SubstitutionMatrix::blosum62(), GapModel::new(3, 1).unwrap())
    }

    /// Match 2, mismatch -2 over `ACGTN`, gap open 3, extend 1.
    pub fn default_nucleotide() -> Self {
        Self::new(SubstitutionMatrix::simple(NUCLEOTIDE_ALPHABET, 2, -2).unwrap(), GapModel::new(3, 1).unwrap())
    }
}
