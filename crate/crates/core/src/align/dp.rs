use super::{encode_pair, AlignError, AlignmentMode, AlignmentResult, Cigar, CigarOp};
use crate::scoring::{GapModel, ScoringScheme, SubstitutionMatrix};
use crate::seqio::SequenceRecord;

const NEG: i32 = i32::MIN / 4;

const SRC_M: u8 = 0;
const SRC_I: u8 = 1;
const SRC_D: u8 = 2;
const SRC_STOP: u8 = 3;
const I_EXT: u8 = 1 << 2;
const D_EXT: u8 = 1 << 3;

/// Best cell of a local alignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct LocalEnd {
    pub score: i32,
    pub query_end: usize,
    pub ref_end: usize,
}

/// Per-symbol query scores: `profile[sym * n + i] = score(q[i], sym)`.
fn scalar_profile(query: &[u8], matrix: &SubstitutionMatrix) -> Vec<i32> {
    let n = query.len();
    let mut profile = vec![0; matrix.size() * n];
    for sym in 0..matrix.size() {
        for (i, &q) in query.iter().enumerate() {
            profile[sym * n + i] = matrix.score_idx(q, sym as u8);
        }
    }
    profile
}

/// Linear-space Smith-Waterman pass over encoded sequences. Returns the best
/// score and its cell, scanning columns (reference) outermost so the first
/// strict improvement is the lowest reference, then query, coordinate.
pub(crate) fn local_pass(
    query: &[u8],
    reference: &[u8],
    matrix: &SubstitutionMatrix,
    gaps: GapModel,
) -> (i32, Option<(usize, usize)>) {
    let n = query.len();
    let (open, ext) = (gaps.gap_open, gaps.gap_extend);
    let profile = scalar_profile(query, matrix);
    let mut h = vec![0i32; n];
    let mut d = vec![NEG; n];
    let mut best = 0;
    let mut end = None;

    for (j, &rc) in reference.iter().enumerate() {
        let scores = &profile[rc as usize * n..(rc as usize + 1) * n];
        let mut diag = 0;
        let mut up = 0;
        let mut ins = NEG;
        let mut col_best = 0;
        let mut col_arg = 0;
        for i in 0..n {
            let dv = (h[i] - open).max(d[i] - ext);
            d[i] = dv;
            ins = (up - open).max(ins - ext);
            let hv = (diag + scores[i]).max(ins).max(dv).max(0);
            diag = h[i];
            h[i] = hv;
            up = hv;
            if hv > col_best {
                col_best = hv;
                col_arg = i;
            }
        }
        if col_best > best {
            best = col_best;
            end = Some((col_arg, j));
        }
    }
    (best, end)
}

/// Score and end cell of the optimal local alignment, without traceback.
pub fn local_score(
    query: &[u8],
    reference: &[u8],
    scheme: &ScoringScheme,
) -> Result<(i32, Option<(usize, usize)>), AlignError> {
    let (q, r) = encode_pair(query, reference, &scheme.matrix)?;
    Ok(local_pass(&q, &r, &scheme.matrix, scheme.gaps))
}

/// Begin cell of the local alignment ending at `end`, found by a local pass
/// over the reversed prefixes `q[..=query_end]`, `r[..=ref_end]`.
pub(crate) fn scalar_begin(
    query: &[u8],
    reference: &[u8],
    matrix: &SubstitutionMatrix,
    gaps: GapModel,
    end: LocalEnd,
) -> Result<(usize, usize), AlignError> {
    let qrev: Vec<u8> = query[..=end.query_end].iter().rev().copied().collect();
    let rrev: Vec<u8> = reference[..=end.ref_end].iter().rev().copied().collect();
    match local_pass(&qrev, &rrev, matrix, gaps) {
        (score, Some((qi, rj))) if score == end.score => Ok((end.query_end - qi, end.ref_end - rj)),
        (score, _) => {
            Err(AlignError::InternalMismatch(format!("reverse pass scored {score}, forward pass {}", end.score)))
        }
    }
}

/// Allowed diagonals `j - i` of a DP restricted to a band.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Band {
    lo: i64,
    hi: i64,
}

impl Band {
    pub fn full(rows: usize, cols: usize) -> Self {
        Band { lo: -(rows as i64), hi: cols as i64 }
    }

    /// Band containing the diagonals of both rectangle corners, widened by
    /// `width` on each side.
    pub fn around(rows: usize, cols: usize, width: usize) -> Self {
        let diff = cols as i64 - rows as i64;
        Band { lo: diff.min(0) - width as i64, hi: diff.max(0) + width as i64 }
    }

    fn covers(&self, rows: usize, cols: usize) -> bool {
        self.lo <= -(rows as i64) && self.hi >= cols as i64
    }

    fn row_range(&self, i: usize, cols: usize) -> (usize, usize) {
        let lo = (i as i64 + self.lo).max(0) as usize;
        let hi = (i as i64 + self.hi).min(cols as i64).max(-1);
        (lo, hi as usize)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Boundary {
    Global,
    FreeEnds,
}

/// Filled DP: traceback directions per in-band cell.
struct Filled {
    rows: Vec<(usize, usize, usize)>,
    dirs: Vec<u8>,
    /// H of the last row, indexed by column.
    last_row: Vec<i32>,
    /// H of the last column, indexed by row.
    last_col: Vec<i32>,
}

impl Filled {
    #[inline]
    fn dir(&self, i: usize, j: usize) -> u8 {
        let (lo, _, off) = self.rows[i];
        self.dirs[off + j - lo]
    }
}

fn fill(q: &[u8], r: &[u8], matrix: &SubstitutionMatrix, gaps: GapModel, boundary: Boundary, band: Band) -> Filled {
    let (a, b) = (q.len(), r.len());
    let (open, ext) = (gaps.gap_open, gaps.gap_extend);
    let profile = scalar_profile(q, matrix);
    let mut h_prev = vec![NEG; b + 1];
    let mut h_cur = vec![NEG; b + 1];
    let mut ins = vec![NEG; b + 1];
    let mut rows = Vec::with_capacity(a + 1);
    let mut dirs = Vec::new();
    let mut last_col = vec![NEG; a + 1];
    let mut stale_lo = 0;

    // row 0
    let (lo0, hi0) = band.row_range(0, b);
    rows.push((lo0, hi0, 0));
    #[allow(clippy::needless_range_loop)]
    for j in lo0..=hi0 {
        let (h, dir) = match (boundary, j) {
            (_, 0) | (Boundary::FreeEnds, _) => (0, SRC_STOP),
            (Boundary::Global, _) => (-gaps.cost(j), SRC_D | if j > 1 { D_EXT } else { 0 }),
        };
        h_prev[j] = h;
        dirs.push(dir);
    }
    last_col[0] = if hi0 == b { h_prev[b] } else { NEG };
    let mut prev_lo = lo0;

    for i in 1..=a {
        let (lo, hi) = band.row_range(i, b);
        rows.push((lo, hi, dirs.len()));
        // h_cur holds row i-2; clear what lies left of this row's band.
        for v in &mut h_cur[stale_lo.min(lo)..lo] {
            *v = NEG;
        }
        stale_lo = prev_lo;
        prev_lo = lo;
        let row_scores = |j: usize| profile[r[j - 1] as usize * a + (i - 1)];

        let mut dval = NEG;
        let mut start = lo;
        if lo == 0 {
            let (h, dir) = match boundary {
                Boundary::FreeEnds => (0, SRC_STOP),
                Boundary::Global => (-gaps.cost(i), SRC_I | if i > 1 { I_EXT } else { 0 }),
            };
            h_cur[0] = h;
            ins[0] = if boundary == Boundary::Global { h } else { NEG };
            dirs.push(dir);
            start = 1;
        }
        for j in start..=hi {
            let i_open = h_prev[j] - open;
            let i_ext = ins[j] - ext;
            let (iv, iflag) = if i_open >= i_ext { (i_open.max(NEG), 0) } else { (i_ext.max(NEG), I_EXT) };
            ins[j] = iv;
            let d_open = if j > lo { h_cur[j - 1] - open } else { NEG };
            let d_ext = dval - ext;
            let (dv, dflag) = if d_open >= d_ext { (d_open.max(NEG), 0) } else { (d_ext.max(NEG), D_EXT) };
            dval = dv;
            let mut h = (h_prev[j - 1] + row_scores(j)).max(NEG);
            let mut src = SRC_M;
            if iv > h {
                h = iv;
                src = SRC_I;
            }
            if dv > h {
                h = dv;
                src = SRC_D;
            }
            h_cur[j] = h;
            dirs.push(src | iflag | dflag);
        }
        last_col[i] = if hi == b { h_cur[b] } else { NEG };
        // Columns right of this row's band must read as unreachable below.
        if hi < b {
            h_cur[hi + 1] = NEG;
            ins[hi + 1] = NEG;
        }
        std::mem::swap(&mut h_prev, &mut h_cur);
    }
    let (lo, hi, _) = rows[a];
    let mut last_row = vec![NEG; b + 1];
    last_row[lo..=hi].copy_from_slice(&h_prev[lo..=hi]);
    Filled { rows, dirs, last_row, last_col }
}

/// Walks directions back from `(i, j)`. Returns the CIGAR, the stop cell and
/// whether the path touched a restricting band edge.
fn traceback(
    filled: &Filled,
    mut i: usize,
    mut j: usize,
    boundary: Boundary,
    band: Band,
    rows: usize,
    cols: usize,
) -> (Cigar, usize, usize, bool) {
    #[derive(Clone, Copy)]
    enum State {
        H,
        I,
        D,
    }
    let restrict_lo = band.lo > -(rows as i64);
    let restrict_hi = band.hi < cols as i64;
    let mut touched = false;
    let mut cigar = Cigar::new();
    let mut state = State::H;
    loop {
        let diag = j as i64 - i as i64;
        touched |= (restrict_lo && diag == band.lo) || (restrict_hi && diag == band.hi);
        let dir = filled.dir(i, j);
        match state {
            State::H => {
                let at_stop = match boundary {
                    Boundary::Global => i == 0 && j == 0,
                    Boundary::FreeEnds => i == 0 || j == 0,
                };
                if at_stop {
                    break;
                }
                match dir & 3 {
                    SRC_M => {
                        cigar.push(CigarOp::M, 1);
                        i -= 1;
                        j -= 1;
                    }
                    SRC_I => state = State::I,
                    SRC_D => state = State::D,
                    _ => unreachable!("stop direction inside the matrix"),
                }
            }
            State::I => {
                cigar.push(CigarOp::I, 1);
                if dir & I_EXT == 0 {
                    state = State::H;
                }
                i -= 1;
            }
            State::D => {
                cigar.push(CigarOp::D, 1);
                if dir & D_EXT == 0 {
                    state = State::H;
                }
                j -= 1;
            }
        }
    }
    cigar.reverse();
    (cigar, i, j, touched)
}

/// Global affine alignment of two encoded sequences inside a band. Returns
/// the score, the CIGAR and whether the traceback touched a band edge that
/// actually restricts the rectangle.
pub(crate) fn rectangle_alignment(
    q: &[u8],
    r: &[u8],
    matrix: &SubstitutionMatrix,
    gaps: GapModel,
    band: Band,
) -> (i32, Cigar, bool) {
    let (a, b) = (q.len(), r.len());
    let filled = fill(q, r, matrix, gaps, Boundary::Global, band);
    let score = filled.last_row[b];
    let (cigar, _, _, touched) = traceback(&filled, a, b, Boundary::Global, band, a, b);
    (score, cigar, touched)
}

/// Default half-width added to the band around the alignment rectangle.
pub(crate) const BAND_SLACK: usize = 32;

/// CIGAR of the local alignment spanning `begin..=end`. With `banded`, the
/// rectangle DP starts with half-width `ceil(diff / 2) + 32` and doubles until
/// the banded optimum reaches the expected score without touching the band.
pub(crate) fn finish_local(
    query: &[u8],
    reference: &[u8],
    matrix: &SubstitutionMatrix,
    gaps: GapModel,
    end: LocalEnd,
    begin: (usize, usize),
    banded: bool,
) -> Result<Cigar, AlignError> {
    let (qb, rb) = begin;
    let qs = &query[qb..=end.query_end];
    let rs = &reference[rb..=end.ref_end];
    let (a, b) = (qs.len(), rs.len());
    let mut width = a.abs_diff(b).div_ceil(2) + BAND_SLACK;
    let mut band = if banded { Band::around(a, b, width) } else { Band::full(a, b) };
    loop {
        let (score, cigar, touched) = rectangle_alignment(qs, rs, matrix, gaps, band);
        let full = band.covers(a, b);
        if score == end.score && (!touched || full) {
            return Ok(cigar);
        }
        if full {
            return Err(AlignError::InternalMismatch(format!(
                "rectangle alignment scored {score}, expected {}",
                end.score
            )));
        }
        width *= 2;
        band = Band::around(a, b, width);
    }
}

pub(crate) fn local_result(ref_name: &str, end: LocalEnd, begin: (usize, usize), cigar: Cigar) -> AlignmentResult {
    AlignmentResult {
        max_score: end.score,
        ref_name: ref_name.to_string(),
        ref_begin: begin.1 as i64,
        ref_end: end.ref_end as i64,
        query_begin: begin.0 as i64,
        query_end: end.query_end as i64,
        cigar,
        mode: AlignmentMode::Local,
    }
}

/// Optimal local alignment (Smith-Waterman, affine gaps) with traceback.
pub fn sw_scalar(
    query: &SequenceRecord,
    reference: &SequenceRecord,
    scheme: &ScoringScheme,
) -> Result<AlignmentResult, AlignError> {
    let (q, r) = encode_pair(&query.residues, &reference.residues, &scheme.matrix)?;
    let (score, end) = local_pass(&q, &r, &scheme.matrix, scheme.gaps);
    let Some((query_end, ref_end)) = end else {
        return Ok(AlignmentResult::empty(&reference.id, AlignmentMode::Local));
    };
    let end = LocalEnd { score, query_end, ref_end };
    let begin = scalar_begin(&q, &r, &scheme.matrix, scheme.gaps, end)?;
    let cigar = finish_local(&q, &r, &scheme.matrix, scheme.gaps, end, begin, false)?;
    Ok(local_result(&reference.id, end, begin, cigar))
}

/// Optimal global alignment (Needleman-Wunsch, affine gaps).
pub fn nw_scalar(
    query: &SequenceRecord,
    reference: &SequenceRecord,
    scheme: &ScoringScheme,
) -> Result<AlignmentResult, AlignError> {
    let (q, r) = encode_pair(&query.residues, &reference.residues, &scheme.matrix)?;
    let band = Band::full(q.len(), r.len());
    let (score, cigar, _) = rectangle_alignment(&q, &r, &scheme.matrix, scheme.gaps, band);
    Ok(AlignmentResult {
        max_score: score,
        ref_name: reference.id.clone(),
        ref_begin: 0,
        ref_end: r.len() as i64 - 1,
        query_begin: 0,
        query_end: q.len() as i64 - 1,
        cigar,
        mode: AlignmentMode::Global,
    })
}

/// Optimal semi-global alignment: leading and trailing gaps of both
/// sequences are free. Reported coordinates and CIGAR cover only the part
/// between the free end gaps.
pub fn sg_scalar(
    query: &SequenceRecord,
    reference: &SequenceRecord,
    scheme: &ScoringScheme,
) -> Result<AlignmentResult, AlignError> {
    let (q, r) = encode_pair(&query.residues, &reference.residues, &scheme.matrix)?;
    let (a, b) = (q.len(), r.len());
    let band = Band::full(a, b);
    let filled = fill(&q, &r, &scheme.matrix, scheme.gaps, Boundary::FreeEnds, band);

    // End candidates ordered by (reference, query) coordinate: the last row
    // for columns 1..b, then the last column for rows 1..=a.
    let mut best = (NEG, a, 1);
    for j in 1..b {
        if filled.last_row[j] > best.0 {
            best = (filled.last_row[j], a, j);
        }
    }
    for i in 1..=a {
        if filled.last_col[i] > best.0 {
            best = (filled.last_col[i], i, b);
        }
    }
    let (score, ei, ej) = best;
    let (cigar, si, sj, _) = traceback(&filled, ei, ej, Boundary::FreeEnds, band, a, b);
    Ok(AlignmentResult {
        max_score: score,
        ref_name: reference.id.clone(),
        ref_begin: sj as i64,
        ref_end: ej as i64 - 1,
        query_begin: si as i64,
        query_end: ei as i64 - 1,
        cigar,
        mode: AlignmentMode::SemiGlobal,
    })
}
