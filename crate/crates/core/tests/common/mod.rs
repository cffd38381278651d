//! Shared helpers for integration tests: exhaustive alignment oracles and
//! random inputs.
#![allow(dead_code)]

pub mod parser_cases;

use dsa::scoring::{GapModel, ScoringScheme, SubstitutionMatrix};
use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};

#[derive(Clone, Copy, PartialEq)]
enum Op {
    M,
    I,
    D,
}

/// Calls `visit` with the score of every alignment of `q` against `r`
/// (every interleaving of M, I and D columns, adjacent I/D runs allowed).
fn enumerate(q: &[u8], r: &[u8], scheme: &ScoringScheme, visit: &mut dyn FnMut(i32)) {
    #[allow(clippy::too_many_arguments)]
    fn rec(
        q: &[u8],
        r: &[u8],
        i: usize,
        j: usize,
        last: Option<Op>,
        score: i32,
        s: &ScoringScheme,
        visit: &mut dyn FnMut(i32),
    ) {
        if i == q.len() && j == r.len() {
            visit(score);
            return;
        }
        let gap = |op: Op| {
            if last == Some(op) {
                s.gaps.gap_extend
            } else {
                s.gaps.gap_open
            }
        };
        if i < q.len() && j < r.len() {
            let m = s.matrix.lookup(q[i], r[j]).unwrap();
            rec(q, r, i + 1, j + 1, Some(Op::M), score + m, s, visit);
        }
        if i < q.len() {
            rec(q, r, i + 1, j, Some(Op::I), score - gap(Op::I), s, visit);
        }
        if j < r.len() {
            rec(q, r, i, j + 1, Some(Op::D), score - gap(Op::D), s, visit);
        }
    }
    rec(q, r, 0, 0, None, 0, scheme, visit);
}

fn best_of(q: &[u8], r: &[u8], scheme: &ScoringScheme) -> i32 {
    let mut best = i32::MIN;
    enumerate(q, r, scheme, &mut |s| best = best.max(s));
    best
}

pub struct LocalOracle {
    pub score: i32,
    /// `(query_end, ref_end)` chosen by lowest reference then query end.
    pub end: Option<(usize, usize)>,
}

/// Best local alignment over all non-empty sub-rectangles.
pub fn brute_local(q: &[u8], r: &[u8], scheme: &ScoringScheme) -> LocalOracle {
    let mut best = 0;
    let mut end: Option<(usize, usize)> = None;
    for qb in 0..q.len() {
        for qe in qb..q.len() {
            for rb in 0..r.len() {
                for re in rb..r.len() {
                    let s = best_of(&q[qb..=qe], &r[rb..=re], scheme);
                    let better = s > best || (s == best && s > 0 && end.is_some_and(|(eq, er)| (re, qe) < (er, eq)));
                    if better {
                        best = s;
                        end = Some((qe, re));
                    }
                }
            }
        }
    }
    LocalOracle { score: best, end }
}

pub fn brute_global(q: &[u8], r: &[u8], scheme: &ScoringScheme) -> i32 {
    best_of(q, r, scheme)
}

/// Semi-global optimum: start on the first row or column, end on the last
/// row (column >= 1) or last column (row >= 1), in DP cell coordinates.
pub fn brute_semiglobal(q: &[u8], r: &[u8], scheme: &ScoringScheme) -> i32 {
    let (n, m) = (q.len(), r.len());
    let mut best = i32::MIN;
    for si in 0..=n {
        for sj in 0..=m {
            if si != 0 && sj != 0 {
                continue;
            }
            for ei in si..=n {
                for ej in sj..=m {
                    let ends = (ei == n && ej >= 1) || (ej == m && ei >= 1);
                    if !ends {
                        continue;
                    }
                    best = best.max(best_of(&q[si..ei], &r[sj..ej], scheme));
                }
            }
        }
    }
    best
}

pub fn dna_scheme(m: i32, x: i32, open: i32, ext: i32) -> ScoringScheme {
    ScoringScheme::new(SubstitutionMatrix::simple(b"ACGT", m, x).unwrap(), GapModel::new(open, ext).unwrap())
}

pub fn random_seq(rng: &mut SmallRng, alphabet: &[u8], len: usize) -> Vec<u8> {
    (0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect()
}

/// Random DNA-alphabet scheme with scores in `lo..=hi` (not necessarily
/// symmetric) and random gap costs.
pub fn random_scheme(rng: &mut SmallRng, lo: i32, hi: i32) -> ScoringScheme {
    let scores = (0..16).map(|_| rng.random_range(lo..=hi)).collect();
    let matrix = SubstitutionMatrix::new(b"ACGT".to_vec(), scores).unwrap();
    let ext = rng.random_range(0..=3);
    let open = ext + rng.random_range(0..=4);
    ScoringScheme::new(matrix, GapModel::new(open, ext).unwrap())
}

pub fn rng(seed: u64) -> SmallRng {
    SmallRng::seed_from_u64(seed)
}
