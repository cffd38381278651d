//! Top-K selection of alignment hits.
//!
//! Hits are ranked by [`hit_order`]: higher score first, then reference
//! name, reference begin and query begin ascending. The remaining fields
//! break the last ties so the order is total and every reducer agrees on the
//! same prefix.

use std::cmp::Ordering;

use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};

use crate::align::AlignmentResult;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TopKError {
    #[error("k must be at least 1, got {0}")]
    InvalidK(usize),
}

/// `Less` means `a` ranks before `b`.
pub fn hit_order(a: &AlignmentResult, b: &AlignmentResult) -> Ordering {
    b.max_score
        .cmp(&a.max_score)
        .then_with(|| a.ref_name.cmp(&b.ref_name))
        .then(a.ref_begin.cmp(&b.ref_begin))
        .then(a.query_begin.cmp(&b.query_begin))
        .then(a.ref_end.cmp(&b.ref_end))
        .then(a.query_end.cmp(&b.query_end))
        .then_with(|| a.cigar.to_string().cmp(&b.cigar.to_string()))
        .then(a.mode.cmp(&b.mode))
}

fn check_k(k: usize) -> Result<(), TopKError> {
    if k == 0 {
        Err(TopKError::InvalidK(k))
    } else {
        Ok(())
    }
}

/// Moves the `k` best hits to the front of `hits` (in no particular order)
/// and returns the number of comparisons made.
///
/// Quickselect with a median-of-three pivot and three-way partitioning. When
/// a split leaves more than three quarters of the range on the kept side,
/// the next pivot is drawn at random, which keeps the expected cost linear
/// on adversarial inputs.
pub fn select_front(hits: &mut [AlignmentResult], k: usize) -> u64 {
    let mut comparisons = 0u64;
    let mut cmp = |a: &AlignmentResult, b: &AlignmentResult| {
        comparisons += 1;
        hit_order(a, b)
    };
    let mut rng = SmallRng::seed_from_u64(0x70b_4a11);
    let (mut lo, mut hi) = (0, hits.len());
    let mut random_pivot = false;
    while hi - lo > 1 && k > lo && k < hi {
        let len = hi - lo;
        let p = if random_pivot {
            lo + rng.random_range(0..len)
        } else {
            median_of_three(hits, lo, lo + len / 2, hi - 1, &mut cmp)
        };
        hits.swap(lo, p);
        // [lo, lt) < pivot, [lt, i) == pivot, (gt, hi) > pivot
        let (mut lt, mut i, mut gt) = (lo, lo + 1, hi);
        while i < gt {
            match cmp(&hits[i], &hits[lt]) {
                Ordering::Less => {
                    hits.swap(i, lt);
                    lt += 1;
                    i += 1;
                }
                Ordering::Greater => {
                    gt -= 1;
                    hits.swap(i, gt);
                }
                Ordering::Equal => i += 1,
            }
        }
        let (new_lo, new_hi) = if k <= lt {
            (lo, lt)
        } else if k >= gt {
            (gt, hi)
        } else {
            break;
        };
        random_pivot = (new_hi - new_lo) * 4 > len * 3;
        lo = new_lo;
        hi = new_hi;
    }
    comparisons
}

fn median_of_three(
    hits: &[AlignmentResult],
    a: usize,
    b: usize,
    c: usize,
    cmp: &mut impl FnMut(&AlignmentResult, &AlignmentResult) -> Ordering,
) -> usize {
    let ab = cmp(&hits[a], &hits[b]) == Ordering::Less;
    let bc = cmp(&hits[b], &hits[c]) == Ordering::Less;
    if ab == bc {
        return b;
    }
    let ac = cmp(&hits[a], &hits[c]) == Ordering::Less;
    if ab == ac {
        c
    } else {
        a
    }
}

/// The `k` best hits, unordered. Returns all hits when there are fewer.
pub fn partial_topk(mut hits: Vec<AlignmentResult>, k: usize) -> Result<Vec<AlignmentResult>, TopKError> {
    check_k(k)?;
    if hits.len() > k {
        select_front(&mut hits, k);
        hits.truncate(k);
    }
    Ok(hits)
}

/// Combines partial top-K lists into one partial top-K list.
pub fn merge_topk(
    lists: impl IntoIterator<Item = Vec<AlignmentResult>>,
    k: usize,
) -> Result<Vec<AlignmentResult>, TopKError> {
    check_k(k)?;
    let all: Vec<_> = lists.into_iter().flatten().collect();
    partial_topk(all, k)
}

/// Sorts by rank and keeps at most `k` hits.
pub fn finalize_topk(mut hits: Vec<AlignmentResult>, k: usize) -> Result<Vec<AlignmentResult>, TopKError> {
    check_k(k)?;
    if hits.len() > k {
        select_front(&mut hits, k);
        hits.truncate(k);
    }
    hits.sort_by(hit_order);
    Ok(hits)
}

/// Streaming top-K with a buffer of at most `2k` hits.
#[derive(Debug, Clone)]
pub struct TopK {
    k: usize,
    buf: Vec<AlignmentResult>,
}

impl TopK {
    pub fn new(k: usize) -> Result<Self, TopKError> {
        check_k(k)?;
        Ok(TopK { k, buf: Vec::new() })
    }

    pub fn push(&mut self, hit: AlignmentResult) {
        self.buf.push(hit);
        if self.buf.len() >= 2 * self.k {
            select_front(&mut self.buf, self.k);
            self.buf.truncate(self.k);
        }
    }

    pub fn extend(&mut self, hits: impl IntoIterator<Item = AlignmentResult>) {
        for h in hits {
            self.push(h);
        }
    }

    /// The best `k` hits, unordered.
    pub fn into_partial(mut self) -> Vec<AlignmentResult> {
        if self.buf.len() > self.k {
            select_front(&mut self.buf, self.k);
            self.buf.truncate(self.k);
        }
        self.buf
    }

    pub fn into_sorted(self) -> Vec<AlignmentResult> {
        let k = self.k;
        finalize_topk(self.into_partial(), k).expect("k validated at construction")
    }
}
