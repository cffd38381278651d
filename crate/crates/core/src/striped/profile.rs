use super::lanes::Cell;
use crate::align::AlignError;
use crate::scoring::SubstitutionMatrix;

/// Striped query profile.
///
/// The query is cut into `lanes` stripes of `seg_len = ceil(n / lanes)`
/// positions; lane `l` of segment vector `v` holds query position
/// `v + l * seg_len`. Cells store `score + bias` where `bias` lifts the
/// smallest matrix entry to zero. Positions past the query end are zero.
#[derive(Clone, Debug)]
pub struct StripedProfile<C: Cell> {
    lanes: usize,
    seg_len: usize,
    query_len: usize,
    bias: u32,
    cells: Vec<C>,
}

impl<C: Cell> StripedProfile<C> {
    /// Builds the profile for an encoded query.
    pub fn build(query: &[u8], matrix: &SubstitutionMatrix, lanes: usize) -> Result<Self, AlignError> {
        if query.is_empty() {
            return Err(AlignError::EmptySequence("query"));
        }
        let bias = (-matrix.min_score()).max(0) as u32;
        let top = matrix.max_score().max(0) as u32 + bias;
        if top >= C::MAX.to_u32() {
            return Err(AlignError::QueryTooLong {
                cell_width: C::BITS,
                reason: format!("biased scores reach {top}, cell ceiling is {}", C::MAX.to_u32()),
            });
        }
        let n = query.len();
        let seg_len = n.div_ceil(lanes);
        let syms = matrix.size();
        let mut cells = vec![C::default(); syms * seg_len * lanes];
        for sym in 0..syms {
            for seg in 0..seg_len {
                let base = (sym * seg_len + seg) * lanes;
                for lane in 0..lanes {
                    let pos = seg + lane * seg_len;
                    if pos < n {
                        let s = matrix.score_idx(query[pos], sym as u8) + bias as i32;
                        cells[base + lane] = C::from_u32(s as u32);
                    }
                }
            }
        }
        Ok(StripedProfile { lanes, seg_len, query_len: n, bias, cells })
    }

    pub fn lanes(&self) -> usize {
        self.lanes
    }

    pub fn seg_len(&self) -> usize {
        self.seg_len
    }

    pub fn query_len(&self) -> usize {
        self.query_len
    }

    pub fn bias(&self) -> u32 {
        self.bias
    }

    /// All segment vectors for one reference symbol, back to back.
    #[inline(always)]
    pub fn column(&self, sym: u8) -> &[C] {
        let len = self.seg_len * self.lanes;
        &self.cells[sym as usize * len..(sym as usize + 1) * len]
    }
}
