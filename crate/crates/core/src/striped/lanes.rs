//! Fixed-width vectors of unsigned saturating cells.
//!
//! The kernel is written against [`LaneVector`]. A portable array backend
//! covers every lane count; on x86-64 the 16x8-bit and 8x16-bit shapes map
//! onto SSE2 registers.

/// Unsigned score cell.
pub trait Cell: Copy + Default + Ord + std::fmt::Debug + Send + Sync + 'static {
    const BITS: u32;
    const MAX: Self;
    fn from_u32(v: u32) -> Self;
    fn to_u32(self) -> u32;
    fn sat_add(self, o: Self) -> Self;
    fn sat_sub(self, o: Self) -> Self;
}

macro_rules! impl_cell {
    ($t:ty) => {
        impl Cell for $t {
            const BITS: u32 = <$t>::BITS;
            const MAX: Self = <$t>::MAX;
            #[inline(always)]
            fn from_u32(v: u32) -> Self {
                v.min(<$t>::MAX as u32) as $t
            }
            #[inline(always)]
            fn to_u32(self) -> u32 {
                self as u32
            }
            #[inline(always)]
            fn sat_add(self, o: Self) -> Self {
                self.saturating_add(o)
            }
            #[inline(always)]
            fn sat_sub(self, o: Self) -> Self {
                self.saturating_sub(o)
            }
        }
    };
}
impl_cell!(u8);
impl_cell!(u16);

pub trait LaneVector: Copy {
    type Cell: Cell;
    const LANES: usize;

    fn splat(v: Self::Cell) -> Self;
    fn zero() -> Self {
        Self::splat(Self::Cell::default())
    }
    /// Loads `LANES` cells from the front of `src`.
    fn load(src: &[Self::Cell]) -> Self;
    fn store(self, dst: &mut [Self::Cell]);
    fn adds(self, o: Self) -> Self;
    fn subs(self, o: Self) -> Self;
    fn max(self, o: Self) -> Self;
    /// Lane `l` takes lane `l - 1`; lane 0 becomes zero.
    fn shift_in_zero(self) -> Self;
    /// True when some lane of `self` is strictly greater than in `o`.
    fn any_gt(self, o: Self) -> bool;
    fn hmax(self) -> Self::Cell;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Portable<T: Cell, const N: usize>(pub [T; N]);

impl<T: Cell, const N: usize> LaneVector for Portable<T, N> {
    type Cell = T;
    const LANES: usize = N;

    #[inline(always)]
    fn splat(v: T) -> Self {
        Portable([v; N])
    }
    #[inline(always)]
    fn load(src: &[T]) -> Self {
        let mut a = [T::default(); N];
        a.copy_from_slice(&src[..N]);
        Portable(a)
    }
    #[inline(always)]
    fn store(self, dst: &mut [T]) {
        dst[..N].copy_from_slice(&self.0);
    }
    #[inline(always)]
    fn adds(self, o: Self) -> Self {
        Portable(std::array::from_fn(|i| self.0[i].sat_add(o.0[i])))
    }
    #[inline(always)]
    fn subs(self, o: Self) -> Self {
        Portable(std::array::from_fn(|i| self.0[i].sat_sub(o.0[i])))
    }
    #[inline(always)]
    fn max(self, o: Self) -> Self {
        Portable(std::array::from_fn(|i| self.0[i].max(o.0[i])))
    }
    #[inline(always)]
    fn shift_in_zero(self) -> Self {
        Portable(std::array::from_fn(|i| if i == 0 { T::default() } else { self.0[i - 1] }))
    }
    #[inline(always)]
    fn any_gt(self, o: Self) -> bool {
        self.0.iter().zip(&o.0).any(|(a, b)| a > b)
    }
    #[inline(always)]
    fn hmax(self) -> T {
        self.0.iter().copied().max().unwrap_or_default()
    }
}

#[cfg(target_arch = "x86_64")]
pub use sse2::{U16x8, U8x16};

#[cfg(target_arch = "x86_64")]
mod sse2 {
    //! SSE2 is part of the x86-64 baseline, so these intrinsics are always
    //! available.
    use super::LaneVector;
    use std::arch::x86_64::*;

    #[derive(Clone, Copy, Debug)]
    pub struct U8x16(__m128i);

    #[derive(Clone, Copy, Debug)]
    pub struct U16x8(__m128i);

    impl LaneVector for U8x16 {
        type Cell = u8;
        const LANES: usize = 16;

        #[inline(always)]
        fn splat(v: u8) -> Self {
            unsafe { U8x16(_mm_set1_epi8(v as i8)) }
        }
        #[inline(always)]
        fn load(src: &[u8]) -> Self {
            let src = &src[..16];
            unsafe { U8x16(_mm_loadu_si128(src.as_ptr() as *const __m128i)) }
        }
        #[inline(always)]
        fn store(self, dst: &mut [u8]) {
            let dst = &mut dst[..16];
            unsafe { _mm_storeu_si128(dst.as_mut_ptr() as *mut __m128i, self.0) }
        }
        #[inline(always)]
        fn adds(self, o: Self) -> Self {
            unsafe { U8x16(_mm_adds_epu8(self.0, o.0)) }
        }
        #[inline(always)]
        fn subs(self, o: Self) -> Self {
            unsafe { U8x16(_mm_subs_epu8(self.0, o.0)) }
        }
        #[inline(always)]
        fn max(self, o: Self) -> Self {
            unsafe { U8x16(_mm_max_epu8(self.0, o.0)) }
        }
        #[inline(always)]
        fn shift_in_zero(self) -> Self {
            unsafe { U8x16(_mm_slli_si128::<1>(self.0)) }
        }
        #[inline(always)]
        fn any_gt(self, o: Self) -> bool {
            unsafe {
                let d = _mm_subs_epu8(self.0, o.0);
                _mm_movemask_epi8(_mm_cmpeq_epi8(d, _mm_setzero_si128())) != 0xffff
            }
        }
        #[inline(always)]
        fn hmax(self) -> u8 {
            unsafe {
                let mut v = _mm_max_epu8(self.0, _mm_srli_si128::<8>(self.0));
                v = _mm_max_epu8(v, _mm_srli_si128::<4>(v));
                v = _mm_max_epu8(v, _mm_srli_si128::<2>(v));
                v = _mm_max_epu8(v, _mm_srli_si128::<1>(v));
                (_mm_cvtsi128_si32(v) & 0xff) as u8
            }
        }
    }

    impl LaneVector for U16x8 {
        type Cell = u16;
        const LANES: usize = 8;

        #[inline(always)]
        fn splat(v: u16) -> Self {
            unsafe { U16x8(_mm_set1_epi16(v as i16)) }
        }
        #[inline(always)]
        fn load(src: &[u16]) -> Self {
            let src = &src[..8];
            unsafe { U16x8(_mm_loadu_si128(src.as_ptr() as *const __m128i)) }
        }
        #[inline(always)]
        fn store(self, dst: &mut [u16]) {
            let dst = &mut dst[..8];
            unsafe { _mm_storeu_si128(dst.as_mut_ptr() as *mut __m128i, self.0) }
        }
        #[inline(always)]
        fn adds(self, o: Self) -> Self {
            unsafe { U16x8(_mm_adds_epu16(self.0, o.0)) }
        }
        #[inline(always)]
        fn subs(self, o: Self) -> Self {
            unsafe { U16x8(_mm_subs_epu16(self.0, o.0)) }
        }
        #[inline(always)]
        fn max(self, o: Self) -> Self {
            // No unsigned 16-bit max in SSE2: max(a, b) = (a -sat b) + b.
            unsafe { U16x8(_mm_adds_epu16(_mm_subs_epu16(self.0, o.0), o.0)) }
        }
        #[inline(always)]
        fn shift_in_zero(self) -> Self {
            unsafe { U16x8(_mm_slli_si128::<2>(self.0)) }
        }
        #[inline(always)]
        fn any_gt(self, o: Self) -> bool {
            unsafe {
                let d = _mm_subs_epu16(self.0, o.0);
                _mm_movemask_epi8(_mm_cmpeq_epi16(d, _mm_setzero_si128())) != 0xffff
            }
        }
        #[inline(always)]
        fn hmax(self) -> u16 {
            let mut a = [0u16; 8];
            self.store(&mut a);
            a.into_iter().max().unwrap_or(0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_backend<V: LaneVector>(to_vec: fn(V) -> Vec<u32>) {
        let n = V::LANES;
        let max = V::Cell::MAX.to_u32();
        let a: Vec<V::Cell> = (0..n).map(|i| V::Cell::from_u32((i as u32 * 37 + 5) % (max + 1))).collect();
        let b: Vec<V::Cell> = (0..n).map(|i| V::Cell::from_u32((i as u32 * 91 + max - 3) % (max + 1))).collect();
        let (va, vb) = (V::load(&a), V::load(&b));
        let au: Vec<u32> = a.iter().map(|c| c.to_u32()).collect();
        let bu: Vec<u32> = b.iter().map(|c| c.to_u32()).collect();
        let want = |f: &dyn Fn(u32, u32) -> u32| -> Vec<u32> { au.iter().zip(&bu).map(|(&x, &y)| f(x, y)).collect() };
        assert_eq!(to_vec(va.adds(vb)), want(&|x, y| (x + y).min(max)));
        assert_eq!(to_vec(va.subs(vb)), want(&|x, y| x.saturating_sub(y)));
        assert_eq!(to_vec(va.max(vb)), want(&|x, y| x.max(y)));
        let mut shifted = vec![0];
        shifted.extend_from_slice(&au[..n - 1]);
        assert_eq!(to_vec(va.shift_in_zero()), shifted);
        assert_eq!(va.any_gt(vb), au.iter().zip(&bu).any(|(x, y)| x > y));
        assert!(!va.any_gt(va));
        assert_eq!(va.hmax().to_u32(), *au.iter().max().unwrap());
        let mut out = vec![V::Cell::default(); n];
        V::splat(V::Cell::from_u32(7)).store(&mut out);
        assert!(out.iter().all(|c| c.to_u32() == 7));
    }

    fn dump<V: LaneVector>(v: V) -> Vec<u32> {
        let mut out = vec![V::Cell::default(); V::LANES];
        v.store(&mut out);
        out.into_iter().map(|c| c.to_u32()).collect()
    }

    #[test]
    fn portable_ops() {
        check_backend::<Portable<u8, 4>>(dump);
        check_backend::<Portable<u8, 16>>(dump);
        check_backend::<Portable<u16, 8>>(dump);
        check_backend::<Portable<u16, 32>>(dump);
    }

    #[cfg(target_arch = "x86_64")]
    #[test]
    fn sse2_ops() {
        check_backend::<U8x16>(dump);
        check_backend::<U16x8>(dump);
    }
}
